//! Exhaustive search over piecewise-constant schedules on a uniform cell
//! grid. This is the ground truth that the water-filling solver and the
//! bang-bang structure are checked against on desk-sized instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::bound_general;
use crate::costate::{channel_profile, ChannelProfile, TerminalCostate};
use crate::dynamics::{objective_value, simulate_with};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, spectral_decompose};
use crate::problem::{CampaignProblem, ObjectiveKind};
use crate::schedule::{BangBangSchedule, ChannelSchedule, ControlSignal, Interval};

pub const MAX_AGENTS: usize = 8;
pub const MAX_CHANNELS: usize = 2;
pub const MAX_GRID: usize = 16;
/// Upper limit on crossed candidates, about two million.
pub const DEFAULT_GUARD: u128 = 1 << 21;
pub const SIGMOID_STEPS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumerationSpec {
    pub switch_grid: usize,
    /// `None` takes each channel's general switch bound.
    pub max_switches_per_channel: Option<usize>,
    pub include_interior_levels: bool,
    /// Interior levels `u_max * k / (interior_levels + 1)` in falsification mode.
    pub interior_levels: usize,
    pub guard: u128,
}

impl EnumerationSpec {
    pub fn new(switch_grid: usize) -> Self {
        EnumerationSpec {
            switch_grid,
            max_switches_per_channel: None,
            include_interior_levels: false,
            interior_levels: 1,
            guard: DEFAULT_GUARD,
        }
    }

    fn level_count(&self) -> usize {
        if self.include_interior_levels {
            self.interior_levels + 2
        } else {
            2
        }
    }
}

/// Per channel, a control level for each of `grid` equal cells of `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSchedule {
    pub horizon: f64,
    pub u_max: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
}

impl CellSchedule {
    pub fn grid(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    fn cell_width(&self) -> f64 {
        self.horizon / self.grid() as f64
    }

    pub fn is_extreme(&self) -> bool {
        self.levels
            .iter()
            .zip(&self.u_max)
            .all(|(ls, &u)| ls.iter().all(|&l| l == 0.0 || l == u))
    }

    /// Merges full-rate cells into on-intervals; `None` if some level is
    /// interior.
    pub fn to_bang_bang(&self) -> Option<BangBangSchedule> {
        if !self.is_extreme() {
            return None;
        }
        let w = self.cell_width();
        let channels = self
            .levels
            .iter()
            .zip(&self.u_max)
            .map(|(ls, &u_max)| {
                let mut on_intervals: Vec<Interval> = Vec::new();
                for (c, &l) in ls.iter().enumerate() {
                    if l == 0.0 {
                        continue;
                    }
                    let (a, b) = (c as f64 * w, if c + 1 == ls.len() { self.horizon } else { (c + 1) as f64 * w });
                    match on_intervals.last_mut() {
                        Some(last) if last.end == a => last.end = b,
                        _ => on_intervals.push(Interval::new(a, b)),
                    }
                }
                ChannelSchedule { u_max, on_intervals }
            })
            .collect();
        Some(BangBangSchedule { channels })
    }
}

impl ControlSignal for CellSchedule {
    fn breakpoints(&self) -> Vec<f64> {
        let w = self.cell_width();
        (1..self.grid()).map(|c| c as f64 * w).collect()
    }

    fn efforts_at(&self, t: f64, out: &mut [f64]) {
        let g = self.grid();
        let c = ((t / self.cell_width()) as usize).min(g.saturating_sub(1));
        for (o, ls) in out.iter_mut().zip(&self.levels) {
            *o = ls[c];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub schedule: CellSchedule,
    pub value: f64,
    pub spend: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best: Scored,
    /// Best candidate using only the levels 0 and `u_max`.
    pub best_extreme: Scored,
    pub candidates: u128,
    pub feasible: u64,
    pub switch_caps: Vec<usize>,
}

/// Level sequences of length `grid` over `k` levels with at most `cap`
/// changes between neighbouring cells.
pub fn count_sequences(grid: usize, k: usize, cap: usize) -> u128 {
    if grid == 0 {
        return 1;
    }
    let mut total = 0u128;
    let mut binom = 1u128;
    for j in 0..=cap.min(grid - 1) {
        if j > 0 {
            binom = binom * (grid - j) as u128 / j as u128;
        }
        total += binom * k as u128 * ((k - 1) as u128).pow(j as u32);
    }
    total
}

/// Level-index sequences in lexicographic order.
fn sequences(grid: usize, k: usize, cap: usize) -> Vec<Vec<u8>> {
    fn rec(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, grid: usize, k: usize, left: usize) {
        if cur.len() == grid {
            out.push(cur.clone());
            return;
        }
        for l in 0..k as u8 {
            let change = cur.last().is_some_and(|&p| p != l);
            if change && left == 0 {
                continue;
            }
            cur.push(l);
            rec(out, cur, grid, k, left - usize::from(change));
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut out, &mut Vec::with_capacity(grid), grid, k, cap);
    out
}

/// `max_i u_max_i * max_t |h_i| * T / grid`.
pub fn grid_slack(problem: &CampaignProblem, profiles: &[ChannelProfile], grid: usize) -> f64 {
    profiles
        .iter()
        .zip(&problem.channels)
        .map(|(p, ch)| ch.u_max * p.abs_bound())
        .fold(0.0, f64::max)
        * problem.horizon
        / grid as f64
}

struct ChannelTable {
    seqs: Vec<Vec<u8>>,
    spend: Vec<f64>,
    /// Linear: gain per sequence. Sigmoid: `n` response entries per sequence.
    score: Vec<f64>,
}

/// Finds the best feasible cell schedule by full enumeration. The budget may
/// be zero here, which leaves only the idle schedule.
pub fn enumerate_best(problem: &CampaignProblem, spec: &EnumerationSpec) -> Result<OracleResult> {
    let n = problem.n();
    let m = problem.m();
    let g = spec.switch_grid;
    if n > MAX_AGENTS || m > MAX_CHANNELS || m == 0 {
        return Err(Error::Contract(format!(
            "oracle handles n <= {MAX_AGENTS} and 1..={MAX_CHANNELS} channels, got n = {n}, m = {m}"
        )));
    }
    if !(2..=MAX_GRID).contains(&g) {
        return Err(Error::Contract(format!("switch_grid must lie in 2..={MAX_GRID}, got {g}")));
    }
    if !(problem.budget.is_finite() && problem.budget >= 0.0) {
        return Err(Error::Contract("budget must be finite and nonnegative".into()));
    }
    if problem.channels.iter().any(|c| c.b.len() != n) || problem.objective.p.len() != n {
        return Err(Error::Contract("dimension mismatch between graph and channels".into()));
    }

    let lap = build_laplacian(&problem.graph);
    let sd = spectral_decompose(&lap)?;
    let k = spec.level_count();
    let caps: Vec<usize> = problem
        .channels
        .iter()
        .map(|ch| spec.max_switches_per_channel.unwrap_or_else(|| bound_general(&sd, &ch.b)))
        .collect();

    let count = |grid: usize| -> u128 {
        caps.iter().map(|&c| count_sequences(grid, k, c)).product()
    };
    let total = count(g);
    if total > spec.guard {
        let suggested_grid = (2..g).rev().find(|&gg| count(gg) <= spec.guard).unwrap_or(2);
        return Err(Error::EnumerationTooLarge {
            count: total,
            guard: spec.guard,
            suggested_grid,
        });
    }

    let width = problem.horizon / g as f64;
    let cell = |c: usize| -> (f64, f64) {
        let b = if c + 1 == g { problem.horizon } else { (c + 1) as f64 * width };
        (c as f64 * width, b)
    };
    let level_value = |u_max: f64, l: u8| -> f64 {
        match l as usize {
            0 => 0.0,
            x if x == k - 1 => u_max,
            x => u_max * x as f64 / (k - 1) as f64,
        }
    };

    let sigmoid = problem.objective.kind == ObjectiveKind::Sigmoid;
    let mut free_response = Vec::new();
    let mut tables = Vec::with_capacity(m);
    if sigmoid {
        let idle = CellSchedule {
            horizon: problem.horizon,
            u_max: problem.channels.iter().map(|c| c.u_max).collect(),
            levels: vec![vec![0.0; g]; m],
        };
        free_response = simulate_with(problem, &lap, &idle, SIGMOID_STEPS)?.terminal().to_vec();
    }
    let zero_state = CampaignProblem {
        x0: vec![0.0; n],
        drift: Default::default(),
        ..problem.clone()
    };
    for (i, ch) in problem.channels.iter().enumerate() {
        // Per-cell unit responses: integrated h for linear, terminal state for sigmoid.
        let unit: Vec<Vec<f64>> = if sigmoid {
            (0..g)
                .map(|c| {
                    let mut levels = vec![vec![0.0; g]; m];
                    levels[i][c] = 1.0;
                    let pulse = CellSchedule {
                        horizon: problem.horizon,
                        u_max: vec![1.0; m],
                        levels,
                    };
                    simulate_with(&zero_state, &lap, &pulse, SIGMOID_STEPS)
                        .map(|t| t.terminal().to_vec())
                })
                .collect::<Result<_>>()?
        } else {
            let lam = TerminalCostate::new(problem.objective.p.clone())?;
            let prof = channel_profile(&sd, &lam, &ch.b, i, problem.horizon);
            (0..g)
                .map(|c| {
                    let (a, b) = cell(c);
                    vec![prof.integral(a, b)]
                })
                .collect()
        };
        let seqs = sequences(g, k, caps[i]);
        let dim = unit[0].len();
        let mut spend = Vec::with_capacity(seqs.len());
        let mut score = Vec::with_capacity(seqs.len() * dim);
        for s in &seqs {
            let mut sp = 0.0;
            let mut acc = vec![0.0; dim];
            for (c, &l) in s.iter().enumerate() {
                if l == 0 {
                    continue;
                }
                let u = level_value(ch.u_max, l);
                let (a, b) = cell(c);
                sp += ch.cost.eval(u) * (b - a);
                for (x, r) in acc.iter_mut().zip(&unit[c]) {
                    *x += u * r;
                }
            }
            spend.push(sp);
            score.extend(acc);
        }
        tables.push(ChannelTable { seqs, spend, score });
    }

    let limit = problem.budget + 1e-12 * problem.budget.max(1.0);
    let extreme_top = (k - 1) as u8;
    let is_extreme = |s: &[u8]| s.iter().all(|&l| l == 0 || l == extreme_top);
    let evaluate = |idx: &[usize]| -> Option<(f64, f64)> {
        let spend: f64 = idx.iter().zip(&tables).map(|(&j, t)| t.spend[j]).sum();
        if spend > limit {
            return None;
        }
        let value = if sigmoid {
            let mut x = free_response.clone();
            for (&j, t) in idx.iter().zip(&tables) {
                for (xi, r) in x.iter_mut().zip(&t.score[j * n..(j + 1) * n]) {
                    *xi += r;
                }
            }
            objective_value(&problem.objective, &x)
        } else {
            idx.iter().zip(&tables).map(|(&j, t)| t.score[j]).sum()
        };
        Some((value, spend))
    };

    // Best of each class as (value, spend, flat index); ties keep the lower index.
    type Best = Option<(f64, f64, usize)>;
    fn better(a: Best, b: Best) -> Best {
        match (a, b) {
            (None, x) | (x, None) => x,
            (Some(x), Some(y)) => {
                if y.0 > x.0 || (y.0 == x.0 && y.2 < x.2) {
                    Some(y)
                } else {
                    Some(x)
                }
            }
        }
    }
    let sizes: Vec<usize> = tables.iter().map(|t| t.seqs.len()).collect();
    let inner: usize = sizes[1..].iter().product();
    let (best, best_ext, feasible) = (0..sizes[0])
        .into_par_iter()
        .map(|j0| {
            let mut best: Best = None;
            let mut best_ext: Best = None;
            let mut feasible = 0u64;
            for j1 in 0..inner {
                let idx: Vec<usize> = if m == 1 { vec![j0] } else { vec![j0, j1] };
                if let Some((v, s)) = evaluate(&idx) {
                    feasible += 1;
                    let flat = j0 * inner + j1;
                    if best.is_none_or(|b| v > b.0) {
                        best = Some((v, s, flat));
                    }
                    if idx.iter().zip(&tables).all(|(&j, t)| is_extreme(&t.seqs[j]))
                        && best_ext.is_none_or(|b| v > b.0)
                    {
                        best_ext = Some((v, s, flat));
                    }
                }
            }
            (best, best_ext, feasible)
        })
        .reduce(
            || (None, None, 0),
            |a, b| (better(a.0, b.0), better(a.1, b.1), a.2 + b.2),
        );

    let build = |b: Best| -> Scored {
        let (value, spend, flat) = b.expect("the idle schedule is always feasible");
        let idx = [flat / inner, flat % inner];
        let levels = (0..m)
            .map(|i| {
                tables[i].seqs[idx[i]]
                    .iter()
                    .map(|&l| level_value(problem.channels[i].u_max, l))
                    .collect()
            })
            .collect();
        Scored {
            schedule: CellSchedule {
                horizon: problem.horizon,
                u_max: problem.channels.iter().map(|c| c.u_max).collect(),
                levels,
            },
            value,
            spend,
        }
    };
    Ok(OracleResult {
        best: build(best),
        best_extreme: build(best_ext),
        candidates: total,
        feasible,
        switch_caps: caps,
    })
}
