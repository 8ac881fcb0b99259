use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use waterline::oracle::{grid_slack, Scored};
use waterline::problem::{check_conditions, ConditionReport};
use waterline::sigmoid::initial_costate;
use waterline::sweep::{aggregate, run_sweep, SweepConfig};
use waterline::waterfill::{channel_profiles, threshold_profile, Certificate};
use waterline::{
    build_laplacian, enumerate_best, objective_value, scenarios, simulate, solve_sigmoid,
    spectral_decompose, switch_bound_report, validate_problem, BangBangSchedule, CampaignProblem,
    EnumerationSpec, Finding, ObjectiveKind, SigmoidConfig, TerminalCostate,
};

use crate::output::{float, time_grid, write_json, Csv};
use crate::Common;

/// Steps used when the objective value of a schedule is reported.
const REPORT_STEPS: usize = 4096;

/// Bad input that is neither a parse error nor a core-library error.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug)]
pub struct Findings(pub Vec<Finding>);

impl fmt::Display for Findings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "problem failed validation")?;
        for x in &self.0 {
            write!(f, "\n  {x}")?;
        }
        Ok(())
    }
}

impl std::error::Error for Findings {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

/// 0 ok, 1 I/O, 2 parse or validation, 3 numerical failure.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    use waterline::Error as E;
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Numerical(_) | E::NumericallyDisconnected { .. } | E::RetryCapExceeded { .. } => 3,
                _ => 2,
            };
        }
        if let Some(err) = cause.downcast_ref::<serde_json::Error>() {
            return if err.is_io() { 1 } else { 2 };
        }
        if cause.is::<Invalid>() || cause.is::<Findings>() {
            return 2;
        }
        if cause.is::<std::io::Error>() {
            return 1;
        }
    }
    1
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_problem(path: &Path) -> Result<CampaignProblem> {
    let text = read(path)?;
    let p: CampaignProblem =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let findings = validate_problem(&p);
    if !findings.is_empty() {
        return Err(Findings(findings)).with_context(|| format!("checking {}", path.display()));
    }
    Ok(p)
}

fn load_schedule(path: &Path, p: &CampaignProblem) -> Result<BangBangSchedule> {
    let text = read(path)?;
    let s: BangBangSchedule =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if s.channels.len() != p.m() {
        return Err(invalid(format!(
            "schedule has {} channels, problem has {}",
            s.channels.len(),
            p.m()
        )));
    }
    if !s.is_well_formed(p.horizon) {
        return Err(invalid("schedule intervals must be sorted, disjoint and inside [0, T]"));
    }
    for (i, (c, ch)) in s.channels.iter().zip(&p.channels).enumerate() {
        if !(c.u_max >= 0.0 && c.u_max <= ch.u_max) {
            return Err(invalid(format!(
                "channel {}: schedule effort {} outside [0, {}]",
                i + 1,
                c.u_max,
                ch.u_max
            )));
        }
    }
    Ok(s)
}

fn require_linear(p: &CampaignProblem, cmd: &str) -> Result<()> {
    if p.objective.kind != ObjectiveKind::Linear {
        return Err(invalid(format!("`{cmd}` needs a linear objective; use `sigmoid` instead")));
    }
    Ok(())
}

fn terminal_objective(p: &CampaignProblem, schedule: &BangBangSchedule) -> Result<f64> {
    let traj = simulate(p, schedule, REPORT_STEPS)?;
    Ok(objective_value(&p.objective, traj.terminal()))
}

#[derive(Serialize)]
struct SolveSummary {
    beta_star: f64,
    spend: f64,
    budget: f64,
    binding: bool,
    objective_gain: f64,
    objective: f64,
    resolution: usize,
    certificate: Certificate,
    conditions: ConditionReport,
}

pub fn solve(c: &Common, plot: bool, points: usize, oracle_grid: Option<usize>) -> Result<()> {
    let p = load_problem(&c.problem)?;
    require_linear(&p, "solve")?;
    let sol = waterline::solve(&p)?;
    let lap = build_laplacian(&p.graph);
    let sd = spectral_decompose(&lap)?;

    write_json(&c.out, "schedule.json", &sol.schedule)?;
    let summary = SolveSummary {
        beta_star: sol.beta_star,
        spend: sol.spend,
        budget: p.budget,
        binding: sol.binding,
        objective_gain: sol.objective_gain,
        objective: terminal_objective(&p, &sol.schedule)?,
        resolution: sol.resolution,
        certificate: sol.certificate.clone(),
        conditions: check_conditions(&p, &lap, &sd),
    };
    write_json(&c.out, "summary.json", &summary)?;

    if plot {
        let costate = TerminalCostate::new(p.objective.p.clone())?;
        let profiles = channel_profiles(&p, &sd, &costate);
        let g: Vec<_> = profiles
            .iter()
            .zip(&p.channels)
            .map(|(pr, ch)| threshold_profile(pr.clone(), ch))
            .collect();
        let m = p.m();

        let mut wl = Csv::new(
            std::iter::once("t".to_string())
                .chain((1..=m).map(|i| format!("g_{i}")))
                .chain(std::iter::once("beta".to_string())),
        );
        let mut hp = Csv::new(std::iter::once("t".to_string()).chain((1..=m).map(|i| format!("h_{i}"))));
        for t in time_grid(p.horizon, points) {
            let mut row = vec![float(t)];
            row.extend(g.iter().map(|x| float(x.eval(t))));
            row.push(float(sol.beta_star));
            wl.push(row);
            let mut row = vec![float(t)];
            row.extend(profiles.iter().map(|x| float(x.eval_h(t))));
            hp.push(row);
        }
        wl.write(&c.out, "waterline.csv")?;
        hp.write(&c.out, "profiles.csv")?;

        let mut bis = Csv::new(["beta", "spend"]);
        for s in &sol.bisection {
            bis.push([float(s.beta), float(s.spend)]);
        }
        bis.write(&c.out, "bisection.csv")?;
    }

    if let Some(grid) = oracle_grid {
        let spec = EnumerationSpec::new(grid);
        let report = compare(&p, &spec, sol.objective_gain)?;
        write_json(&c.out, "oracle.json", &report)?;
    }
    Ok(())
}

pub fn trajectory(c: &Common, schedule: Option<&Path>, solve: bool, steps: usize) -> Result<()> {
    let p = load_problem(&c.problem)?;
    let sched = match (schedule, solve) {
        (Some(path), _) => load_schedule(path, &p)?,
        (None, true) => match p.objective.kind {
            ObjectiveKind::Linear => waterline::solve(&p)?.schedule,
            ObjectiveKind::Sigmoid => solve_sigmoid(&p, &SigmoidConfig::default())?.solution.schedule,
        },
        (None, false) => BangBangSchedule::idle(&p),
    };
    let traj = simulate(&p, &sched, steps)?;
    let mut csv = Csv::new(
        std::iter::once("t".to_string())
            .chain((1..=p.n()).map(|i| format!("x_{i}")))
            .chain(std::iter::once("spend".to_string())),
    );
    for ((t, x), s) in traj.times.iter().zip(&traj.states).zip(&traj.spend_accum) {
        let mut row = vec![float(*t)];
        row.extend(x.iter().map(|v| float(*v)));
        row.push(float(*s));
        csv.push(row);
    }
    csv.write(&c.out, "trajectory.csv")?;
    Ok(())
}

pub fn bounds(c: &Common) -> Result<()> {
    let p = load_problem(&c.problem)?;
    let sd = spectral_decompose(&build_laplacian(&p.graph))?;
    let gains: Vec<&[f64]> = p.channels.iter().map(|ch| ch.b.as_slice()).collect();
    let report = match p.objective.kind {
        ObjectiveKind::Linear => {
            let sol = waterline::solve(&p)?;
            let s: Vec<f64> = sol.certificate.channels.iter().map(|ch| ch.threshold).collect();
            switch_bound_report(&sd, &p.objective.p, &gains, Some(&s))
        }
        ObjectiveKind::Sigmoid => {
            let lam = initial_costate(&p.objective)?;
            switch_bound_report(&sd, lam.as_slice(), &gains, None)
        }
    };
    write_json(&c.out, "bounds.json", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    grid: usize,
    interior_levels: usize,
    candidates: u128,
    feasible: u64,
    switch_caps: Vec<usize>,
    solver_value: f64,
    oracle_value: f64,
    oracle_extreme_value: f64,
    /// `solver_value - oracle_value`.
    gap: f64,
    /// Largest amount a grid-restricted schedule can lose to an unrestricted
    /// one; linear objectives only.
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solver_dominates: Option<bool>,
    oracle_best: Scored,
    oracle_best_extreme: Scored,
}

fn compare(p: &CampaignProblem, spec: &EnumerationSpec, solver_value: f64) -> Result<OracleReport> {
    let res = enumerate_best(p, spec)?;
    let slack = match p.objective.kind {
        ObjectiveKind::Linear => {
            let sd = spectral_decompose(&build_laplacian(&p.graph))?;
            let costate = TerminalCostate::new(p.objective.p.clone())?;
            Some(grid_slack(p, &channel_profiles(p, &sd, &costate), spec.switch_grid))
        }
        ObjectiveKind::Sigmoid => None,
    };
    Ok(OracleReport {
        grid: spec.switch_grid,
        interior_levels: if spec.include_interior_levels { spec.interior_levels } else { 0 },
        candidates: res.candidates,
        feasible: res.feasible,
        switch_caps: res.switch_caps,
        solver_value,
        oracle_value: res.best.value,
        oracle_extreme_value: res.best_extreme.value,
        gap: solver_value - res.best.value,
        grid_slack: slack,
        solver_dominates: slack.map(|s| solver_value >= res.best.value - s),
        oracle_best: res.best,
        oracle_best_extreme: res.best_extreme,
    })
}

pub fn oracle(c: &Common, grid: usize, max_switches: Option<usize>, interior: usize) -> Result<()> {
    let p = load_problem(&c.problem)?;
    let mut spec = EnumerationSpec::new(grid);
    spec.max_switches_per_channel = max_switches;
    if interior > 0 {
        spec.include_interior_levels = true;
        spec.interior_levels = interior;
    }
    let solver_value = match p.objective.kind {
        ObjectiveKind::Linear => waterline::solve(&p)?.objective_gain,
        ObjectiveKind::Sigmoid => solve_sigmoid(&p, &SigmoidConfig::default())?.objective,
    };
    let report = compare(&p, &spec, solver_value)?;
    write_json(&c.out, "oracle.json", &report)?;
    Ok(())
}

/// `start:end:step` (inclusive) or `a,b,c`.
pub fn parse_sizes(spec: &str) -> Result<Vec<usize>> {
    let num = |s: &str| {
        s.trim().parse::<usize>().map_err(|_| invalid(format!("bad size `{s}` in `{spec}`")))
    };
    let ns: Vec<usize> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(format!("expected start:end:step, got `{spec}`")));
        }
        let (a, b, s) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if s == 0 || a > b {
            return Err(invalid(format!("empty size range `{spec}`")));
        }
        (a..=b).step_by(s).collect()
    } else {
        spec.split(',').map(num).collect::<Result<_>>()?
    };
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(invalid(format!("sizes must be at least 2, got `{spec}`")));
    }
    Ok(ns)
}

pub fn sweep(n: &str, instances: usize, seed: u64, factor: f64, out: &Path) -> Result<()> {
    let ns = parse_sizes(n)?;
    if instances == 0 {
        return Err(invalid("--instances must be at least 1"));
    }
    if !(factor.is_finite() && factor > 0.0) {
        return Err(invalid("--radius-factor must be positive"));
    }
    let mut config = SweepConfig::new(ns, instances, seed);
    config.radius_factor = factor;
    let rows = run_sweep(&config)?;

    let mut csv = Csv::new([
        "n",
        "instance",
        "seed",
        "edges",
        "bound_general",
        "bound_linear_zero",
        "bound_linear_sup",
        "eigenvalue_gap",
    ]);
    for r in &rows {
        csv.push([
            r.n.to_string(),
            r.instance.to_string(),
            r.seed.to_string(),
            r.edges.to_string(),
            r.bound_general.to_string(),
            r.bound_linear_zero.to_string(),
            r.bound_linear_sup.to_string(),
            float(r.eigenvalue_gap),
        ]);
    }
    csv.write(out, "sweep_instances.csv")?;

    let mut agg = Csv::new([
        "n",
        "instances",
        "general_mean",
        "general_std",
        "linear_zero_mean",
        "linear_zero_std",
        "linear_sup_mean",
        "linear_sup_std",
    ]);
    for a in aggregate(&rows) {
        agg.push([
            a.n.to_string(),
            a.instances.to_string(),
            float(a.general_mean),
            float(a.general_std),
            float(a.linear_zero_mean),
            float(a.linear_zero_std),
            float(a.linear_sup_mean),
            float(a.linear_sup_std),
        ]);
    }
    agg.write(out, "sweep_aggregate.csv")?;
    Ok(())
}

#[derive(Serialize)]
struct IterationRow {
    iteration: usize,
    source: Option<Vec<usize>>,
    members: Vec<usize>,
    beta_star: f64,
    spend: f64,
    objective: f64,
}

#[derive(Serialize)]
struct SigmoidReport {
    epsilon: f64,
    converged: bool,
    uninformative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    best_iteration: usize,
    objective: f64,
    beta_star: f64,
    spend: f64,
    /// Agent indices are 1-based.
    log: Vec<IterationRow>,
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|i| i + 1).collect()
}

pub fn sigmoid(c: &Common, epsilon: Option<f64>, max_iters: usize, steps: usize) -> Result<()> {
    let p = load_problem(&c.problem)?;
    if p.objective.kind != ObjectiveKind::Sigmoid {
        return Err(invalid("`sigmoid` needs a sigmoid objective; use `solve` instead"));
    }
    let sol = solve_sigmoid(&p, &SigmoidConfig { epsilon, max_iters, steps })?;
    let report = SigmoidReport {
        epsilon: sol.epsilon,
        converged: sol.converged,
        uninformative: sol.uninformative,
        note: sol.note.clone(),
        best_iteration: sol.best_iteration,
        objective: sol.objective,
        beta_star: sol.solution.beta_star,
        spend: sol.solution.spend,
        log: sol
            .log
            .iter()
            .map(|it| IterationRow {
                iteration: it.iteration,
                source: it.source.as_deref().map(one_based),
                members: one_based(&it.members),
                beta_star: it.beta_star,
                spend: it.spend,
                objective: it.objective,
            })
            .collect(),
    };
    write_json(&c.out, "sigmoid.json", &report)?;
    write_json(&c.out, "schedule.json", &sol.solution.schedule)?;
    Ok(())
}

pub fn example(name: &str, out: &Path) -> Result<()> {
    let p = scenarios::by_name(name).ok_or_else(|| {
        invalid(format!("unknown example `{name}`; choose one of {}", scenarios::NAMES.join(", ")))
    })?;
    write_json(out, &format!("{name}.json"), &p)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_ranges() {
        assert_eq!(parse_sizes("20:200:20").unwrap().len(), 10);
        assert_eq!(parse_sizes("5:9:2").unwrap(), vec![5, 7, 9]);
        assert_eq!(parse_sizes("3, 8").unwrap(), vec![3, 8]);
        for bad in ["", "1:5:1", "5:2:1", "2:5:0", "x", "2:5"] {
            assert!(parse_sizes(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes() {
        let num: anyhow::Error = waterline::Error::Numerical("x".into()).into();
        assert_eq!(exit_code(&num.context("solving")), 3);
        let val: anyhow::Error = waterline::Error::Validation(vec![]).into();
        assert_eq!(exit_code(&val), 2);
        let parse = serde_json::from_str::<f64>("{").unwrap_err();
        assert_eq!(exit_code(&anyhow::Error::from(parse).context("parsing")), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&anyhow::Error::from(io).context("reading")), 1);
        assert_eq!(exit_code(&invalid("nope")), 2);
    }
}
