//! Approximate allocation for the sigmoid objective.
//!
//! Sigmoid slopes vanish away from each agent's threshold, so the terminal
//! costate concentrates on the agents that end up close to it. The surrogate
//! costate keeps only those late deciders, each weighted by `alpha_j p_j / 2`,
//! and the linear water-filling machinery is rerun against it. The loop
//! alternates simulate, reclassify, resolve, and keeps the iterate with the
//! best true objective.

use serde::{Deserialize, Serialize};

use crate::costate::TerminalCostate;
use crate::dynamics::{objective_value, simulate_with, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, spectral_decompose, Laplacian, SpectralDecomposition};
use crate::problem::{validate_problem, CampaignProblem, Objective, ObjectiveKind};
use crate::waterfill::{solve_with_costate, WaterfillSolution};

pub const DEFAULT_MAX_ITERS: usize = 20;
pub const DEFAULT_STEPS: usize = 4096;

/// Agents with `|x_j(T) - theta_j| < epsilon`, 0-based and ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateDeciderSet {
    pub epsilon: f64,
    pub members: Vec<usize>,
}

impl LateDeciderSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn late_deciders(traj: &Trajectory, obj: &Objective, epsilon: f64) -> LateDeciderSet {
    late_deciders_at(traj.terminal(), obj, epsilon)
}

pub fn late_deciders_at(x_t: &[f64], obj: &Objective, epsilon: f64) -> LateDeciderSet {
    let members = x_t
        .iter()
        .zip(&obj.theta)
        .enumerate()
        .filter(|(_, (x, th))| (*x - *th).abs() < epsilon)
        .map(|(j, _)| j)
        .collect();
    LateDeciderSet { epsilon, members }
}

/// `alpha_j p_j / 2` on the late deciders, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateCostate {
    pub lam_bar: Vec<f64>,
}

impl SurrogateCostate {
    pub fn new(set: &LateDeciderSet, obj: &Objective) -> Self {
        let mut lam_bar = vec![0.0; obj.p.len()];
        for &j in &set.members {
            lam_bar[j] = obj.alpha[j] * obj.p[j] / 2.0;
        }
        SurrogateCostate { lam_bar }
    }

    pub fn to_costate(&self) -> Result<TerminalCostate> {
        TerminalCostate::new(self.lam_bar.clone())
    }
}

/// Sigmoid slope at threshold, `p_i alpha_i / 4`.
pub fn initial_costate(obj: &Objective) -> Result<TerminalCostate> {
    TerminalCostate::new(obj.p.iter().zip(&obj.alpha).map(|(p, a)| p * a / 4.0).collect())
}

/// `0.05 * max(median |theta_j|, 1)`.
pub fn default_epsilon(theta: &[f64]) -> f64 {
    let mut abs: Vec<f64> = theta.iter().map(|t| t.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median = match abs.len() {
        0 => 0.0,
        k if k % 2 == 1 => abs[k / 2],
        k => 0.5 * (abs[k / 2 - 1] + abs[k / 2]),
    };
    0.05 * median.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidConfig {
    /// `None` selects [`default_epsilon`].
    pub epsilon: Option<f64>,
    pub max_iters: usize,
    pub steps: usize,
}

impl Default for SigmoidConfig {
    fn default() -> Self {
        SigmoidConfig {
            epsilon: None,
            max_iters: DEFAULT_MAX_ITERS,
            steps: DEFAULT_STEPS,
        }
    }
}

/// One solve in the loop. `members` is the late-decider set under this
/// iterate's schedule and feeds the next iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidIteration {
    pub iteration: usize,
    /// Costate support that produced this schedule; `None` for the initializer.
    pub source: Option<Vec<usize>>,
    pub members: Vec<usize>,
    pub beta_star: f64,
    pub spend: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidSolution {
    pub solution: WaterfillSolution,
    pub best_iteration: usize,
    pub epsilon: f64,
    pub objective: f64,
    /// The late-decider set repeated before `max_iters` ran out.
    pub converged: bool,
    /// Some iterate had no late deciders, so the surrogate carried no signal.
    pub uninformative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub log: Vec<SigmoidIteration>,
}

struct Iterate {
    solution: WaterfillSolution,
    x_t: Vec<f64>,
}

fn run_iterate(
    problem: &CampaignProblem,
    lap: &Laplacian,
    sd: &SpectralDecomposition,
    costate: &TerminalCostate,
    steps: usize,
) -> Result<Iterate> {
    let solution = solve_with_costate(problem, lap, sd, costate)?;
    let traj = simulate_with(problem, lap, &solution.schedule, steps)?;
    Ok(Iterate {
        solution,
        x_t: traj.terminal().to_vec(),
    })
}

pub fn solve_sigmoid(problem: &CampaignProblem, config: &SigmoidConfig) -> Result<SigmoidSolution> {
    let obj = &problem.objective;
    if obj.kind != ObjectiveKind::Sigmoid {
        return Err(Error::Contract(
            "the late-decider loop needs a sigmoid objective; use waterfill::solve".into(),
        ));
    }
    if config.max_iters == 0 {
        return Err(Error::Contract("max_iters must be at least 1".into()));
    }
    if config.steps < crate::dynamics::MIN_STEPS {
        return Err(Error::Contract(format!(
            "steps must be at least {}",
            crate::dynamics::MIN_STEPS
        )));
    }
    let epsilon = config.epsilon.unwrap_or_else(|| default_epsilon(&obj.theta));
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Contract(format!("epsilon must be positive, got {epsilon}")));
    }
    let findings = validate_problem(problem);
    if !findings.is_empty() {
        return Err(Error::Validation(findings.iter().map(ToString::to_string).collect()));
    }
    let lap = build_laplacian(&problem.graph);
    let sd = spectral_decompose(&lap)?;

    let mut log = Vec::new();
    let mut iterates = Vec::new();
    let mut source: Option<Vec<usize>> = None;
    let mut costate = initial_costate(obj)?;
    let mut converged = false;
    let mut uninformative = false;

    for k in 0..=config.max_iters {
        let it = run_iterate(problem, &lap, &sd, &costate, config.steps)?;
        let set = late_deciders_at(&it.x_t, obj, epsilon);
        log.push(SigmoidIteration {
            iteration: k,
            source: source.clone(),
            members: set.members.clone(),
            beta_star: it.solution.beta_star,
            spend: it.solution.spend,
            objective: objective_value(obj, &it.x_t),
        });
        iterates.push(it);
        if set.is_empty() {
            uninformative = true;
            break;
        }
        if log[..k].iter().any(|e| e.members == set.members) {
            converged = true;
            break;
        }
        if k == config.max_iters {
            break;
        }
        costate = SurrogateCostate::new(&set, obj).to_costate()?;
        source = Some(set.members);
    }

    let mut best = 0;
    for (k, e) in log.iter().enumerate() {
        if e.objective > log[best].objective {
            best = k;
        }
    }
    let note = uninformative.then(|| "no late deciders: surrogate uninformative".to_string());
    let objective = log[best].objective;
    let solution = iterates.swap_remove(best).solution;
    Ok(SigmoidSolution {
        solution,
        best_iteration: best,
        epsilon,
        objective,
        converged,
        uninformative,
        note,
        log,
    })
}
