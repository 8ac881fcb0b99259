//! Campaign problem definition, validation, and the structural hypothesis
//! diagnostics (total reach and controllability) for each channel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::{Laplacian, SpectralDecomposition, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Linear,
    Power,
}

/// `c(u) = v * u^a`; the linear kind always uses `a = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub kind: CostKind,
    pub v: f64,
    #[serde(default = "one")]
    pub a: f64,
}

fn one() -> f64 {
    1.0
}

impl CostModel {
    pub fn linear(v: f64) -> Self {
        CostModel {
            kind: CostKind::Linear,
            v,
            a: 1.0,
        }
    }

    pub fn power(v: f64, a: f64) -> Self {
        CostModel {
            kind: CostKind::Power,
            v,
            a,
        }
    }

    pub fn exponent(&self) -> f64 {
        match self.kind {
            CostKind::Linear => 1.0,
            CostKind::Power => self.a,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self.kind {
            CostKind::Linear => self.v * u,
            CostKind::Power => self.v * u.powf(self.a),
        }
    }

    pub fn is_strictly_concave(&self) -> bool {
        self.kind == CostKind::Power && self.a < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub b: Vec<f64>,
    pub cost: CostModel,
    pub u_max: f64,
}

impl Channel {
    /// Cost per unit time while running at `u_max`.
    pub fn full_rate_cost(&self) -> f64 {
        self.cost.eval(self.u_max)
    }

    pub fn total_reach(&self) -> f64 {
        self.b.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Linear,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
}

impl Objective {
    pub fn linear(p: Vec<f64>) -> Self {
        Objective {
            kind: ObjectiveKind::Linear,
            p,
            alpha: Vec::new(),
            theta: Vec::new(),
        }
    }

    pub fn sigmoid(p: Vec<f64>, alpha: Vec<f64>, theta: Vec<f64>) -> Self {
        Objective {
            kind: ObjectiveKind::Sigmoid,
            p,
            alpha,
            theta,
        }
    }
}

/// Piecewise-constant exogenous drift: `values[k]` applies on
/// `[breakpoints[k], breakpoints[k + 1])`, the last value until `T`, and zero
/// before the first breakpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(default)]
    pub values: Vec<Vec<f64>>,
}

impl Drift {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|&x| x == 0.0))
    }

    /// Drift vector at time `t`, or `None` where it is zero.
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        if k == 0 {
            None
        } else {
            self.values.get(k - 1).map(Vec::as_slice)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignProblem {
    pub graph: WeightedGraph,
    pub channels: Vec<Channel>,
    pub objective: Objective,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "r")]
    pub budget: f64,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "drift_is_empty")]
    pub drift: Drift,
}

fn drift_is_empty(d: &Drift) -> bool {
    d.breakpoints.is_empty() && d.values.is_empty()
}

impl CampaignProblem {
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.channels.len()
    }

    /// Spend if every channel runs at full rate over the whole horizon.
    pub fn saturation_spend(&self) -> f64 {
        self.channels.iter().map(Channel::full_rate_cost).sum::<f64>() * self.horizon
    }
}

/// One violated problem invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Every violated invariant of `p`; empty iff the problem is well-formed.
pub fn validate_problem(p: &CampaignProblem) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut push = |field: String, message: &str| {
        out.push(Finding {
            field,
            message: message.to_string(),
        })
    };
    let n = p.n();

    if p.channels.is_empty() {
        push("channels".into(), "at least one channel is required");
    }
    for (k, ch) in p.channels.iter().enumerate() {
        let f = |s: &str| format!("channels[{k}].{s}");
        if ch.b.len() != n {
            push(f("b"), &format!("expected {n} gains, found {}", ch.b.len()));
        }
        if ch.b.iter().any(|x| !x.is_finite()) {
            push(f("b"), "gains must be finite");
        }
        if ch.b.iter().all(|&x| x == 0.0) {
            push(f("b"), "channel has empty reach");
        }
        if !finite_pos(ch.u_max) {
            push(f("u_max"), "effort ceiling must be finite and positive");
        }
        if !finite_pos(ch.cost.v) {
            push(f("cost.v"), "cost rate must be finite and positive");
        }
        if ch.cost.kind == CostKind::Power && !(ch.cost.a > 0.0 && ch.cost.a <= 1.0) {
            push(f("cost.a"), "power-cost exponent must lie in (0, 1]");
        }
    }

    let obj = &p.objective;
    if obj.p.len() != n {
        push("objective.p".into(), &format!("expected {n} weights, found {}", obj.p.len()));
    }
    if obj.p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        push("objective.p".into(), "voting weights must be finite and nonnegative");
    }
    if !obj.p.iter().any(|&x| x > 0.0) {
        push("objective.p".into(), "at least one voting weight must be positive");
    }
    if obj.kind == ObjectiveKind::Sigmoid {
        if obj.alpha.len() != n {
            push("objective.alpha".into(), &format!("expected {n} sharpness values, found {}", obj.alpha.len()));
        }
        if obj.alpha.iter().any(|&a| !finite_pos(a)) {
            push("objective.alpha".into(), "sharpness must be finite and positive");
        }
        if obj.theta.len() != n {
            push("objective.theta".into(), &format!("expected {n} thresholds, found {}", obj.theta.len()));
        }
        if obj.theta.iter().any(|x| !x.is_finite()) {
            push("objective.theta".into(), "thresholds must be finite");
        }
    }

    if !finite_pos(p.horizon) {
        push("T".into(), "horizon must be finite and positive");
    }
    if !finite_pos(p.budget) {
        push("r".into(), "budget must be positive");
    }
    if p.x0.len() != n {
        push("x0".into(), &format!("expected {n} initial opinions, found {}", p.x0.len()));
    }
    if p.x0.iter().any(|x| !x.is_finite()) {
        push("x0".into(), "initial opinions must be finite");
    }

    let d = &p.drift;
    if d.breakpoints.len() != d.values.len() {
        push("drift".into(), "breakpoints and values must have equal length");
    }
    if d.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        push("drift.breakpoints".into(), "breakpoints must be strictly increasing");
    }
    if d.breakpoints.iter().any(|&t| !(t >= 0.0 && t <= p.horizon)) {
        push("drift.breakpoints".into(), "breakpoints must lie within [0, T]");
    }
    if d.values.iter().any(|v| v.len() != n || v.iter().any(|x| !x.is_finite())) {
        push("drift.values".into(), &format!("each drift value must hold {n} finite entries"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConditions {
    pub total_reach: f64,
    pub reach_nonzero: bool,
    pub controllability_rank: usize,
    pub controllable: bool,
    pub strictly_concave: bool,
    pub theorem_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub channels: Vec<ChannelConditions>,
}

impl ConditionReport {
    pub fn all_applicable(&self) -> bool {
        self.channels.iter().all(|c| c.theorem_applicable)
    }
}

/// Numerical rank of `[L b | L^2 b | ... | L^n b]`. Columns are normalised
/// before the SVD (rank is scale-invariant per column) and singular values
/// below `1e-9 * sigma_max` are treated as zero.
pub fn controllability_rank(lap: &Laplacian, b: &[f64]) -> usize {
    let n = lap.n();
    let mut m = DMatrix::zeros(n, n);
    let mut v = b.to_vec();
    for k in 0..n {
        v = lap.apply(&v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        for i in 0..n {
            m[(i, k)] = v[i];
        }
    }
    let sv = m.singular_values();
    let top = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

/// Checks each channel against the structural theorem's hypotheses:
/// strictly concave cost with nonzero total reach, or linear cost with
/// `(L, L b)` controllable.
pub fn check_conditions(
    p: &CampaignProblem,
    lap: &Laplacian,
    _sd: &SpectralDecomposition,
) -> ConditionReport {
    let n = p.n();
    let channels = p
        .channels
        .iter()
        .map(|ch| {
            let total_reach = ch.total_reach();
            let scale: f64 = ch.b.iter().map(|x| x.abs()).sum();
            let reach_nonzero = total_reach.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE);
            let controllability_rank = controllability_rank(lap, &ch.b);
            let controllable = controllability_rank == n;
            let strictly_concave = ch.cost.is_strictly_concave();
            let theorem_applicable = if strictly_concave {
                reach_nonzero
            } else {
                controllable
            };
            ChannelConditions {
                total_reach,
                reach_nonzero,
                controllability_rank,
                controllable,
                strictly_concave,
                theorem_applicable,
            }
        })
        .collect();
    ConditionReport { channels }
}
