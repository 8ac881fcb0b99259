//! Forward simulation of `dx/dt = -L x + B u(t) + e(t)` and objective
//! evaluation.

use serde::{Deserialize, Serialize};

use crate::costate::ChannelProfile;
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, Laplacian};
use crate::problem::{CampaignProblem, Objective, ObjectiveKind};
use crate::schedule::{BangBangSchedule, ControlSignal};

pub const MIN_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Cumulative spend `int_0^t sum_k c_k(u_k) ds`, nondecreasing.
    pub spend_accum: Vec<f64>,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_spend(&self) -> f64 {
        *self.spend_accum.last().unwrap_or(&0.0)
    }
}

/// Uniform grid of `steps` cells with every breakpoint inserted as a node.
fn integration_grid(horizon: f64, steps: usize, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let merge = 1e-12 * horizon;
    let mut pts: Vec<f64> = (0..=steps).map(|k| horizon * k as f64 / steps as f64).collect();
    let breaks: Vec<f64> = extra
        .into_iter()
        .filter(|&t| t > merge && t < horizon - merge)
        .collect();
    // Drop uniform nodes that sit on top of a breakpoint so the breakpoint wins.
    pts.retain(|&t| t == 0.0 || t == horizon || breaks.iter().all(|&b| (b - t).abs() > merge));
    pts.extend(breaks);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= merge);
    pts
}

fn rk4_step(lap: &Laplacian, x: &[f64], forcing: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let rhs = |y: &[f64]| -> Vec<f64> {
        let ly = lap.apply(y);
        (0..n).map(|i| -ly[i] + forcing[i]).collect()
    };
    let k1 = rhs(x);
    let y2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
    let k2 = rhs(&y2);
    let y3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
    let k3 = rhs(&y3);
    let y4: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
    let k4 = rhs(&y4);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates the opinion dynamics with classical RK4 on a grid of at least
/// `steps` cells that has every control switch and drift breakpoint as a node.
pub fn simulate(
    problem: &CampaignProblem,
    control: &dyn ControlSignal,
    steps: usize,
) -> Result<Trajectory> {
    if steps < MIN_STEPS {
        return Err(Error::Contract(format!("steps must be at least {MIN_STEPS}, got {steps}")));
    }
    let lap = build_laplacian(&problem.graph);
    simulate_with(problem, &lap, control, steps)
}

pub(crate) fn simulate_with(
    problem: &CampaignProblem,
    lap: &Laplacian,
    control: &dyn ControlSignal,
    steps: usize,
) -> Result<Trajectory> {
    let n = problem.n();
    let m = problem.m();
    if problem.x0.len() != n {
        return Err(Error::Contract("x0 length does not match the graph".into()));
    }
    let horizon = problem.horizon;
    let breaks = control
        .breakpoints()
        .into_iter()
        .chain(problem.drift.breakpoints.iter().copied());
    let times = integration_grid(horizon, steps, breaks);

    let mut states = Vec::with_capacity(times.len());
    let mut spend_accum = Vec::with_capacity(times.len());
    let mut x = problem.x0.clone();
    let mut spend = 0.0;
    states.push(x.clone());
    spend_accum.push(0.0);

    let mut u = vec![0.0; m];
    let mut forcing = vec![0.0; n];
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        control.efforts_at(mid, &mut u);
        forcing.iter_mut().for_each(|f| *f = 0.0);
        for (ch, &uk) in problem.channels.iter().zip(&u) {
            if uk != 0.0 {
                for (f, bi) in forcing.iter_mut().zip(&ch.b) {
                    *f += bi * uk;
                }
            }
        }
        if let Some(e) = problem.drift.at(mid) {
            for (f, ei) in forcing.iter_mut().zip(e) {
                *f += ei;
            }
        }
        x = rk4_step(lap, &x, &forcing, b - a);
        let rate: f64 = problem
            .channels
            .iter()
            .zip(&u)
            .map(|(ch, &uk)| ch.cost.eval(uk))
            .sum();
        spend += rate * (b - a);
        states.push(x.clone());
        spend_accum.push(spend);
    }
    Ok(Trajectory {
        times,
        states,
        spend_accum,
    })
}

/// `p_i / (1 + exp(-w))` without overflow for any `w`.
fn logistic(p: f64, w: f64) -> f64 {
    if w >= 0.0 {
        p / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        p * e / (1.0 + e)
    }
}

pub fn objective_value(obj: &Objective, x_t: &[f64]) -> f64 {
    match obj.kind {
        ObjectiveKind::Linear => obj.p.iter().zip(x_t).map(|(p, x)| p * x).sum(),
        ObjectiveKind::Sigmoid => (0..x_t.len())
            .map(|i| logistic(obj.p[i], obj.alpha[i] * (x_t[i] - obj.theta[i])))
            .sum(),
    }
}

/// Exact contribution of the schedule's controls to a linear objective,
/// `sum_i u_max_i * int_{on_i} h_i(t) dt`. Independent of `x0` and drift.
pub fn closed_form_gain(profiles: &[ChannelProfile], schedule: &BangBangSchedule) -> f64 {
    profiles
        .iter()
        .zip(&schedule.channels)
        .map(|(prof, ch)| {
            ch.u_max
                * ch.on_intervals
                    .iter()
                    .map(|i| prof.integral(i.start, i.end))
                    .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::problem::{Channel, CostModel, Drift};
    use crate::schedule::{ChannelSchedule, Interval};

    fn k2_problem(x0: Vec<f64>) -> CampaignProblem {
        CampaignProblem {
            graph: WeightedGraph::complete(2).unwrap(),
            channels: vec![Channel {
                b: vec![1.0, 0.0],
                cost: CostModel::linear(1.0),
                u_max: 1.0,
            }],
            objective: Objective::linear(vec![0.0, 1.0]),
            horizon: 1.0,
            budget: 0.5,
            x0,
            drift: Drift::default(),
        }
    }

    #[test]
    fn free_k2_consensus_is_analytic() {
        let p = k2_problem(vec![1.0, 0.0]);
        let traj = simulate(&p, &BangBangSchedule::idle(&p), 4096).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let e = (-2.0 * t).exp();
            assert!((x[0] - 0.5 * (1.0 + e)).abs() < 1e-8);
            assert!((x[1] - 0.5 * (1.0 - e)).abs() < 1e-8);
        }
        assert_eq!(traj.final_spend(), 0.0);
    }

    #[test]
    fn rejects_too_few_steps() {
        let p = k2_problem(vec![0.0, 0.0]);
        assert!(matches!(
            simulate(&p, &BangBangSchedule::idle(&p), 10),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn switch_times_become_grid_nodes() {
        let p = k2_problem(vec![0.0, 0.0]);
        let sched = BangBangSchedule {
            channels: vec![ChannelSchedule {
                u_max: 1.0,
                on_intervals: vec![Interval::new(0.0, 0.3333)],
            }],
        };
        let traj = simulate(&p, &sched, 64).unwrap();
        assert!(traj.times.contains(&0.3333));
        assert!((traj.final_spend() - 0.3333).abs() < 1e-14);
        assert!(traj.spend_accum.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn objective_values() {
        let p = vec![0.03, 0.02, 0.10, 1.00, 0.06, 0.07, 0.01];
        let lin = Objective::linear(p.clone());
        assert!((objective_value(&lin, &[1.0; 7]) - 1.29).abs() < 1e-12);

        let theta = vec![0.2, -0.1, 0.0, 0.5, 1.0, -2.0, 0.3];
        let sig = Objective::sigmoid(p.clone(), vec![3.0; 7], theta.clone());
        assert!((objective_value(&sig, &theta) - 1.29 / 2.0).abs() < 1e-12);
        assert!((objective_value(&sig, &[1e300; 7]) - 1.29).abs() < 1e-12);
        assert_eq!(objective_value(&sig, &[-1e300; 7]), 0.0);
    }

    #[test]
    fn k2_closed_form_gain_by_antiderivative() {
        // h(t) = 1/2 - 1/2 e^{2(t-1)}; int_0^0.5 = 1/4 - (e^{-1} - e^{-2}) / 4.
        let lap = build_laplacian(&WeightedGraph::complete(2).unwrap());
        let sd = crate::graph::spectral_decompose(&lap).unwrap();
        let lam = crate::costate::TerminalCostate::new(vec![0.0, 1.0]).unwrap();
        let prof = crate::costate::channel_profile(&sd, &lam, &[1.0, 0.0], 0, 1.0);
        let sched = BangBangSchedule {
            channels: vec![ChannelSchedule {
                u_max: 1.0,
                on_intervals: vec![Interval::new(0.0, 0.5)],
            }],
        };
        let want = 0.25 - ((-1.0_f64).exp() - (-2.0_f64).exp()) / 4.0;
        assert!((closed_form_gain(&[prof], &sched) - want).abs() < 1e-15);
        assert_eq!(closed_form_gain(&[], &BangBangSchedule { channels: vec![] }), 0.0);
    }
}
