//! Benchmark fixtures shared by the criterion harnesses.

use waterline::problem::{Channel, CostModel, Drift, Objective};
use waterline::sweep::sweep_radius;
use waterline::{random_geometric_graph, CampaignProblem};

/// Linear-objective problem on a connected random geometric graph with two
/// channels and a budget at 40% of saturation. Weights and gains are
/// deterministic functions of the agent index so only the graph depends on
/// `seed`.
pub fn geometric_problem(n: usize, seed: u64) -> CampaignProblem {
    let graph = random_geometric_graph(n, sweep_radius(n, 1.5), seed)
        .expect("connected draw")
        .graph;
    let p = (0..n).map(|i| 0.05 + ((i * 37) % 23) as f64 / 23.0).collect();
    let channels = (0..2)
        .map(|c| Channel {
            b: (0..n).map(|i| if (i + c) % 3 == 0 { 1.0 } else { 0.0 }).collect(),
            cost: CostModel::linear(1.0 + c as f64 * 0.5),
            u_max: 1.0,
        })
        .collect();
    let mut problem = CampaignProblem {
        graph,
        channels,
        objective: Objective::linear(p),
        horizon: 10.0,
        budget: 1.0,
        x0: vec![0.0; n],
        drift: Drift::default(),
    };
    problem.budget = 0.4 * problem.saturation_spend();
    problem
}
