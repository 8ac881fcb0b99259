#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waterline::problem::{Channel, CostModel, Drift, Objective};
use waterline::{CampaignProblem, WeightedGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Random spanning tree plus each remaining pair with probability 1/2.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    let mut tree = std::collections::HashSet::new();
    for j in 1..n {
        let i = rng.random_range(0..j);
        tree.insert((i, j));
        edges.push((i, j, uniform(rng, 0.5, 1.5)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !tree.contains(&(i, j)) && rng.random::<f64>() < 0.5 {
                edges.push((i, j, uniform(rng, 0.5, 1.5)));
            }
        }
    }
    WeightedGraph::new(n, edges).unwrap()
}

/// Random linear-objective problem with the budget a random fraction of
/// saturation.
pub fn random_linear_problem(
    rng: &mut ChaCha8Rng,
    graph: WeightedGraph,
    m: usize,
    horizon: f64,
) -> CampaignProblem {
    let n = graph.n();
    let channels: Vec<Channel> = (0..m)
        .map(|_| {
            let mut b: Vec<f64> = (0..n).map(|_| uniform(rng, -0.5, 1.0)).collect();
            if b.iter().sum::<f64>() <= 0.1 {
                b.iter_mut().for_each(|x| *x = x.abs());
            }
            Channel {
                b,
                cost: CostModel::linear(uniform(rng, 0.5, 2.0)),
                u_max: uniform(rng, 0.5, 2.0),
            }
        })
        .collect();
    let p = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut problem = CampaignProblem {
        graph,
        channels,
        objective: Objective::linear(p),
        horizon,
        budget: 1.0,
        x0: (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect(),
        drift: Drift::default(),
    };
    problem.budget = uniform(rng, 0.2, 0.8) * problem.saturation_spend();
    problem
}
