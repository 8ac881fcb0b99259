//! Switch-bound sweep over random geometric graphs.
//!
//! Each instance draws a connected geometric graph, a uniform random linear
//! objective, and a channel that reaches only the first agent, then records
//! both switch bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_general, bound_linear, Shift};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, random_geometric_graph, spectral_decompose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub ns: Vec<usize>,
    pub instances: usize,
    pub seed: u64,
    /// Multiplies the base radius `sqrt(2 ln n / (pi n))`.
    pub radius_factor: f64,
}

impl SweepConfig {
    pub fn new(ns: Vec<usize>, instances: usize, seed: u64) -> Self {
        SweepConfig {
            ns,
            instances,
            seed,
            radius_factor: 1.0,
        }
    }
}

/// Connection radius for `n` points in the unit square, a constant factor
/// above the connectivity threshold.
pub fn sweep_radius(n: usize, factor: f64) -> f64 {
    let n = n as f64;
    factor * (2.0 * n.ln() / (std::f64::consts::PI * n)).sqrt()
}

/// Deterministic per-instance seed.
pub fn instance_seed(base: u64, n: usize, instance: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((n as u64) << 32) ^ instance as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub instance: usize,
    pub seed: u64,
    pub edges: usize,
    pub bound_general: usize,
    pub bound_linear_zero: usize,
    pub bound_linear_sup: usize,
    pub eigenvalue_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub n: usize,
    pub instances: usize,
    pub general_mean: f64,
    pub general_std: f64,
    pub linear_zero_mean: f64,
    pub linear_zero_std: f64,
    pub linear_sup_mean: f64,
    pub linear_sup_std: f64,
}

pub fn sweep_instance(n: usize, instance: usize, config: &SweepConfig) -> Result<SweepRow> {
    let seed = instance_seed(config.seed, n, instance);
    let gg = random_geometric_graph(n, sweep_radius(n, config.radius_factor), seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    let sd = spectral_decompose(&build_laplacian(&gg.graph))?;
    Ok(SweepRow {
        n,
        instance,
        seed,
        edges: gg.graph.edges().len(),
        bound_general: bound_general(&sd, &b),
        bound_linear_zero: bound_linear(&sd, &p, &b, Shift::At(0.0)),
        bound_linear_sup: bound_linear(&sd, &p, &b, Shift::Sup),
        eigenvalue_gap: sd.spectral_gap(),
    })
}

/// All instances in `(n, instance)` order, computed in parallel.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.instances == 0 || config.ns.is_empty() {
        return Err(Error::Contract("sweep needs at least one size and one instance".into()));
    }
    let jobs: Vec<(usize, usize)> = config
        .ns
        .iter()
        .flat_map(|&n| (0..config.instances).map(move |k| (n, k)))
        .collect();
    jobs.par_iter()
        .map(|&(n, k)| sweep_instance(n, k, config))
        .collect()
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let k = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / k;
    let var = if k > 1.0 {
        xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Mean and sample standard deviation per `n`, in first-seen order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepAggregate> {
    let mut ns: Vec<usize> = Vec::new();
    for r in rows {
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    ns.into_iter()
        .map(|n| {
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n).collect();
            let (general_mean, general_std) = mean_std(sel.iter().map(|r| r.bound_general as f64));
            let (linear_zero_mean, linear_zero_std) =
                mean_std(sel.iter().map(|r| r.bound_linear_zero as f64));
            let (linear_sup_mean, linear_sup_std) =
                mean_std(sel.iter().map(|r| r.bound_linear_sup as f64));
            SweepAggregate {
                n,
                instances: sel.len(),
                general_mean,
                general_std,
                linear_zero_mean,
                linear_zero_std,
                linear_sup_mean,
                linear_sup_std,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_rule() {
        let r = sweep_radius(100, 1.0);
        assert!((r - (2.0 * 100f64.ln() / (std::f64::consts::PI * 100.0)).sqrt()).abs() < 1e-15);
        assert_eq!(sweep_radius(100, 2.0), 2.0 * r);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let cfg = SweepConfig::new(vec![12, 8], 3, 5);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let keys: Vec<(usize, usize)> = a.iter().map(|r| (r.n, r.instance)).collect();
        assert_eq!(keys, vec![(12, 0), (12, 1), (12, 2), (8, 0), (8, 1), (8, 2)]);
        for r in &a {
            assert!(r.bound_linear_zero <= r.bound_linear_sup);
            assert!(r.bound_general < r.n);
        }
        let agg = aggregate(&a);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].n, 12);
        assert_eq!(agg[0].instances, 3);
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std([1.0, 2.0, 3.0].into_iter());
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std([4.0].into_iter()), (4.0, 0.0));
    }
}
