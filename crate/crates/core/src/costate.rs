//! Terminal costates and the cost-effectiveness profiles
//! `h_i(t) = <Lambda(t), b_i>`.
//!
//! The adjoint flow is `dLambda/dt = L Lambda` run backward from `Lambda(T)`,
//! so `Lambda(t) = exp(L (t - T)) Lambda(T)` and every non-constant mode decays
//! as `t` moves away from `T`:
//!
//! ```text
//! h_i(t) = sum_g <P_g Lambda(T), b_i> * exp(xi_g * (t - T))
//! ```
//!
//! Profiles are built per distinct-eigenvalue group using eigenspace
//! projections, so they do not depend on how the eigensolver picks a basis
//! inside a repeated eigenvalue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Laplacian, SpectralDecomposition};
use crate::problem::{Objective, ObjectiveKind};

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalCostate(Vec<f64>);

impl TerminalCostate {
    /// Wraps an arbitrary nonnegative costate vector, e.g. a surrogate.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(Error::Contract(
                "terminal costate entries must be finite and nonnegative".into(),
            ));
        }
        Ok(TerminalCostate(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `p_i * alpha_i * z / (1 + z)^2` with `z = exp(-alpha_i (x_i - theta_i))`,
/// evaluated as `e^{-|w|} / (1 + e^{-|w|})^2` so it never overflows.
pub fn sigmoid_slope(p: f64, alpha: f64, x: f64, theta: f64) -> f64 {
    let w = alpha * (x - theta);
    let e = (-w.abs()).exp();
    p * alpha * e / ((1.0 + e) * (1.0 + e))
}

/// Gradient of the objective at the terminal state. The linear objective
/// does not read `x_t`; the sigmoid objective requires it.
pub fn terminal_costate(obj: &Objective, x_t: Option<&[f64]>) -> Result<TerminalCostate> {
    match obj.kind {
        ObjectiveKind::Linear => Ok(TerminalCostate(obj.p.clone())),
        ObjectiveKind::Sigmoid => {
            let x = x_t.ok_or_else(|| {
                Error::Contract("the sigmoid costate needs the terminal state x(T)".into())
            })?;
            if x.len() != obj.p.len() {
                return Err(Error::Contract("terminal state has the wrong length".into()));
            }
            Ok(TerminalCostate(
                (0..x.len())
                    .map(|i| sigmoid_slope(obj.p[i], obj.alpha[i], x[i], obj.theta[i]))
                    .collect(),
            ))
        }
    }
}

/// One exponential mode `coeff * exp(rate * (t - T))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub rate: f64,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub channel: usize,
    pub horizon: f64,
    /// Surviving modes, strictly increasing in rate.
    pub modes: Vec<Mode>,
    /// Number of groups whose coefficient fell below the drop tolerance.
    pub dropped: usize,
}

impl ChannelProfile {
    pub fn eval_h(&self, t: f64) -> f64 {
        let dt = t - self.horizon;
        self.modes.iter().map(|m| m.coeff * (m.rate * dt).exp()).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let dt = t - self.horizon;
        self.modes
            .iter()
            .map(|m| m.coeff * m.rate * (m.rate * dt).exp())
            .sum()
    }

    /// Exact `int_a^b h(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                if m.rate == 0.0 {
                    m.coeff * (b - a)
                } else {
                    m.coeff / m.rate * (m.rate * (a - self.horizon)).exp() * (m.rate * (b - a)).exp_m1()
                }
            })
            .sum()
    }

    /// Coefficient of the constant (`xi = 0`) mode, or zero if it was dropped.
    pub fn constant_term(&self) -> f64 {
        self.modes
            .iter()
            .find(|m| m.rate == 0.0)
            .map_or(0.0, |m| m.coeff)
    }

    /// `sum |d_g|`, an upper bound on `|h(t)|` for `t <= T`.
    pub fn abs_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.coeff.abs()).sum()
    }
}

pub fn coeff_tol(lam_t: &[f64], b: &[f64]) -> f64 {
    let nl = lam_t.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    1e-10 * (nl * nb).max(1.0)
}

pub fn channel_profile(
    sd: &SpectralDecomposition,
    lam_t: &TerminalCostate,
    b: &[f64],
    channel: usize,
    horizon: f64,
) -> ChannelProfile {
    let lam = lam_t.as_slice();
    assert_eq!(lam.len(), sd.n(), "costate length must match the graph");
    assert_eq!(b.len(), sd.n(), "gain vector length must match the graph");
    let tol = coeff_tol(lam, b);
    let coeffs = sd.group_cross_coefficients(lam, b);
    let mut modes = Vec::new();
    let mut dropped = 0;
    for (g, d) in sd.groups().iter().zip(coeffs) {
        if d.abs() > tol {
            modes.push(Mode {
                rate: g.rate,
                coeff: d,
            });
        } else {
            dropped += 1;
        }
    }
    ChannelProfile {
        channel,
        horizon,
        modes,
        dropped,
    }
}

/// Backward RK4 integration of `dLambda/dt = L Lambda` from `Lambda(T)` at the
/// last grid point down to the first. Returns `Lambda` at every grid point.
/// Exists only as an independent check of the spectral profiles.
pub fn adjoint_check(lap: &Laplacian, lam_t: &TerminalCostate, grid: &[f64]) -> Vec<Vec<f64>> {
    assert!(grid.len() >= 2, "grid needs at least two points");
    let n = lap.n();
    let mut out = vec![Vec::new(); grid.len()];
    let mut y = lam_t.as_slice().to_vec();
    let last = grid.len() - 1;
    out[last] = y.clone();
    for k in (0..last).rev() {
        let h = grid[k] - grid[k + 1];
        let k1 = lap.apply(&y);
        let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
        let k2 = lap.apply(&y2);
        let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
        let k3 = lap.apply(&y3);
        let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
        let k4 = lap.apply(&y4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out[k] = y.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_laplacian, spectral_decompose, WeightedGraph};

    fn k2() -> (Laplacian, SpectralDecomposition) {
        let lap = build_laplacian(&WeightedGraph::complete(2).unwrap());
        let sd = spectral_decompose(&lap).unwrap();
        (lap, sd)
    }

    fn seven_p() -> Vec<f64> {
        vec![0.03, 0.02, 0.10, 1.00, 0.06, 0.07, 0.01]
    }

    #[test]
    fn linear_costate_is_p() {
        let obj = Objective::linear(seven_p());
        assert_eq!(terminal_costate(&obj, None).unwrap().as_slice(), &seven_p()[..]);
    }

    #[test]
    fn sigmoid_costate_at_threshold_and_saturation() {
        let obj = Objective::sigmoid(vec![0.5, 2.0], vec![4.0, 0.5], vec![0.1, -1.0]);
        let lam = terminal_costate(&obj, Some(&[0.1, -1.0])).unwrap();
        assert!((lam.as_slice()[0] - 0.5 * 4.0 / 4.0).abs() < 1e-15);
        assert!((lam.as_slice()[1] - 2.0 * 0.5 / 4.0).abs() < 1e-15);

        let x = [0.1 + 50.0 / 4.0, -1.0 + 50.0 / 0.5];
        let lam = terminal_costate(&obj, Some(&x)).unwrap();
        assert!(lam.as_slice().iter().all(|&l| l < 1e-20));
        let lam = terminal_costate(&obj, Some(&[-1e308, 1e308])).unwrap();
        assert!(lam.as_slice().iter().all(|&l| l == 0.0));

        assert!(matches!(terminal_costate(&obj, None), Err(Error::Contract(_))));
    }

    #[test]
    fn k2_profile_by_hand() {
        // Q_1 = (1,1)/sqrt2, Q_2 = (1,-1)/sqrt2; Lambda = (0,1), b = (1,0):
        // group 0: (1/sqrt2)(1/sqrt2) = 1/2, group 2: (-1/sqrt2)(1/sqrt2) = -1/2.
        let (_, sd) = k2();
        let lam = TerminalCostate::new(vec![0.0, 1.0]).unwrap();
        let prof = channel_profile(&sd, &lam, &[1.0, 0.0], 0, 1.0);
        assert_eq!(prof.modes.len(), 2);
        assert_eq!(prof.modes[0].rate, 0.0);
        assert!((prof.modes[0].coeff - 0.5).abs() < 1e-15);
        assert!((prof.modes[1].rate - 2.0).abs() < 1e-14);
        assert!((prof.modes[1].coeff + 0.5).abs() < 1e-15);

        let want = 0.5 - 0.5 * (-2.0_f64).exp();
        assert!((prof.eval_h(0.0) - want).abs() < 1e-14);
        assert!((want - 0.432_332_358_381_693_6).abs() < 1e-15);
        assert!(prof.eval_h(1.0).abs() < 1e-12);
        // far from T only the constant mode remains
        let far = channel_profile(&sd, &lam, &[1.0, 0.0], 0, 40.0);
        assert!((far.eval_h(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_costate_gives_flat_profile() {
        let lap = build_laplacian(&WeightedGraph::path(5).unwrap());
        let sd = spectral_decompose(&lap).unwrap();
        let lam = TerminalCostate::new(vec![0.3; 5]).unwrap();
        let b = [1.0, -2.0, 0.5, 0.0, 3.0];
        let prof = channel_profile(&sd, &lam, &b, 0, 2.0);
        assert_eq!(prof.modes.len(), 1);
        let want = 0.3 * b.iter().sum::<f64>();
        assert!((prof.constant_term() - want).abs() < 1e-12);
        assert_eq!(prof.dropped, sd.groups().len() - 1);
    }

    #[test]
    fn orthogonal_group_is_absent() {
        // On K2, b = 1 has no projection onto the xi = 2 eigenspace.
        let (_, sd) = k2();
        let lam = TerminalCostate::new(vec![0.0, 1.0]).unwrap();
        let prof = channel_profile(&sd, &lam, &[1.0, 1.0], 0, 1.0);
        assert_eq!(prof.modes.len(), 1);
        assert_eq!(prof.dropped, 1);
    }

    #[test]
    fn integral_matches_quadrature() {
        let (_, sd) = k2();
        let lam = TerminalCostate::new(vec![0.0, 1.0]).unwrap();
        let prof = channel_profile(&sd, &lam, &[1.0, 0.0], 0, 1.0);
        let (a, b) = (0.1, 0.7);
        let steps = 2000;
        let h = (b - a) / steps as f64;
        // composite Simpson
        let mut s = prof.eval_h(a) + prof.eval_h(b);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * prof.eval_h(a + k as f64 * h);
        }
        assert!((s * h / 3.0 - prof.integral(a, b)).abs() < 1e-13);
    }

    #[test]
    fn adjoint_matches_k2_matrix_exponential() {
        // exp(-L s) on K2 = 1/2 [[1+e, 1-e], [1-e, 1+e]] with e = exp(-2 s).
        let (lap, _) = k2();
        let lam = TerminalCostate::new(vec![1.0, 0.0]).unwrap();
        let grid: Vec<f64> = (0..=4096).map(|k| k as f64 / 4096.0).collect();
        let traj = adjoint_check(&lap, &lam, &grid);
        for (t, y) in grid.iter().zip(&traj) {
            let e = (-2.0 * (1.0 - t)).exp();
            assert!((y[0] - 0.5 * (1.0 + e)).abs() < 1e-12);
            assert!((y[1] - 0.5 * (1.0 - e)).abs() < 1e-12);
        }
        let flat = adjoint_check(&lap, &TerminalCostate::new(vec![2.0, 2.0]).unwrap(), &grid);
        assert!(flat.iter().all(|y| y == &vec![2.0, 2.0]));
    }
}
