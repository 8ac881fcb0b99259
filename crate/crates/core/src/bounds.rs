//! Switch-count upper bounds and a numerical zero counter for exponential
//! polynomials.
//!
//! A channel switches whenever `h(t)` crosses its threshold `s`. With the
//! expansion `h(t) - s = (d_0 - s) + sum_{g >= 2} d_g exp(xi_g (t - T))`
//! two bounds follow:
//!
//! * **general**: number of eigenspaces the gain vector touches, minus one;
//! * **linear**: sign variations of the partial sums of
//!   `(d_0 - s, d_2, d_3, ...)` taken in increasing-rate order (a
//!   Descartes-type rule for exponential sums).

use serde::{Deserialize, Serialize};

use crate::costate::coeff_tol;
use crate::error::{Error, Result};
use crate::graph::SpectralDecomposition;

/// Strict sign alternations in `seq`, skipping entries with `|x| <= zero_tol`.
pub fn sign_variations(seq: &[f64], zero_tol: f64) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &x in seq {
        if x.abs() <= zero_tol {
            continue;
        }
        if last != 0.0 && last.signum() != x.signum() {
            count += 1;
        }
        last = x;
    }
    count
}

/// Sign variations of the partial sums of `coeffs`, which must be ordered by
/// increasing rate. Bounds the zeros of `sum_k coeffs[k] * exp(rate_k * t)` on
/// `t < 0`.
pub fn descartes_bound(coeffs: &[f64]) -> usize {
    let partial: Vec<f64> = coeffs
        .iter()
        .scan(0.0, |acc, &d| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    let scale = coeffs.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    sign_variations(&partial, 1e-12 * scale)
}

/// One less than the number of distinct-eigenvalue groups on which `b` has a
/// nonzero projection, floored at zero.
pub fn bound_general(sd: &SpectralDecomposition, b: &[f64]) -> usize {
    let norm_b = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-10 * norm_b.max(1.0);
    let touched = sd
        .group_projection_norms(b)
        .into_iter()
        .filter(|&x| x > tol)
        .count();
    touched.saturating_sub(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shift {
    At(f64),
    Sup,
}

/// Group-aggregated coefficients `<P_g p, b>` split into the constant
/// (`xi = 0`) term and the remaining terms in increasing-rate order. Groups
/// below the costate drop tolerance are omitted.
pub fn linear_coefficients(sd: &SpectralDecomposition, p: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let tol = coeff_tol(p, b);
    let coeffs = sd.group_cross_coefficients(p, b);
    let constant = if coeffs[0].abs() > tol { coeffs[0] } else { 0.0 };
    let rest = coeffs[1..].iter().copied().filter(|d| d.abs() > tol).collect();
    (constant, rest)
}

fn unshifted_partial_sums(constant: f64, rest: &[f64]) -> Vec<f64> {
    std::iter::once(constant)
        .chain(rest.iter().copied())
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

fn shifted_variations(partial: &[f64], s: f64, tol: f64) -> usize {
    let shifted: Vec<f64> = partial.iter().map(|u| u - s).collect();
    sign_variations(&shifted, tol)
}

/// Shift values at which the shifted sign-variation count can attain each of
/// its distinct values on `s >= 0`.
fn sup_candidates(partial: &[f64]) -> Vec<f64> {
    let mut vals = partial.to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let mut out = vec![0.0];
    for w in vals.windows(2) {
        if w[1] > 0.0 {
            let lo = w[0].max(0.0);
            out.push(0.5 * (lo + w[1]));
        }
    }
    if let Some(&top) = vals.last() {
        if top >= 0.0 {
            out.push(top + 1.0);
        }
    }
    out
}

/// Threshold-aware sign-variation bound for a linear objective with weights
/// `p` (or any terminal costate).
pub fn bound_linear(sd: &SpectralDecomposition, p: &[f64], b: &[f64], shift: Shift) -> usize {
    let (constant, rest) = linear_coefficients(sd, p, b);
    let partial = unshifted_partial_sums(constant, &rest);
    let tol = coeff_tol(p, b);
    match shift {
        Shift::At(s) => shifted_variations(&partial, s, tol),
        Shift::Sup => sup_candidates(&partial)
            .into_iter()
            .map(|s| shifted_variations(&partial, s, tol))
            .max()
            .unwrap_or(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBounds {
    pub bound_general: usize,
    /// At the solved threshold, when one is supplied.
    pub bound_linear_at: Option<usize>,
    pub bound_linear_zero: usize,
    pub bound_linear_sup: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchBoundReport {
    pub channels: Vec<ChannelBounds>,
}

/// Bounds for every channel gain in `gains`; `thresholds[i]`, when given, is
/// the level `s` that channel `i`'s profile `h_i` is compared against.
pub fn switch_bound_report(
    sd: &SpectralDecomposition,
    costate: &[f64],
    gains: &[&[f64]],
    thresholds: Option<&[f64]>,
) -> SwitchBoundReport {
    let channels = gains
        .iter()
        .enumerate()
        .map(|(i, b)| ChannelBounds {
            bound_general: bound_general(sd, b),
            bound_linear_at: thresholds.map(|s| bound_linear(sd, costate, b, Shift::At(s[i]))),
            bound_linear_zero: bound_linear(sd, costate, b, Shift::At(0.0)),
            bound_linear_sup: bound_linear(sd, costate, b, Shift::Sup),
        })
        .collect();
    SwitchBoundReport { channels }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    /// Zeros counted with multiplicity (tangential zeros count twice).
    pub count: usize,
    pub crossings: Vec<f64>,
    pub tangencies: Vec<f64>,
}

struct ExpPoly<'a> {
    rates: &'a [f64],
    coeffs: &'a [f64],
}

impl ExpPoly<'_> {
    fn value(&self, t: f64) -> f64 {
        self.rates
            .iter()
            .zip(self.coeffs)
            .map(|(r, d)| d * (r * t).exp())
            .sum()
    }

    fn slope(&self, t: f64) -> f64 {
        self.rates
            .iter()
            .zip(self.coeffs)
            .map(|(r, d)| d * r * (r * t).exp())
            .sum()
    }

    fn magnitude(&self, t: f64) -> f64 {
        self.rates
            .iter()
            .zip(self.coeffs)
            .map(|(r, d)| d.abs() * (r * t).exp())
            .sum()
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut flo = f(lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Counts the zeros of `f(t) = sum_g coeffs[g] * exp(rates[g] * t)` on
/// `window` by scanning `resolution` uniform points, refining each sign
/// change by bisection, and probing every interior extremum of a cell for a
/// touching or doubly-crossing zero.
pub fn count_exp_poly_zeros(
    rates: &[f64],
    coeffs: &[f64],
    window: (f64, f64),
    resolution: usize,
) -> Result<ZeroCount> {
    if rates.len() != coeffs.len() {
        return Err(Error::Contract("rates and coefficients differ in length".into()));
    }
    if coeffs.iter().all(|&d| d == 0.0) {
        return Err(Error::Contract("all coefficients are zero".into()));
    }
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) || resolution < 2 {
        return Err(Error::Contract("window must be finite with lo < hi and resolution >= 2".into()));
    }
    let f = ExpPoly { rates, coeffs };
    let width = 1e-12 * (hi - lo).abs().max(1.0);
    let ts: Vec<f64> = (0..resolution)
        .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
        .collect();
    let vals: Vec<f64> = ts.iter().map(|&t| f.value(t)).collect();

    let mut crossings = Vec::new();
    let mut tangencies = Vec::new();

    for k in 0..resolution {
        if vals[k] != 0.0 {
            continue;
        }
        let before = vals[..k].iter().rev().find(|v| **v != 0.0);
        let after = vals[k + 1..].iter().find(|v| **v != 0.0);
        match (before, after) {
            (Some(a), Some(b)) if a.signum() == b.signum() => tangencies.push(ts[k]),
            _ => crossings.push(ts[k]),
        }
    }

    for k in 0..resolution - 1 {
        let (a, b) = (vals[k], vals[k + 1]);
        if a == 0.0 || b == 0.0 {
            continue;
        }
        if a.signum() != b.signum() {
            crossings.push(bisect(|t| f.value(t), ts[k], ts[k + 1], width));
            continue;
        }
        let (da, db) = (f.slope(ts[k]), f.slope(ts[k + 1]));
        if da.signum() != db.signum() && da != 0.0 && db != 0.0 {
            let c = bisect(|t| f.slope(t), ts[k], ts[k + 1], width);
            let fc = f.value(c);
            if fc.abs() <= 1e-12 * f.magnitude(c) {
                tangencies.push(c);
            } else if fc.signum() != a.signum() {
                crossings.push(bisect(|t| f.value(t), ts[k], c, width));
                crossings.push(bisect(|t| f.value(t), c, ts[k + 1], width));
            }
        }
    }
    crossings.sort_by(f64::total_cmp);
    tangencies.sort_by(f64::total_cmp);
    Ok(ZeroCount {
        count: crossings.len() + 2 * tangencies.len(),
        crossings,
        tangencies,
    })
}
