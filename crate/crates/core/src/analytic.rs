//! Finite-truncation checks of the generating-function relations:
//!
//! * radial sums `A(r) = sum_{a in A} r^a` against `f(r) = sum b_n r^n`,
//!   whose ratio tends to 1 as `r -> 1-` for sets tracking their target;
//! * the coefficient identity `A^2(z) = f^2(z) + (1 - z) sum E_n z^n`, with
//!   `E_n` the cumulative error;
//! * the ratio `(sum b_k^2)(sum e_k^2) / (sum b_k)^3`.

use serde::Serialize;

use crate::bounds::ErrorSeries;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::repfn::{cumulative_rep, repfn_auto, IntegerSet};
use crate::weights::WeightSequence;

/// Terms between exact `powf` re-anchors when stepping `r^n`.
const POWER_STRIDE: usize = 32;

/// `r^0, r^1, ..., r^n_max`, re-anchored every `POWER_STRIDE` terms.
fn powers(r: f64, n_max: usize) -> impl Iterator<Item = f64> {
    let mut current = 1.0;
    (0..=n_max).map(move |n| {
        if n % POWER_STRIDE == 0 {
            current = r.powf(n as f64);
        } else {
            current *= r;
        }
        current
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialDiagnostics {
    pub r: f64,
    /// `sum_{a in A} r^a`.
    pub a_r: f64,
    /// `sum b_n r^n`.
    pub f_r: f64,
    /// `sum b_n r^{2n}`.
    pub b_lin: f64,
    /// `sum b_n^2 r^{2n}`.
    pub b_sq: f64,
    /// `r^{n_max + 1} / (1 - r)`, a bound on every omitted tail.
    pub tail_bound: f64,
    /// `a_r / f_r`, undefined when `f_r = 0`.
    pub ratio: Option<f64>,
    /// `tail_bound <= tol`.
    pub reliable: bool,
}

pub fn radial_eval(set: &IntegerSet, weights: &WeightSequence, r: f64, tol: f64) -> Result<RadialDiagnostics> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("r = {r} must lie in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::param(format!("tol = {tol} must be positive")));
    }
    let n_max = set.n_max();
    let b = weights.weights_upto(n_max)?;

    let mut a_r = CompensatedSum::new();
    let mut f_r = CompensatedSum::new();
    for ((n, rn), bn) in powers(r, n_max).enumerate().zip(&b) {
        if set.contains(n) {
            a_r.add(rn);
        }
        f_r.add(bn * rn);
    }
    let mut b_lin = CompensatedSum::new();
    let mut b_sq = CompensatedSum::new();
    for (r2n, bn) in powers(r * r, n_max).zip(&b) {
        b_lin.add(bn * r2n);
        b_sq.add(bn * bn * r2n);
    }
    let tail_bound = r.powf(n_max as f64 + 1.0) / (1.0 - r);
    let (a_r, f_r) = (a_r.value(), f_r.value());
    Ok(RadialDiagnostics {
        r,
        a_r,
        f_r,
        b_lin: b_lin.value(),
        b_sq: b_sq.value(),
        tail_bound,
        ratio: (f_r > 0.0).then(|| a_r / f_r),
        reliable: tail_bound <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eq7Check {
    /// `max_n |(R(n) - T(n)) - (E_n - E_{n-1})|`.
    pub residual: f64,
    /// `max_n |E_n|`.
    pub max_abs_cumulative_error: f64,
}

impl Eq7Check {
    /// Residual bound `1e-9 (1 + max |E_n|)`.
    pub fn tolerance(&self) -> f64 {
        1e-9 * (1.0 + self.max_abs_cumulative_error)
    }

    pub fn holds(&self) -> bool {
        self.residual <= self.tolerance()
    }
}

/// Compares coefficient `n` of `A^2(z) - f^2(z)`, i.e. `R(n) - T(n)`, with
/// coefficient `n` of `(1 - z) sum E_m z^m`, i.e. `E_n - E_{n-1}`, where
/// `E_n = S(n) - sum_{m<=n} T(m)` is formed from the cumulative counts.
pub fn identity_check_eq7(set: &IntegerSet, weights: &WeightSequence, horizon: usize) -> Result<Eq7Check> {
    if horizon > set.n_max() {
        return Err(Error::OutOfRange {
            index: horizon,
            cap: set.n_max(),
        });
    }
    let profile = repfn_auto(&set.truncate(horizon));
    let cumulative = cumulative_rep(&profile)?;
    let t = weights.convolution_target(horizon)?;
    let cum_t = weights.cumulative_targets(horizon)?;

    let mut residual = 0.0f64;
    let mut max_abs = 0.0f64;
    let mut prev = 0.0;
    for n in 0..=horizon {
        let big_e = cumulative.get(n) as f64 - cum_t[n];
        let lhs = profile.get(n) as f64 - t[n];
        let rhs = big_e - prev;
        residual = residual.max((lhs - rhs).abs());
        max_abs = max_abs.max(big_e.abs());
        prev = big_e;
    }
    Ok(Eq7Check {
        residual,
        max_abs_cumulative_error: max_abs,
    })
}

/// `(sum_{k<=N} b_k^2)(sum_{k<=N} e_k^2) / (sum_{k<=N} b_k)^3`; `None` when
/// the denominator vanishes.
pub fn condition4_ratio(weights: &WeightSequence, errors: &[f64], horizon: usize) -> Result<Option<f64>> {
    if errors.len() <= horizon {
        return Err(Error::OutOfRange {
            index: horizon,
            cap: errors.len().saturating_sub(1),
        });
    }
    let b = weights.weights_upto(horizon)?;
    let b_sum: CompensatedSum = b.iter().copied().collect();
    let b_sq: CompensatedSum = b.iter().map(|x| x * x).collect();
    let e_sq: CompensatedSum = errors[..=horizon].iter().map(|x| x * x).collect();
    let denom = b_sum.value().powi(3);
    Ok((denom > 0.0).then(|| b_sq.value() * e_sq.value() / denom))
}

/// The ratio at each horizon in `horizons`.
pub fn condition4_trajectory(
    weights: &WeightSequence,
    errors: &[f64],
    horizons: &[usize],
) -> Result<Vec<(usize, Option<f64>)>> {
    horizons
        .iter()
        .map(|&n| condition4_ratio(weights, errors, n).map(|v| (n, v)))
        .collect()
}

/// The ratio with `e_k` taken as the cumulative error `E_k` of `series`,
/// the error term of the cumulative representation count.
pub fn condition4_ratio_of_series(
    weights: &WeightSequence,
    series: &ErrorSeries,
    horizon: usize,
) -> Result<Option<f64>> {
    condition4_ratio(weights, series.cumulative(), horizon)
}
