//! Error series against a convolution target, the two tail bounds used in the
//! probabilistic constructions, and threshold scans over normalized errors.
//!
//! Logarithms are natural throughout.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{prefix_sums, CompensatedSum};
use crate::repfn::RepProfile;
use crate::weights::WeightSequence;

/// Pointwise targets `T(n)` and cumulative targets `sum_{m<=n} T(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetProfile {
    pointwise: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TargetProfile {
    pub fn from_weights(weights: &WeightSequence, n_max: usize) -> Result<Self> {
        Ok(Self {
            pointwise: weights.convolution_target(n_max)?,
            cumulative: weights.cumulative_targets(n_max)?,
        })
    }

    /// Cumulative target `quad N^2 + lin N`; the pointwise target is its
    /// first difference (`0` at `n = 0`).
    pub fn quadratic(quad: f64, lin: f64, n_max: usize) -> Self {
        let pointwise = (0..=n_max)
            .map(|n| {
                if n == 0 {
                    0.0
                } else {
                    quad * (2.0 * n as f64 - 1.0) + lin
                }
            })
            .collect();
        let cumulative = (0..=n_max)
            .map(|n| {
                let x = n as f64;
                quad * x * x + lin * x
            })
            .collect();
        Self { pointwise, cumulative }
    }

    pub fn from_pointwise(pointwise: Vec<f64>) -> Self {
        let cumulative = prefix_sums(&pointwise);
        Self { pointwise, cumulative }
    }

    pub fn n_max(&self) -> usize {
        self.pointwise.len() - 1
    }

    pub fn pointwise(&self) -> &[f64] {
        &self.pointwise
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }
}

/// `e_n = R(n) - T(n)`, `E_N = sum_{n<=N} e_n = S(N) - CumT(N)` and their
/// normalizations `e_n / sqrt(T(n) log n)` and `E_N / (sqrt(N) sqrt(log N))`.
///
/// Normalized values are `None` for indices below 2 and where `T(n) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pointwise: Vec<f64>,
    cumulative: Vec<f64>,
    norm_pointwise: Vec<Option<f64>>,
    norm_cumulative: Vec<Option<f64>>,
}

impl ErrorSeries {
    pub fn n_max(&self) -> usize {
        self.pointwise.len() - 1
    }

    /// `e_n`.
    pub fn pointwise(&self) -> &[f64] {
        &self.pointwise
    }

    /// `E_N`.
    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn norm_pointwise(&self) -> &[Option<f64>] {
        &self.norm_pointwise
    }

    pub fn norm_cumulative(&self) -> &[Option<f64>] {
        &self.norm_cumulative
    }

    pub fn norm(&self, which: Which) -> &[Option<f64>] {
        match which {
            Which::Pointwise => &self.norm_pointwise,
            Which::Cumulative => &self.norm_cumulative,
        }
    }

    /// Largest `|norm_pt(n)|` over `n_start <= n <= n_max`.
    pub fn max_abs_norm_pointwise(&self, n_start: usize) -> Option<f64> {
        self.norm_pointwise
            .iter()
            .skip(n_start)
            .flatten()
            .map(|v| v.abs())
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Writes `n,e,E,norm_pt,norm_cum`, undefined values as empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,e,E,norm_pt,norm_cum")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for n in 0..self.pointwise.len() {
            writeln!(
                out,
                "{n},{},{},{},{}",
                self.pointwise[n],
                self.cumulative[n],
                opt(self.norm_pointwise[n]),
                opt(self.norm_cumulative[n])
            )?;
        }
        Ok(())
    }
}

pub fn error_series(profile: &RepProfile, weights: &WeightSequence) -> Result<ErrorSeries> {
    let target = TargetProfile::from_weights(weights, profile.n_max())?;
    error_series_against(profile, &target)
}

pub fn error_series_against(profile: &RepProfile, target: &TargetProfile) -> Result<ErrorSeries> {
    let n_max = profile.n_max();
    if target.n_max() < n_max {
        return Err(Error::OutOfRange {
            index: n_max,
            cap: target.n_max(),
        });
    }
    let t = &target.pointwise;
    let pointwise: Vec<f64> = profile.values().iter().zip(t).map(|(&r, &t)| r as f64 - t).collect();
    let mut acc = CompensatedSum::new();
    let cumulative: Vec<f64> = pointwise
        .iter()
        .map(|&e| {
            acc.add(e);
            acc.value()
        })
        .collect();
    let norm_pointwise = pointwise
        .iter()
        .enumerate()
        .map(|(n, &e)| (n >= 2 && t[n] > 0.0).then(|| e / (t[n] * (n as f64).ln()).sqrt()))
        .collect();
    let norm_cumulative = cumulative
        .iter()
        .enumerate()
        .map(|(n, &big_e)| {
            (n >= 2).then(|| {
                let x = n as f64;
                big_e / (x.sqrt() * x.ln().sqrt())
            })
        })
        .collect();
    Ok(ErrorSeries {
        pointwise,
        cumulative,
        norm_pointwise,
        norm_cumulative,
    })
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {v} must be >= 0")))
    }
}

/// Hoeffding: `P(|eta - E eta| >= y D) <= exp(-2 y^2)`.
pub fn hoeffding_tail(y: f64) -> Result<f64> {
    check_nonneg("y", y)?;
    Ok((-2.0 * y * y).exp())
}

/// Chernoff for sums of independent booleans:
/// `P(|X - E X| >= eps E X) <= 2 exp(-min(eps^2 / 4, eps / 2) E X)`.
/// The leading factor 2 is kept.
pub fn chernoff_tail(eps: f64, expectation: f64) -> Result<f64> {
    check_nonneg("eps", eps)?;
    check_nonneg("ex", expectation)?;
    let rate = if eps <= 2.0 { eps * eps / 4.0 } else { eps / 2.0 };
    Ok(2.0 * (-rate * expectation).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Pointwise,
    Cumulative,
}

impl std::str::FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(Which::Pointwise),
            "cumulative" => Ok(Which::Cumulative),
            other => Err(Error::param(format!("expected pointwise|cumulative, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub threshold: f64,
    pub which: Which,
    pub n_start: usize,
    /// Every `n >= n_start` with `|norm(n)| >= threshold`.
    pub indices: Vec<usize>,
    /// Largest violating index.
    pub last: Option<usize>,
    /// Index and value of the largest `|norm(n)|` among the violators.
    pub worst: Option<(usize, f64)>,
}

impl ViolationReport {
    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn holds(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Indices `n >= n_start` whose normalized error reaches `threshold`.
/// Undefined normalized values are skipped.
pub fn violation_scan(series: &ErrorSeries, threshold: f64, which: Which, n_start: usize) -> Result<ViolationReport> {
    if n_start < 2 {
        return Err(Error::param(format!("n_start = {n_start} must be >= 2")));
    }
    if !(threshold > 0.0) {
        return Err(Error::param(format!("threshold = {threshold} must be positive")));
    }
    let mut indices = Vec::new();
    let mut worst: Option<(usize, f64)> = None;
    for (n, v) in series.norm(which).iter().enumerate().skip(n_start) {
        if let Some(v) = v {
            let a = v.abs();
            if a >= threshold {
                indices.push(n);
                if worst.map_or(true, |(_, w)| a > w) {
                    worst = Some((n, a));
                }
            }
        }
    }
    Ok(ViolationReport {
        threshold,
        which,
        n_start,
        last: indices.last().copied(),
        indices,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repfn::{repfn_naive, IntegerSet};

    #[test]
    fn full_interval_has_zero_error() {
        let set = IntegerSet::full(200);
        let s = error_series(&repfn_naive(&set), &WeightSequence::constant(1.0).unwrap()).unwrap();
        assert!(s.pointwise().iter().all(|&e| e == 0.0));
        assert!(s.cumulative().iter().all(|&e| e == 0.0));
        let scan = violation_scan(&s, 1e-9, Which::Pointwise, 2).unwrap();
        assert!(scan.holds());
    }

    #[test]
    fn empty_set_error_is_minus_target() {
        let set = IntegerSet::empty(100);
        let s = error_series(&repfn_naive(&set), &WeightSequence::constant(0.5).unwrap()).unwrap();
        for (n, &e) in s.pointwise().iter().enumerate() {
            assert_eq!(e, -0.5 * (n as f64 + 1.0));
        }
        let scan = violation_scan(&s, 3.0, Which::Pointwise, 2).unwrap();
        assert!(!scan.holds());
        assert!(scan.indices.contains(&100));
        assert_eq!(scan.last, Some(100));
    }

    #[test]
    fn undefined_norms_are_marked() {
        let set = IntegerSet::from_elements(10, [1, 3]).unwrap();
        let w = WeightSequence::table(vec![0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let s = error_series(&repfn_naive(&set), &w).unwrap();
        assert_eq!(s.norm_pointwise()[0], None);
        assert_eq!(s.norm_pointwise()[1], None);
        assert_eq!(s.norm_pointwise()[2], None); // T(2) = 0
        assert!(s.norm_pointwise()[6].is_some());
        assert_eq!(s.norm_cumulative()[1], None);
        assert!(s.norm_cumulative()[2].is_some());
    }

    #[test]
    fn csv_leaves_undefined_fields_empty() {
        let set = IntegerSet::from_elements(3, [0]).unwrap();
        let s = error_series(&repfn_naive(&set), &WeightSequence::constant(0.25).unwrap()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,e,E,norm_pt,norm_cum");
        assert_eq!(lines[1], "0,0.75,0.75,,");
        assert_eq!(lines[2], "1,-0.5,0.25,,");
        assert!(lines[3].starts_with("2,-0.75,-0.5,"));
        assert_eq!(lines[3].split(',').filter(|f| f.is_empty()).count(), 0);
    }

    #[test]
    fn hoeffding_values() {
        assert_eq!(hoeffding_tail(0.0).unwrap(), 1.0);
        let v = hoeffding_tail(1.0).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-15);
        let y = 100f64.ln().sqrt();
        assert!((hoeffding_tail(y).unwrap() - 1e-4).abs() <= 1e-12 * 1e-4);
        assert!(matches!(hoeffding_tail(-0.1), Err(Error::Param(_))));
        assert!(hoeffding_tail(f64::NAN).is_err());
    }

    #[test]
    fn chernoff_values() {
        assert_eq!(chernoff_tail(0.0, 123.0).unwrap(), 2.0);
        let at_two = chernoff_tail(2.0, 1.0).unwrap();
        assert!((at_two - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        // Continuity across the branch point.
        let below = chernoff_tail(2.0 - 1e-9, 1.0).unwrap();
        let above = chernoff_tail(2.0 + 1e-9, 1.0).unwrap();
        assert!((below - above).abs() < 1e-8);
        // eps = sqrt(8 log n / sum), ex = sum gives 2 n^-2.
        let (n, sum) = (1000f64, 400.0);
        let eps = (8.0 * n.ln() / sum).sqrt();
        assert!(eps < 2.0);
        let v = chernoff_tail(eps, sum).unwrap();
        assert!((v - 2.0 / (n * n)).abs() <= 1e-12 * v);
        assert!(chernoff_tail(-1.0, 1.0).is_err());
        assert!(chernoff_tail(1.0, -1.0).is_err());
    }

    #[test]
    fn quadratic_target_differences() {
        let t = TargetProfile::quadratic(0.125, 0.375, 50);
        for n in 1..=50 {
            let d = t.cumulative()[n] - t.cumulative()[n - 1];
            assert!((d - t.pointwise()[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn scan_rejects_small_start() {
        let set = IntegerSet::full(10);
        let s = error_series(&repfn_naive(&set), &WeightSequence::constant(1.0).unwrap()).unwrap();
        assert!(violation_scan(&s, 1.0, Which::Pointwise, 1).is_err());
        assert!(violation_scan(&s, 0.0, Which::Pointwise, 2).is_err());
    }
}
