//! Weight sequences `b_n` and their convolution targets
//! `T(n) = sum_{k<=n} b_k b_{n-k}`.
//!
//! Two families have closed-form targets:
//!
//! * constant weights `b_n = sqrt(c)` (optionally with a separate `b_0`),
//!   where `T(n) = c (n + 1)`;
//! * central-binomial weights `b_n = sqrt(c) * C(2n, n) / 4^n`, the
//!   coefficients of `sqrt(c) (1 - z)^{-1/2}`, whose square is
//!   `c / (1 - z)`, so `T(n) = c` for every `n`.
//!
//! Explicit tables are convolved numerically.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::prefix_sums;
use crate::transform::self_convolve_real;

/// Tables at most this long are convolved with the direct double sum.
pub const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Constant,
    CentralBinomial,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Constant { c: f64, b0: Option<f64> },
    CentralBinomial { c: f64 },
    Table(Vec<f64>),
}

/// A sequence `0 <= b_n <= 1`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    repr: Repr,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {v} must lie in [0, 1]")))
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::param(format!("c = {c} must be a finite value >= 0")));
    }
    check_unit("sqrt(c)", c.sqrt())
}

impl WeightSequence {
    /// `b_n = sqrt(c)` for all `n`.
    pub fn constant(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self {
            repr: Repr::Constant { c, b0: None },
        })
    }

    /// `b_0 = b0`, `b_n = sqrt(c)` for `n >= 1`.
    pub fn constant_with_b0(c: f64, b0: f64) -> Result<Self> {
        check_c(c)?;
        check_unit("b0", b0)?;
        Ok(Self {
            repr: Repr::Constant { c, b0: Some(b0) },
        })
    }

    /// `b_n = sqrt(c) * C(2n, n) / 4^n`.
    pub fn central_binomial(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self {
            repr: Repr::CentralBinomial { c },
        })
    }

    /// Explicit finite table; `b_n` is defined for `n < table.len()`.
    pub fn table(table: Vec<f64>) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::param("weight table is empty"));
        }
        for (i, &v) in table.iter().enumerate() {
            check_unit(&format!("table[{i}]"), v)?;
        }
        Ok(Self {
            repr: Repr::Table(table),
        })
    }

    /// Parses `constant:c=0.5[,b0=0.3]`, `cbinom:c=0.7`, `table:@path`
    /// (one real per line) or `table:0.5,0.25,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::param(format!("weight spec '{spec}' lacks a ':'")))?;
        match kind {
            "constant" | "cbinom" => {
                let mut c = None;
                let mut b0 = None;
                for item in rest.split(',').filter(|s| !s.is_empty()) {
                    let (key, value) = item
                        .split_once('=')
                        .ok_or_else(|| Error::param(format!("expected key=value, got '{item}'")))?;
                    let value: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::param(format!("bad number in '{item}'")))?;
                    match key.trim() {
                        "c" => c = Some(value),
                        "b0" if kind == "constant" => b0 = Some(value),
                        other => return Err(Error::param(format!("unknown key '{other}' for {kind}"))),
                    }
                }
                let c = c.ok_or_else(|| Error::param(format!("{kind} weights need c=...")))?;
                match (kind, b0) {
                    ("constant", Some(b0)) => Self::constant_with_b0(c, b0),
                    ("constant", None) => Self::constant(c),
                    _ => Self::central_binomial(c),
                }
            }
            "table" => {
                if let Some(path) = rest.strip_prefix('@') {
                    Self::read_table(path)
                } else {
                    let values = rest
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::param(format!("bad table entry '{s}'")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Self::table(values)
                }
            }
            other => Err(Error::param(format!("unknown weight kind '{other}'"))),
        }
    }

    fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .parse::<f64>()
                .map_err(|_| Error::format(format!("line {}: '{line}' is not a real", lineno + 1)))?;
            values.push(v);
        }
        Self::table(values)
    }

    pub fn kind(&self) -> WeightKind {
        match self.repr {
            Repr::Constant { .. } => WeightKind::Constant,
            Repr::CentralBinomial { .. } => WeightKind::CentralBinomial,
            Repr::Table(_) => WeightKind::Table,
        }
    }

    /// Largest defined index; `None` for the unbounded families.
    pub fn n_cap(&self) -> Option<usize> {
        match &self.repr {
            Repr::Table(t) => Some(t.len() - 1),
            _ => None,
        }
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.n_cap() {
            Some(cap) if n > cap => Err(Error::OutOfRange { index: n, cap }),
            _ => Ok(()),
        }
    }

    /// `b_n`. Central-binomial weights use `b_n = b_{n-1} (2n - 1) / (2n)`.
    pub fn weight_at(&self, n: usize) -> Result<f64> {
        self.check_range(n)?;
        Ok(match &self.repr {
            Repr::Constant { c, b0 } => match (n, b0) {
                (0, Some(b0)) => *b0,
                _ => c.sqrt(),
            },
            Repr::CentralBinomial { c } => {
                let mut b = c.sqrt();
                for k in 1..=n {
                    b *= (2 * k - 1) as f64 / (2 * k) as f64;
                }
                b
            }
            Repr::Table(t) => t[n],
        })
    }

    /// `b_0, ..., b_{n_max}`.
    pub fn weights_upto(&self, n_max: usize) -> Result<Vec<f64>> {
        self.check_range(n_max)?;
        Ok(match &self.repr {
            Repr::Constant { c, b0 } => {
                let mut v = vec![c.sqrt(); n_max + 1];
                if let Some(b0) = b0 {
                    v[0] = *b0;
                }
                v
            }
            Repr::CentralBinomial { c } => {
                let mut v = Vec::with_capacity(n_max + 1);
                let mut b = c.sqrt();
                v.push(b);
                for k in 1..=n_max {
                    b *= (2 * k - 1) as f64 / (2 * k) as f64;
                    v.push(b);
                }
                v
            }
            Repr::Table(t) => t[..=n_max].to_vec(),
        })
    }

    /// Closed-form `T(n)` for the constant family.
    fn constant_target(c: f64, b0: Option<f64>, n: usize) -> f64 {
        match b0 {
            None => c * (n as f64 + 1.0),
            Some(b0) if n == 0 => b0 * b0,
            Some(b0) => 2.0 * b0 * c.sqrt() + (n as f64 - 1.0) * c,
        }
    }

    /// Closed-form `sum_{n<=big_n} T(n)` for the constant family.
    fn constant_cumulative(c: f64, b0: Option<f64>, big_n: usize) -> f64 {
        let n = big_n as f64;
        match b0 {
            None => c * (n + 1.0) * (n + 2.0) / 2.0,
            Some(b0) => b0 * b0 + 2.0 * b0 * c.sqrt() * n + c * n * (n - 1.0) / 2.0,
        }
    }

    /// `T(0), ..., T(n_max)`.
    pub fn convolution_target(&self, n_max: usize) -> Result<Vec<f64>> {
        self.check_range(n_max)?;
        Ok(match &self.repr {
            Repr::Constant { c, b0 } => (0..=n_max).map(|n| Self::constant_target(*c, *b0, n)).collect(),
            Repr::CentralBinomial { c } => vec![*c; n_max + 1],
            Repr::Table(t) => {
                let b = &t[..=n_max];
                if n_max < DIRECT_CONVOLUTION_LIMIT {
                    direct_self_convolution(b)
                } else {
                    self_convolve_real(b, n_max + 1)
                }
            }
        })
    }

    /// `sum_{n<=big_n} T(n)`.
    pub fn cumulative_target(&self, big_n: usize) -> Result<f64> {
        self.check_range(big_n)?;
        Ok(match &self.repr {
            Repr::Constant { c, b0 } => Self::constant_cumulative(*c, *b0, big_n),
            Repr::CentralBinomial { c } => c * (big_n as f64 + 1.0),
            Repr::Table(_) => *prefix_sums(&self.convolution_target(big_n)?)
                .last()
                .expect("non-empty target"),
        })
    }

    /// `sum_{n<=N} T(n)` for every `N <= n_max`.
    pub fn cumulative_targets(&self, n_max: usize) -> Result<Vec<f64>> {
        self.check_range(n_max)?;
        Ok(match &self.repr {
            Repr::Constant { c, b0 } => (0..=n_max).map(|n| Self::constant_cumulative(*c, *b0, n)).collect(),
            Repr::CentralBinomial { c } => (0..=n_max).map(|n| c * (n as f64 + 1.0)).collect(),
            Repr::Table(_) => prefix_sums(&self.convolution_target(n_max)?),
        })
    }
}

fn direct_self_convolution(b: &[f64]) -> Vec<f64> {
    (0..b.len())
        .map(|n| {
            // Pair k with n - k from both ends; the middle term once.
            let mut s = 0.0;
            for k in 0..(n + 1) / 2 {
                s += b[k] * b[n - k];
            }
            s *= 2.0;
            if n % 2 == 0 {
                s += b[n / 2] * b[n / 2];
            }
            s
        })
        .collect()
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Constant { c, b0: None } => write!(f, "constant:c={c}"),
            Repr::Constant { c, b0: Some(b0) } => write!(f, "constant:c={c},b0={b0}"),
            Repr::CentralBinomial { c } => write!(f, "cbinom:c={c}"),
            Repr::Table(t) => write!(f, "table:<{} entries>", t.len()),
        }
    }
}
