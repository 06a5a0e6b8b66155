//! Multi-seed experiments over the two randomized constructions.
//!
//! Trial `i` uses seed `base_seed + i` (wrapping) and runs
//! construct → count → error series → threshold scan. Trials may run on any
//! number of workers; results are collected by trial index, so every output
//! byte depends only on the configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{error_series_against, violation_scan, TargetProfile, Which};
use crate::construct::{sample_bernoulli_set, sample_block_set, BlockSamplerParams};
use crate::error::{Error, Result};
use crate::numeric::nearest_rank;
use crate::repfn::{repfn_auto, IntegerSet};
use crate::weights::WeightSequence;

pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Block sampler against `0.5 (p/q)^2 N^2 + 1.5 (p/q)^2 N`.
    Thm3,
    /// Bernoulli set against the convolution target of its weights.
    Thm6,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "thm3" => Ok(ExperimentKind::Thm3),
            "thm6" => Ok(ExperimentKind::Thm6),
            other => Err(Error::param(format!("unknown experiment kind '{other}'"))),
        }
    }
}

fn default_quad_factor() -> f64 {
    1.0
}

fn default_n_start() -> usize {
    2
}

fn default_workers() -> usize {
    1
}

fn default_budget() -> u64 {
    DEFAULT_MEMORY_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub p: Option<u64>,
    #[serde(default)]
    pub q: Option<u64>,
    /// Weight spec for `thm6`.
    #[serde(default)]
    pub weights: Option<String>,
    /// Multiplies the quadratic coefficient of the `thm3` target.
    #[serde(default = "default_quad_factor")]
    pub quad_factor: f64,
    pub n_max: usize,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub checkpoints: Vec<usize>,
    /// Normalized-error thresholds: pointwise for `thm6`, cumulative for `thm3`.
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_n_start")]
    pub n_start: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub memory_budget_bytes: u64,
    #[serde(default)]
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub out_json: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::param(format!("bad experiment config: {e}")))
    }

    pub fn thm3(p: u64, q: u64, n_max: usize, trials: usize, checkpoints: Vec<usize>) -> Self {
        Self::base(ExperimentKind::Thm3, n_max, trials, checkpoints, Some(p), Some(q), None)
    }

    pub fn thm6(weights: &str, n_max: usize, trials: usize, checkpoints: Vec<usize>) -> Self {
        Self::base(
            ExperimentKind::Thm6,
            n_max,
            trials,
            checkpoints,
            None,
            None,
            Some(weights.to_string()),
        )
    }

    fn base(
        kind: ExperimentKind,
        n_max: usize,
        trials: usize,
        checkpoints: Vec<usize>,
        p: Option<u64>,
        q: Option<u64>,
        weights: Option<String>,
    ) -> Self {
        Self {
            kind,
            p,
            q,
            weights,
            quad_factor: 1.0,
            n_max,
            trials,
            base_seed: 0,
            checkpoints,
            thresholds: Vec::new(),
            n_start: 2,
            workers: 1,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            out_csv: None,
            out_json: None,
        }
    }

    pub fn which(&self) -> Which {
        match self.kind {
            ExperimentKind::Thm3 => Which::Cumulative,
            ExperimentKind::Thm6 => Which::Pointwise,
        }
    }

    fn validate(&self) -> Result<Construction> {
        if self.trials == 0 {
            return Err(Error::param("trials must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::param("workers must be >= 1"));
        }
        if self.n_start < 2 {
            return Err(Error::param("n_start must be >= 2"));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("checkpoints must be strictly increasing"));
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.n_max {
                return Err(Error::param(format!(
                    "checkpoint {last} exceeds n_max = {}",
                    self.n_max
                )));
            }
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::param(format!("threshold {t} must be positive")));
        }
        match self.kind {
            ExperimentKind::Thm3 => {
                let (p, q) = match (self.p, self.q) {
                    (Some(p), Some(q)) => (p, q),
                    _ => return Err(Error::param("thm3 experiments need p and q")),
                };
                if !(self.quad_factor.is_finite() && self.quad_factor > 0.0) {
                    return Err(Error::param("quad_factor must be positive"));
                }
                let n_blocks = (self.n_max as u64 + 1).div_ceil(q.max(1));
                let params = BlockSamplerParams {
                    p,
                    q,
                    n_blocks,
                    seed: 0,
                };
                params.validate()?;
                Ok(Construction::Blocks(params))
            }
            ExperimentKind::Thm6 => {
                let spec = self
                    .weights
                    .as_deref()
                    .ok_or_else(|| Error::param("thm6 experiments need a weight spec"))?;
                let w = WeightSequence::parse(spec)?;
                if let Some(cap) = w.n_cap() {
                    if cap < self.n_max {
                        return Err(Error::OutOfRange { index: self.n_max, cap });
                    }
                }
                Ok(Construction::Bernoulli(w))
            }
        }
    }

    /// Peak bytes held by one worker while running a trial.
    pub fn bytes_per_worker(&self) -> u64 {
        let n = self.n_max as u64 + 1;
        let bits = n / 8 + 8;
        let fft = (2 * n).next_power_of_two() * 16 + 8 * n;
        // R, two target arrays, e, E, and the two optional normalized arrays.
        let series = n * (8 + 16 + 16 + 32);
        bits + fft.max(series)
    }
}

#[derive(Debug, Clone)]
enum Construction {
    Blocks(BlockSamplerParams),
    Bernoulli(WeightSequence),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointValue {
    pub n: usize,
    /// `E_N`.
    pub cumulative_error: f64,
    /// `E_N / (sqrt(N) sqrt(log N))`.
    pub norm_cum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    pub violations: usize,
    pub last: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub checkpoints: Vec<CheckpointValue>,
    /// Largest `|norm_pt|` over `[n_start, n_max]`.
    pub max_abs_norm_pt: Option<f64>,
    pub violations: Vec<ThresholdCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

impl Spread {
    /// Nearest-rank statistics; `None` for an empty sample.
    pub fn of(mut values: Vec<f64>) -> Option<Self> {
        values.sort_by(f64::total_cmp);
        Some(Self {
            min: *values.first()?,
            median: nearest_rank(&values, 50.0)?,
            p95: nearest_rank(&values, 95.0)?,
            max: *values.last()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub n: usize,
    pub abs_norm_cum: Option<Spread>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSummary {
    pub threshold: f64,
    pub which: Which,
    pub trials_without_violation: usize,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub checkpoints: Vec<CheckpointSummary>,
    pub thresholds: Vec<ThresholdSummary>,
    pub max_abs_norm_pt: Option<Spread>,
    pub trials: Vec<TrialResult>,
}

impl ExperimentReport {
    /// Median over trials of `|norm_cum|` at checkpoint `n`.
    pub fn median_abs_norm_cum(&self, n: usize) -> Option<f64> {
        self.checkpoints
            .iter()
            .find(|c| c.n == n)
            .and_then(|c| c.abs_norm_cum.as_ref())
            .map(|s| s.median)
    }

    /// `trial,checkpoint,metric,value`; whole-range metrics use
    /// `checkpoint = n_max`, undefined values leave `value` empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "trial,checkpoint,metric,value")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let n_max = self.config.n_max;
        for t in &self.trials {
            for c in &t.checkpoints {
                writeln!(out, "{},{},E,{}", t.trial, c.n, c.cumulative_error)?;
                writeln!(out, "{},{},norm_cum,{}", t.trial, c.n, opt(c.norm_cum))?;
            }
            writeln!(out, "{},{n_max},max_abs_norm_pt,{}", t.trial, opt(t.max_abs_norm_pt))?;
            for v in &t.violations {
                writeln!(out, "{},{n_max},violations@{},{}", t.trial, v.threshold, v.violations)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.into()))
    }

    /// Writes the CSV and JSON summary to the configured paths, if any.
    pub fn persist(&self) -> Result<()> {
        if let Some(path) = &self.config.out_csv {
            self.write_csv(File::create(path)?)?;
        }
        if let Some(path) = &self.config.out_json {
            std::fs::write(path, self.to_json()? + "\n")?;
        }
        Ok(())
    }
}

fn build_set(construction: &Construction, n_max: usize, seed: u64) -> Result<IntegerSet> {
    match construction {
        Construction::Blocks(params) => {
            let set = sample_block_set(&BlockSamplerParams { seed, ..*params })?;
            Ok(set.truncate(n_max))
        }
        Construction::Bernoulli(w) => sample_bernoulli_set(w, n_max, seed),
    }
}

fn target_for(cfg: &ExperimentConfig, construction: &Construction) -> Result<TargetProfile> {
    match construction {
        Construction::Blocks(params) => {
            let density = (params.p as f64 / params.q as f64).powi(2);
            Ok(TargetProfile::quadratic(
                0.5 * cfg.quad_factor * density,
                1.5 * density,
                cfg.n_max,
            ))
        }
        Construction::Bernoulli(w) => TargetProfile::from_weights(w, cfg.n_max),
    }
}

fn run_trial(
    cfg: &ExperimentConfig,
    construction: &Construction,
    target: &TargetProfile,
    trial: usize,
) -> Result<TrialResult> {
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let set = build_set(construction, cfg.n_max, seed)?;
    let profile = repfn_auto(&set);
    drop(set);
    let series = error_series_against(&profile, target)?;
    let checkpoints = cfg
        .checkpoints
        .iter()
        .map(|&n| CheckpointValue {
            n,
            cumulative_error: series.cumulative()[n],
            norm_cum: series.norm_cumulative()[n],
        })
        .collect();
    let violations = cfg
        .thresholds
        .iter()
        .map(|&threshold| {
            violation_scan(&series, threshold, cfg.which(), cfg.n_start).map(|scan| ThresholdCount {
                threshold,
                violations: scan.count(),
                last: scan.last,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialResult {
        trial,
        seed,
        checkpoints,
        max_abs_norm_pt: series.max_abs_norm_pointwise(cfg.n_start),
        violations,
    })
}

/// Runs all trials and aggregates them; does not write any files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let construction = cfg.validate()?;
    let required = cfg.bytes_per_worker();
    if required > cfg.memory_budget_bytes {
        return Err(Error::Capacity {
            what: format!("n_max = {}", cfg.n_max),
            required,
            budget: cfg.memory_budget_bytes,
        });
    }
    let target = target_for(cfg, &construction)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let trials: Vec<TrialResult> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, &construction, &target, i))
            .collect::<Result<Vec<_>>>()
    })?;

    let checkpoints = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, &n)| CheckpointSummary {
            n,
            abs_norm_cum: Spread::of(
                trials
                    .iter()
                    .filter_map(|t| t.checkpoints[i].norm_cum.map(f64::abs))
                    .collect(),
            ),
        })
        .collect();
    let thresholds = cfg
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let counts: Vec<usize> = trials.iter().map(|t| t.violations[i].violations).collect();
            ThresholdSummary {
                threshold,
                which: cfg.which(),
                trials_without_violation: counts.iter().filter(|&&c| c == 0).count(),
                counts,
            }
        })
        .collect();
    let max_abs_norm_pt = Spread::of(trials.iter().filter_map(|t| t.max_abs_norm_pt).collect());
    Ok(ExperimentReport {
        config: cfg.clone(),
        checkpoints,
        thresholds,
        max_abs_norm_pt,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_bernoulli_set_has_no_error() {
        let mut cfg = ExperimentConfig::thm6("constant:c=1", 5000, 3, vec![10, 100, 5000]);
        cfg.thresholds = vec![1.0];
        let report = run_experiment(&cfg).unwrap();
        for t in &report.trials {
            assert!(t.checkpoints.iter().all(|c| c.cumulative_error == 0.0));
            assert_eq!(t.max_abs_norm_pt, Some(0.0));
            assert_eq!(t.violations[0].violations, 0);
        }
        assert_eq!(report.thresholds[0].trials_without_violation, 3);
    }

    #[test]
    fn validation_errors() {
        let good = ExperimentConfig::thm3(1, 2, 1000, 2, vec![10, 100]);
        assert!(run_experiment(&good).is_ok());

        let mut cfg = good.clone();
        cfg.trials = 0;
        assert!(matches!(run_experiment(&cfg), Err(Error::Param(_))));

        let mut cfg = good.clone();
        cfg.checkpoints = vec![100, 10];
        assert!(matches!(run_experiment(&cfg), Err(Error::Param(_))));

        let mut cfg = good.clone();
        cfg.checkpoints = vec![2000];
        assert!(matches!(run_experiment(&cfg), Err(Error::Param(_))));

        let mut cfg = good.clone();
        cfg.p = Some(2);
        assert!(matches!(run_experiment(&cfg), Err(Error::Param(_))));

        let mut cfg = good.clone();
        cfg.kind = ExperimentKind::Thm6;
        assert!(matches!(run_experiment(&cfg), Err(Error::Param(_))));
    }

    #[test]
    fn capacity_error_states_budget() {
        let mut cfg = ExperimentConfig::thm3(1, 2, 10_000_000, 1, vec![]);
        cfg.memory_budget_bytes = 1 << 20;
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn ten_million_fits_default_budget() {
        let cfg = ExperimentConfig::thm3(1, 2, 10_000_000, 1, vec![]);
        assert!(cfg.bytes_per_worker() < DEFAULT_MEMORY_BUDGET);
    }

    #[test]
    fn config_json_roundtrip_and_defaults() {
        let json = r#"{"kind":"thm3","p":1,"q":2,"n_max":1000,"trials":4,"checkpoints":[100,1000]}"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.quad_factor, 1.0);
        assert_eq!(cfg.n_start, 2);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"kind":"thm3","bogus":1}"#).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut cfg = ExperimentConfig::thm3(1, 3, 300, 2, vec![1, 300]);
        cfg.thresholds = vec![8.0];
        let report = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "trial,checkpoint,metric,value");
        assert!(lines[1].starts_with("0,1,E,"));
        assert_eq!(lines[2], "0,1,norm_cum,");
        assert!(lines.iter().any(|l| l.starts_with("1,300,violations@8,")));
        assert_eq!(lines.len(), 1 + 2 * (4 + 1 + 1));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = ExperimentConfig::thm3(2, 5, 20_000, 6, vec![1000, 20_000]);
        cfg.thresholds = vec![0.5, 2.0];
        let one = run_experiment(&cfg).unwrap();
        cfg.workers = 4;
        let four = run_experiment(&cfg).unwrap();
        assert_eq!(one.trials, four.trials);
    }
}
