//! Monte-Carlo sweeps over remainder-error level and over SNR, comparing
//! the robust reconstruction with the search and naive baselines.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{nonrobust_estimate, searching_estimate};
use crate::error::{Error, Result};
use crate::gcrt2::ResidueFamily;
use crate::modmath::{ModulusSet, Rational};
use crate::robust::{robust_reconstruct, ErroneousResidueFamily};
use crate::sigsim::{derived_rng, extract_family, ToneSpec};

pub const CSV_HEADER: [&str; 6] = ["level", "estimator", "mean_error", "max_error", "trials", "failures"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Robust,
    Search,
    Nonrobust,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Robust, Estimator::Search, Estimator::Nonrobust];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Robust => "robust",
            Estimator::Search => "search",
            Estimator::Nonrobust => "nonrobust",
        }
    }

    fn run(self, fam: &ErroneousResidueFamily) -> Result<(Rational, Rational)> {
        match self {
            Estimator::Robust => robust_reconstruct(fam).map(|e| e.pre_rounding()),
            Estimator::Search => searching_estimate(fam).map(|p| (p.n1.into(), p.n2.into())),
            Estimator::Nonrobust => nonrobust_estimate(fam).map(|p| (p.n1.into(), p.n2.into())),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(Estimator::Robust),
            "search" => Ok(Estimator::Search),
            "nonrobust" => Ok(Estimator::Nonrobust),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    TauSweep,
    SnrSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "M")]
    pub big_m: i64,
    pub m: Vec<i64>,
    pub mode: SweepMode,
    /// Remainder-error bounds (integers) or SNRs in dB.
    pub levels: Vec<f64>,
    pub trials: usize,
    /// True values are drawn uniformly from `[range.0, range.1)`.
    pub range: (i64, i64),
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_TRIALS: usize = 2000;
pub const FULL_TRIALS: usize = 10000;

impl ExperimentConfig {
    /// `M = 100`, `m = (3, 5, 7)`, errors up to 0..15, values in `[0, 2000)`.
    pub fn tau_preset() -> Self {
        Self {
            big_m: 100,
            m: vec![3, 5, 7],
            mode: SweepMode::TauSweep,
            levels: vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0],
            trials: DEFAULT_TRIALS,
            range: (0, 2000),
            seed: 0,
            estimators: vec![Estimator::Robust],
            out: None,
        }
    }

    /// `M = 100`, `m = (3, 5, 7)`, SNR 0..30 dB, frequencies in `(0, 2M*sqrt(Gamma))`.
    pub fn snr_preset() -> Self {
        let (big_m, m) = (100, vec![3, 5, 7]);
        Self {
            range: frequency_range(big_m, &m),
            big_m,
            m,
            mode: SweepMode::SnrSweep,
            levels: (0..=6).map(|i| 5.0 * i as f64).collect(),
            trials: DEFAULT_TRIALS,
            seed: 0,
            estimators: Estimator::ALL.to_vec(),
            out: None,
        }
    }

    pub fn modulus_set(&self) -> Result<ModulusSet> {
        ModulusSet::new(self.big_m, self.m.clone())
    }

    pub fn validate(&self) -> Result<ModulusSet> {
        let ms = self.modulus_set()?;
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("at least one level is required".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidArgument("at least one estimator is required".into()));
        }
        let (lo, hi) = self.range;
        if lo < 0 || hi <= lo {
            return Err(Error::InvalidArgument(format!("empty value range [{lo}, {hi})")));
        }
        match self.mode {
            SweepMode::TauSweep => {
                if let Some(bad) = self.levels.iter().find(|t| t.fract() != 0.0 || **t < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "error level {bad} is not a nonnegative integer"
                    )));
                }
            }
            SweepMode::SnrSweep => {
                if lo < 1 || hi - lo < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "frequency range [{lo}, {hi}) must be positive and hold two values"
                    )));
                }
                if self.levels.iter().any(|s| s.is_nan()) {
                    return Err(Error::InvalidArgument("SNR levels must be numbers".into()));
                }
            }
        }
        Ok(ms)
    }
}

/// Frequencies `1..=floor(2M*sqrt(Gamma)) - 1` as a half-open range.
pub fn frequency_range(big_m: i64, m: &[i64]) -> (i64, i64) {
    let gamma: i64 = m.iter().product();
    (1, (4 * big_m * big_m * gamma).isqrt())
}

/// Result of one estimator on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorOutcome {
    pub estimator: Estimator,
    /// Pre-rounding estimates; `None` when the estimator failed.
    pub estimate: Option<(f64, f64)>,
    pub mean_error: f64,
    pub max_error: f64,
    pub failure: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub level: f64,
    pub truth: (i64, i64),
    pub residues: Vec<(i64, i64)>,
    pub outcomes: Vec<EstimatorOutcome>,
}

/// Absolute errors under the better of the two pairings: `(mean, max)`.
pub fn matched_error(estimate: (Rational, Rational), truth: (i64, i64)) -> (Rational, Rational) {
    let t = (Rational::from(truth.0), Rational::from(truth.1));
    let abs = |x: Rational| if x < Rational::from(0) { -x } else { x };
    let straight = (abs(estimate.0 - t.0), abs(estimate.1 - t.1));
    let crossed = (abs(estimate.0 - t.1), abs(estimate.1 - t.0));
    let score = |e: (Rational, Rational)| (e.0 + e.1, e.0.max(e.1));
    let best = if score(crossed) < score(straight) {
        crossed
    } else {
        straight
    };
    ((best.0 + best.1) / 2, best.0.max(best.1))
}

/// Relative errors `|f_hat - f| / f` under the better pairing: `(mean, max)`.
pub fn matched_relative_error(estimate: (i64, i64), truth: (i64, i64)) -> (f64, f64) {
    let rel = |e: i64, f: i64| (e - f).abs() as f64 / f as f64;
    let straight = (rel(estimate.0, truth.0), rel(estimate.1, truth.1));
    let crossed = (rel(estimate.0, truth.1), rel(estimate.1, truth.0));
    let score = |e: (f64, f64)| (e.0 + e.1, e.0.max(e.1));
    let best = if score(crossed) < score(straight) {
        crossed
    } else {
        straight
    };
    ((best.0 + best.1) / 2.0, best.0.max(best.1))
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn run_estimators(
    fam: &ErroneousResidueFamily,
    truth: (i64, i64),
    estimators: &[Estimator],
    relative: bool,
) -> Vec<EstimatorOutcome> {
    estimators
        .iter()
        .map(|&estimator| {
            let start = Instant::now();
            let result = estimator.run(fam);
            let elapsed = start.elapsed();
            let (est, failure) = match result {
                Ok(est) => (est, None),
                // A failed estimator is scored as if it returned {0, 0}.
                Err(e) => ((Rational::from(0), Rational::from(0)), Some(e.kind().to_string())),
            };
            let (mean_error, max_error) = if relative {
                let rounded = (
                    crate::modmath::round_half_up_ratio(est.0),
                    crate::modmath::round_half_up_ratio(est.1),
                );
                matched_relative_error(rounded, truth)
            } else {
                let (mean, max) = matched_error(est, truth);
                (to_f64(mean), to_f64(max))
            };
            EstimatorOutcome {
                estimator,
                estimate: failure.is_none().then(|| (to_f64(est.0), to_f64(est.1))),
                mean_error,
                max_error,
                failure,
                elapsed,
            }
        })
        .collect()
}

fn sorted_pairs(fam: &ErroneousResidueFamily) -> Vec<(i64, i64)> {
    fam.pairs().iter().map(|&(a, b)| (a.min(b), a.max(b))).collect()
}

fn tau_trial(
    cfg: &ExperimentConfig,
    ms: &ModulusSet,
    level_index: usize,
    tau: i64,
    trial: usize,
) -> Result<TrialRecord> {
    let mut rng = derived_rng(&[cfg.seed, 1, level_index as u64, trial as u64]);
    let (lo, hi) = cfg.range;
    let truth = (rng.random_range(lo..hi), rng.random_range(lo..hi));
    let exact = ResidueFamily::from_values(ms.clone(), truth.0, truth.1);
    let noisy: Vec<(i64, i64)> = exact
        .pairs()
        .iter()
        .map(|&(a, b)| (a + rng.random_range(-tau..=tau), b + rng.random_range(-tau..=tau)))
        .collect();
    let wrapped = ErroneousResidueFamily::from_raw(ms.clone(), &noisy)?;
    // Residue sets are unordered; present each pair sorted.
    let fam = ErroneousResidueFamily::new(ms.clone(), sorted_pairs(&wrapped))?;
    Ok(TrialRecord {
        trial,
        level: tau as f64,
        truth,
        residues: fam.pairs().to_vec(),
        outcomes: run_estimators(&fam, truth, &cfg.estimators, false),
    })
}

fn snr_trial(
    cfg: &ExperimentConfig,
    ms: &ModulusSet,
    level_index: usize,
    snr: f64,
    trial: usize,
) -> Result<TrialRecord> {
    let mut rng = derived_rng(&[cfg.seed, 2, level_index as u64, trial as u64]);
    let (lo, hi) = cfg.range;
    let f1 = rng.random_range(lo..hi);
    let f2 = loop {
        let f = rng.random_range(lo..hi);
        if f != f1 {
            break f;
        }
    };
    let spec = ToneSpec::new(f1, f2, snr, rng.random());
    let fam = extract_family(&spec, ms)?;
    Ok(TrialRecord {
        trial,
        level: snr,
        truth: (f1, f2),
        residues: fam.pairs().to_vec(),
        outcomes: run_estimators(&fam, (f1, f2), &cfg.estimators, true),
    })
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub level: f64,
    pub estimator: Estimator,
    pub mean_error: f64,
    pub max_error: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

impl SweepResult {
    pub fn row(&self, level: f64, estimator: Estimator) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.level == level && r.estimator == estimator)
    }

    /// Total time spent inside one estimator across all trials.
    pub fn elapsed(&self, estimator: Estimator) -> Duration {
        self.records
            .iter()
            .flat_map(|r| &r.outcomes)
            .filter(|o| o.estimator == estimator)
            .map(|o| o.elapsed)
            .sum()
    }
}

fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        for &estimator in &cfg.estimators {
            let outcomes: Vec<&EstimatorOutcome> = records
                .iter()
                .filter(|r| r.level == level)
                .flat_map(|r| r.outcomes.iter().filter(|o| o.estimator == estimator))
                .collect();
            let trials = outcomes.len();
            let total: f64 = outcomes.iter().map(|o| o.mean_error).sum();
            rows.push(SummaryRow {
                level,
                estimator,
                mean_error: if trials == 0 { 0.0 } else { total / trials as f64 },
                max_error: outcomes.iter().map(|o| o.max_error).fold(0.0, f64::max),
                trials,
                failures: outcomes.iter().filter(|o| o.failure.is_some()).count(),
            });
        }
    }
    rows
}

fn run_sweep(cfg: &ExperimentConfig, expected: SweepMode) -> Result<SweepResult> {
    if cfg.mode != expected {
        return Err(Error::InvalidArgument(format!(
            "config mode is {:?}, expected {expected:?}",
            cfg.mode
        )));
    }
    let ms = cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.levels.len() * cfg.trials);
    for (li, &level) in cfg.levels.iter().enumerate() {
        let batch: Vec<TrialRecord> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| match expected {
                SweepMode::TauSweep => tau_trial(cfg, &ms, li, level as i64, t),
                SweepMode::SnrSweep => snr_trial(cfg, &ms, li, level, t),
            })
            .collect::<Result<_>>()?;
        records.extend(batch);
    }
    let summary = summarize(cfg, &records);
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Remainder-error sweep: exact residues of uniform pairs plus integer
/// errors uniform on `[-tau, tau]`, wrapped into `[0, M_k)`. Errors are
/// absolute and measured on pre-rounding estimates.
pub fn run_tau_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(cfg, SweepMode::TauSweep)
}

/// SNR sweep through waveform synthesis and DFT peak picking. Errors are
/// relative and measured on rounded estimates.
pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    run_sweep(cfg, SweepMode::SnrSweep)
}

pub fn csv_string(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            r.estimator.to_string(),
            r.mean_error.to_string(),
            r.max_error.to_string(),
            r.trials.to_string(),
            r.failures.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Path of the JSON sidecar written next to a CSV.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the summary CSV and a JSON sidecar holding the config.
pub fn emit_results(config: &ExperimentConfig, rows: &[SummaryRow], path: &Path) -> Result<()> {
    fs::write(path, csv_string(rows)?)?;
    let sidecar = serde_json::json!({ "config": config, "summary": rows });
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(sidecar_path(path), text + "\n")?;
    Ok(())
}
