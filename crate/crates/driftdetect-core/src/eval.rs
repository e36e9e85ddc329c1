//! Confusion-matrix metrics, multi-run aggregation, and seeded random-search
//! tuning of detector hyperparameters.
//!
//! Tuning samples configurations uniformly from a [`SearchSpace`], scores
//! each by the mean F1 over a bundle of labelled trajectories, and returns
//! the argmax together with the full trial log. Known-good defaults can be
//! injected as trial 0 so the search never returns anything worse than the
//! starting point. Trials are planned up front ([`plan_trials`]) so callers
//! may evaluate them in any order, or in parallel, and still reproduce the
//! serial result.

use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detector::{run, DetectorConfig, DetectorError};

/// Errors raised by scoring or tuning.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    /// Prediction and truth have different lengths.
    #[error("prediction has {predicted} labels but truth has {truth}")]
    LengthMismatch {
        /// Length of the predicted labels.
        predicted: usize,
        /// Length of the truth labels.
        truth: usize,
    },
    /// No labelled trajectories to evaluate.
    #[error("evaluation bundle is empty")]
    EmptyBundle,
    /// No reports to aggregate.
    #[error("no metric reports to aggregate")]
    EmptyReports,
    /// An integer range has its bounds out of order.
    #[error("{field} range is empty: lower bound {lo} exceeds upper bound {hi}")]
    EmptyRange {
        /// Name of the offending range.
        field: &'static str,
        /// Lower bound.
        lo: usize,
        /// Upper bound.
        hi: usize,
    },
    /// The window range contains no admissible (even, ≥ 4) length.
    #[error("window range [{lo}, {hi}] contains no even length of at least 4")]
    NoAdmissibleWindow {
        /// Lower bound.
        lo: usize,
        /// Upper bound.
        hi: usize,
    },
    /// Threshold range outside (0, 1) or out of order.
    #[error("threshold range [{lo}, {hi}] must satisfy 0 < lo <= hi < 1")]
    InvalidThresholdRange {
        /// Lower bound.
        lo: f64,
        /// Upper bound.
        hi: f64,
    },
    /// A trial budget of zero.
    #[error("trial budget must be at least 1")]
    ZeroTrials,
    /// A detector run failed while evaluating a trial.
    #[error("detector run failed: {0}")]
    Detector(#[from] DetectorError),
}

/// Confusion-matrix metrics of one prediction against its truth.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    /// Positives predicted on truth positives.
    pub true_positives: usize,
    /// Positives predicted on truth negatives.
    pub false_positives: usize,
    /// Negatives predicted on truth negatives.
    pub true_negatives: usize,
    /// Negatives predicted on truth positives.
    pub false_negatives: usize,
    /// `2TP / (2TP + FP + FN)`; 0 when the denominator vanishes.
    pub f1: f64,
    /// `FP / (FP + TN)`; 0 when the denominator vanishes.
    pub fpr: f64,
    /// `FN / (FN + TP)`; 0 when the denominator vanishes.
    pub fnr: f64,
}

/// Scores a predicted label series against ground truth. Any nonzero label
/// counts as a positive.
pub fn score(pred: &[u8], truth: &[u8]) -> Result<MetricReport, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch { predicted: pred.len(), truth: truth.len() });
    }
    let (mut tp, mut fp, mut tn, mut fan) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fan += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(MetricReport {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fan,
        f1: ratio(2 * tp, 2 * tp + fp + fan),
        fpr: ratio(fp, fp + tn),
        fnr: ratio(fan, fan + tp),
    })
}

/// Mean and sample standard deviation of each metric across runs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSummary {
    /// Number of aggregated runs.
    pub runs: usize,
    /// Mean F1 across runs.
    pub f1_mean: f64,
    /// Sample standard deviation of F1.
    pub f1_std: f64,
    /// Mean false positive rate.
    pub fpr_mean: f64,
    /// Sample standard deviation of the false positive rate.
    pub fpr_std: f64,
    /// Mean false negative rate.
    pub fnr_mean: f64,
    /// Sample standard deviation of the false negative rate.
    pub fnr_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    let mean = sum / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = 0.0;
    for &v in values {
        let d = v - mean;
        sq += d * d;
    }
    (mean, libm::sqrt(sq / (n - 1.0)))
}

/// Aggregates per-run reports into means and standard deviations.
pub fn summarize(reports: &[MetricReport]) -> Result<MetricSummary, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyReports);
    }
    let f1: Vec<f64> = reports.iter().map(|r| r.f1).collect();
    let fpr: Vec<f64> = reports.iter().map(|r| r.fpr).collect();
    let fnr: Vec<f64> = reports.iter().map(|r| r.fnr).collect();
    let (f1_mean, f1_std) = mean_std(&f1);
    let (fpr_mean, fpr_std) = mean_std(&fpr);
    let (fnr_mean, fnr_std) = mean_std(&fnr);
    Ok(MetricSummary { runs: reports.len(), f1_mean, f1_std, fpr_mean, fpr_std, fnr_mean, fnr_std })
}

/// Inclusive sampling ranges for the detector hyperparameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpace {
    /// Range of the look-back depth λ.
    pub lookback: (usize, usize),
    /// Range of the window length ℓ; only even values of at least 4 are
    /// drawn.
    pub window_len: (usize, usize),
    /// Range of the step δ.
    pub step: (usize, usize),
    /// Range of the consensus threshold, within (0, 1).
    pub threshold: (f64, f64),
    /// Number of sampled trials.
    pub trials: usize,
}

impl SearchSpace {
    /// Search space for long daily-cadence series.
    #[must_use]
    pub fn realistic() -> Self {
        SearchSpace {
            lookback: (1, 180),
            window_len: (4, 30),
            step: (1, 10),
            threshold: (0.05, 0.95),
            trials: 100,
        }
    }

    /// Search space for short synthetic series.
    #[must_use]
    pub fn synthetic() -> Self {
        SearchSpace {
            lookback: (1, 20),
            window_len: (4, 20),
            step: (1, 10),
            threshold: (0.05, 0.95),
            trials: 100,
        }
    }

    /// Checks that every range is non-empty and admissible.
    pub fn validate(&self) -> Result<(), EvalError> {
        for (field, (lo, hi)) in [
            ("lookback", self.lookback),
            ("window", self.window_len),
            ("step", self.step),
        ] {
            if lo > hi {
                return Err(EvalError::EmptyRange { field, lo, hi });
            }
        }
        if self.even_window_candidates().is_none() {
            return Err(EvalError::NoAdmissibleWindow {
                lo: self.window_len.0,
                hi: self.window_len.1,
            });
        }
        let (lo, hi) = self.threshold;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(EvalError::InvalidThresholdRange { lo, hi });
        }
        if self.trials == 0 {
            return Err(EvalError::ZeroTrials);
        }
        Ok(())
    }

    /// Lowest admissible window and the count of even candidates, if any.
    fn even_window_candidates(&self) -> Option<(usize, usize)> {
        let lo = self.window_len.0.max(4);
        let lo = lo + lo % 2;
        let hi = self.window_len.1 - self.window_len.1 % 2;
        if lo > hi {
            None
        } else {
            Some((lo, (hi - lo) / 2 + 1))
        }
    }
}

/// One planned trial: the index it logs under and the configuration to run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedTrial {
    /// Trial index in the log.
    pub trial: usize,
    /// Configuration to evaluate.
    pub config: DetectorConfig,
}

/// One evaluated trial.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    /// Trial index.
    pub trial: usize,
    /// Look-back depth λ.
    pub lookback: usize,
    /// Window length ℓ.
    pub window_len: usize,
    /// Step δ.
    pub step: usize,
    /// Consensus threshold.
    pub threshold: f64,
    /// Mean F1 over the bundle.
    pub mean_f1: f64,
}

/// Outcome of a tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    /// The best configuration found.
    pub best: DetectorConfig,
    /// Index of the best trial in the log.
    pub best_trial: usize,
    /// Objective value of the best trial.
    pub best_mean_f1: f64,
    /// All trials in index order.
    pub log: Vec<TrialRecord>,
}

/// Plans the full trial list for a tuning run: the defaults (if given) as
/// trial 0, followed by `space.trials` uniformly sampled configurations.
///
/// Sampling is deterministic under `seed`. Non-sampled configuration parts
/// (trackers, tests, component rule) are taken from `defaults` when given,
/// otherwise from [`DetectorConfig::default`].
pub fn plan_trials(
    space: &SearchSpace,
    defaults: Option<&DetectorConfig>,
    seed: u64,
) -> Result<Vec<PlannedTrial>, EvalError> {
    space.validate()?;
    let base = defaults.cloned().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plans = Vec::with_capacity(space.trials + 1);
    if let Some(d) = defaults {
        plans.push(PlannedTrial { trial: 0, config: d.clone() });
    }
    let (win_lo, win_count) = space.even_window_candidates().expect("validated");
    while plans.len() < space.trials + usize::from(defaults.is_some()) {
        let mut config = base.clone();
        config.lookback = rng.random_range(space.lookback.0..=space.lookback.1);
        config.window_len = win_lo + 2 * rng.random_range(0..win_count);
        config.step = rng.random_range(space.step.0..=space.step.1);
        config.threshold = rng.random_range(space.threshold.0..=space.threshold.1);
        plans.push(PlannedTrial { trial: plans.len(), config });
    }
    Ok(plans)
}

/// Mean F1 of one configuration across a bundle of labelled trajectories.
pub fn evaluate_config(
    bundle: &[(Vec<Vec<f64>>, Vec<u8>)],
    config: &DetectorConfig,
) -> Result<f64, EvalError> {
    if bundle.is_empty() {
        return Err(EvalError::EmptyBundle);
    }
    let mut total = 0.0;
    for (rows, truth) in bundle {
        let report = run(rows, config)?;
        total += score(&report.labels.predicted, truth)?.f1;
    }
    Ok(total / bundle.len() as f64)
}

/// Random-search tuning: evaluates every planned trial and returns the
/// argmax of the mean F1 (ties resolved toward the lowest trial index),
/// together with the full log.
pub fn tune(
    bundle: &[(Vec<Vec<f64>>, Vec<u8>)],
    space: &SearchSpace,
    defaults: Option<&DetectorConfig>,
    seed: u64,
) -> Result<TuneOutcome, EvalError> {
    if bundle.is_empty() {
        return Err(EvalError::EmptyBundle);
    }
    let plans = plan_trials(space, defaults, seed)?;
    let mut log = Vec::with_capacity(plans.len());
    let mut best: Option<(usize, f64)> = None;
    for plan in &plans {
        let mean_f1 = evaluate_config(bundle, &plan.config)?;
        log.push(TrialRecord {
            trial: plan.trial,
            lookback: plan.config.lookback,
            window_len: plan.config.window_len,
            step: plan.config.step,
            threshold: plan.config.threshold,
            mean_f1,
        });
        if best.is_none_or(|(_, f)| mean_f1 > f) {
            best = Some((plan.trial, mean_f1));
        }
    }
    let (best_trial, best_mean_f1) = best.expect("at least one trial planned");
    Ok(TuneOutcome {
        best: plans[best_trial].config.clone(),
        best_trial,
        best_mean_f1,
        log,
    })
}
