//! The drift detection main loop: two sliding reading windows over a
//! trajectory, consensus voting, label emission, and recurrence checks
//! against a queue of past behaviours.
//!
//! The detector walks the trajectory with a reference window followed by a
//! detection window, each holding `window_len / 2` tracker readings of
//! look-back slices. When the divergence-test votes pass consensus, the
//! detection span is labelled as drift and becomes the next reference;
//! otherwise the pair advances by a small step. An optional bounded queue
//! of past reference rows lets adopted drifts be flagged as returns to
//! previously seen behaviour.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::ks_two_sample;
use crate::divergence::{
    apply_tests, consensus, ComponentRule, DivergenceError, DivergenceTest, ReadingSeries,
    DEFAULT_TESTS,
};
use crate::trackers::{Tracker, DEFAULT_TRACKERS};

/// Errors raised by detector configuration or execution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectorError {
    /// The trajectory has no rows.
    #[error("trajectory is empty")]
    EmptyTrajectory,
    /// The trajectory rows have no features.
    #[error("trajectory rows have no features")]
    ZeroFeatureDim,
    /// A row's dimension differs from the first row's.
    #[error("trajectory row {index} has dimension {found}, expected {expected}")]
    InconsistentRows {
        /// Index of the offending row.
        index: usize,
        /// Dimension established by the first row.
        expected: usize,
        /// Dimension of the offending row.
        found: usize,
    },
    /// The window budget must be at least 4.
    #[error("window length must be at least 4, got {0}")]
    WindowTooSmall(usize),
    /// The window budget must be even so it splits into two equal halves.
    #[error("window length must be even, got {0}")]
    OddWindow(usize),
    /// The advance step must be positive.
    #[error("step must be at least 1")]
    ZeroStep,
    /// The consensus threshold must lie strictly between 0 and 1.
    #[error("consensus threshold must be in (0, 1), got {0}")]
    InvalidThreshold(f64),
    /// The tracker ensemble is empty.
    #[error("at least one tracker is required")]
    NoTrackers,
    /// The divergence test ensemble is empty.
    #[error("at least one divergence test is required")]
    NoTests,
    /// Predicted and truth label vectors differ in length.
    #[error("truth has {truth} labels but predictions have {predicted}")]
    LabelLengthMismatch {
        /// Number of predicted labels.
        predicted: usize,
        /// Number of truth labels.
        truth: usize,
    },
    /// A divergence-test failure bubbled up from the ensemble.
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

/// Detector parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    /// Look-back λ: each tracked slice covers up to `lookback + 1` rows.
    pub lookback: usize,
    /// Window budget ℓ: reference and detection each hold `window_len / 2`
    /// readings. Even, at least 4.
    pub window_len: usize,
    /// Advance step δ applied when no drift is called.
    pub step: usize,
    /// Consensus threshold σ; the mean vote must strictly exceed it.
    pub threshold: f64,
    /// Tracker ensemble (columns of the vote matrix).
    pub trackers: Vec<Tracker>,
    /// Divergence test ensemble (rows of the vote matrix).
    pub tests: Vec<DivergenceTest>,
    /// Vote aggregation over multi-component readings.
    pub component_rule: ComponentRule,
}

impl DetectorConfig {
    /// Defaults tuned for daily real-world behaviour streams.
    #[must_use]
    pub fn realistic() -> Self {
        Self {
            lookback: 25,
            window_len: 30,
            step: 10,
            threshold: 0.2666,
            trackers: DEFAULT_TRACKERS.to_vec(),
            tests: DEFAULT_TESTS.to_vec(),
            component_rule: ComponentRule::AnySatisfied,
        }
    }

    /// Defaults tuned for short synthetic streams.
    #[must_use]
    pub fn synthetic() -> Self {
        Self {
            lookback: 4,
            window_len: 16,
            step: 4,
            threshold: 0.3422,
            trackers: DEFAULT_TRACKERS.to_vec(),
            tests: DEFAULT_TESTS.to_vec(),
            component_rule: ComponentRule::AnySatisfied,
        }
    }

    /// Checks the hard parameter invariants, and logs (without failing)
    /// when soft guidance against the trajectory length is violated: a
    /// window budget beyond `n / 2`, a look-back at or beyond `n`, or a
    /// step larger than half the window (which skips intervals).
    pub fn validate(&self, n: usize) -> Result<(), DetectorError> {
        if self.window_len < 4 {
            return Err(DetectorError::WindowTooSmall(self.window_len));
        }
        if !self.window_len.is_multiple_of(2) {
            return Err(DetectorError::OddWindow(self.window_len));
        }
        if self.step == 0 {
            return Err(DetectorError::ZeroStep);
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(DetectorError::InvalidThreshold(self.threshold));
        }
        if self.trackers.is_empty() {
            return Err(DetectorError::NoTrackers);
        }
        if self.tests.is_empty() {
            return Err(DetectorError::NoTests);
        }
        if self.window_len > n / 2 {
            log::warn!(
                "window length {} exceeds half the trajectory length {n}; the tail-shrink path will engage immediately",
                self.window_len
            );
        }
        if self.lookback >= n.max(1) {
            log::warn!("look-back {} is at least the trajectory length {n}", self.lookback);
        }
        if self.step > self.window_len / 2 {
            log::warn!(
                "step {} exceeds half the window length {}; some intervals will never be scanned",
                self.step,
                self.window_len
            );
        }
        Ok(())
    }
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self::realistic()
    }
}

/// Per-interval drift labels, optionally paired with ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriftLabels {
    /// Predicted drift flag per interval.
    pub predicted: Vec<u8>,
    /// Ground-truth drift flag per interval, when known.
    pub truth: Option<Vec<u8>>,
}

impl DriftLabels {
    /// Wraps a prediction vector without ground truth.
    #[must_use]
    pub fn new(predicted: Vec<u8>) -> Self {
        Self { predicted, truth: None }
    }

    /// Attaches ground truth of matching length.
    pub fn with_truth(mut self, truth: Vec<u8>) -> Result<Self, DetectorError> {
        if truth.len() != self.predicted.len() {
            return Err(DetectorError::LabelLengthMismatch {
                predicted: self.predicted.len(),
                truth: truth.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }
}

/// One adopted drift decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriftEvent {
    /// First flagged interval (the detection window start).
    pub start: usize,
    /// One past the last flagged interval.
    pub end: usize,
    /// True when the flagged span matched a queued past behaviour.
    pub recurrent: bool,
}

/// One outer-loop iteration, for audit logs and reports.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationTrace {
    /// Reference window start interval.
    pub start: usize,
    /// Window budget in force (shrinks near the tail).
    pub window_len: usize,
    /// Mean of the decision matrix.
    pub vote_mean: f64,
    /// Whether consensus called drift.
    pub drift: bool,
}

/// Full detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// Per-interval labels (truth unset; attach via [`DriftLabels::with_truth`]).
    pub labels: DriftLabels,
    /// Adopted drift spans in order.
    pub drifts: Vec<DriftEvent>,
    /// One trace entry per outer-loop iteration.
    pub iterations: Vec<IterationTrace>,
}

/// Bounded FIFO of past reference-window row snapshots.
///
/// Each snapshot is the block of trajectory rows a departed normality
/// occupied. A candidate block *matches* a snapshot when no feature column
/// is rejected by the two-sample Kolmogorov-Smirnov test at the queue's
/// significance level — i.e. the block is statistically indistinguishable
/// from that past behaviour.
#[derive(Debug, Clone)]
pub struct BehaviourQueue {
    capacity: usize,
    alpha: f64,
    snapshots: VecDeque<Vec<Vec<f64>>>,
}

impl BehaviourQueue {
    /// Significance level for snapshot comparison.
    pub const DEFAULT_ALPHA: f64 = 0.01;

    /// Creates a queue holding at most `capacity` snapshots; capacity 0
    /// disables the feature entirely.
    #[must_use]
    pub fn new(capacity: usize) -> Self {
        Self { capacity, alpha: Self::DEFAULT_ALPHA, snapshots: VecDeque::new() }
    }

    /// Number of stored snapshots.
    #[must_use]
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    /// True when no snapshots are stored.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Maximum number of snapshots retained.
    #[must_use]
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores a row block, evicting the oldest snapshot when full.
    pub fn push(&mut self, rows: &[Vec<f64>]) {
        if self.capacity == 0 || rows.is_empty() {
            return;
        }
        if self.snapshots.len() == self.capacity {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(rows.to_vec());
    }

    /// True when `rows` matches at least one stored snapshot (no feature
    /// column rejected at the queue's significance level).
    #[must_use]
    pub fn matches(&self, rows: &[Vec<f64>]) -> bool {
        if rows.is_empty() {
            return false;
        }
        let dim = rows[0].len();
        self.snapshots.iter().any(|snap| {
            (0..dim).all(|h| {
                let a: Vec<f64> = snap.iter().map(|r| r[h]).collect();
                let b: Vec<f64> = rows.iter().map(|r| r[h]).collect();
                let ks = ks_two_sample(&a, &b)
                    .expect("snapshot and candidate columns are non-empty");
                ks.p_value >= self.alpha
            })
        })
    }
}

/// Fills one reading window: `count` tracked look-back slices starting at
/// interval `start`, with the previous-slice sentinel reset at the start.
fn fill_window(rows: &[Vec<f64>], start: usize, count: usize, cfg: &DetectorConfig) -> Vec<ReadingSeries> {
    let mut series: Vec<ReadingSeries> =
        cfg.trackers.iter().map(|&t| ReadingSeries::new(t)).collect();
    let mut prev: Option<&[Vec<f64>]> = None;
    for j in start..start + count {
        let lo = j.saturating_sub(cfg.lookback);
        let curr = &rows[lo..=j];
        for s in &mut series {
            let reading = s.tracker.track(prev, curr);
            s.push(reading);
        }
        prev = Some(curr);
    }
    series
}

fn validate_rows(rows: &[Vec<f64>]) -> Result<(), DetectorError> {
    let Some(first) = rows.first() else {
        return Err(DetectorError::EmptyTrajectory);
    };
    if first.is_empty() {
        return Err(DetectorError::ZeroFeatureDim);
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != first.len() {
            return Err(DetectorError::InconsistentRows {
                index: i,
                expected: first.len(),
                found: r.len(),
            });
        }
    }
    Ok(())
}

fn engine(
    rows: &[Vec<f64>],
    cfg: &DetectorConfig,
    queue_capacity: usize,
) -> Result<DetectionReport, DetectorError> {
    validate_rows(rows)?;
    let n = rows.len();
    cfg.validate(n)?;

    let mut predicted = vec![0u8; n];
    let mut drifts = Vec::new();
    let mut iterations = Vec::new();
    let mut queue = BehaviourQueue::new(queue_capacity);
    let mut ell = cfg.window_len;
    let mut t = 0usize;

    while t < n {
        if n - t < ell {
            // Tail shrink: halve the remaining span and keep it even so the
            // two half-windows stay equal; stop cleanly below the minimum.
            ell = (n - t) / 2;
            ell -= ell % 2;
            if ell < 4 {
                log::debug!(
                    "leaving {} trailing interval(s) unlabelled; window cannot shrink below 4",
                    n - t
                );
                break;
            }
        }
        let half = ell / 2;
        let reference = fill_window(rows, t, half, cfg);
        let detection = fill_window(rows, t + half, half, cfg);
        let matrix = apply_tests(&reference, &detection, &cfg.tests, cfg.component_rule)?;
        let drift = consensus(&matrix, cfg.threshold);
        iterations.push(IterationTrace { start: t, window_len: ell, vote_mean: matrix.mean(), drift });
        if drift {
            let span_start = t + half;
            let span_end = t + ell;
            for flag in &mut predicted[span_start..span_end] {
                *flag = 1;
            }
            // Recurrence: compare the newly adopted behaviour against past
            // normalities, then retire the departing reference into the
            // queue. The departing reference is deliberately tested before
            // it is queued, so a drift is never compared to the behaviour
            // it just left.
            let recurrent = queue_capacity > 0 && queue.matches(&rows[span_start..span_end]);
            queue.push(&rows[t..t + half]);
            drifts.push(DriftEvent { start: span_start, end: span_end, recurrent });
            // The detection window becomes the next reference.
            t += half;
        } else {
            t += cfg.step;
        }
    }

    Ok(DetectionReport { labels: DriftLabels::new(predicted), drifts, iterations })
}

/// Runs the detector over trajectory rows and labels each interval.
///
/// The output prediction vector always has one entry per input row; a
/// short tail that cannot hold a minimum window is left labelled 0.
pub fn run(rows: &[Vec<f64>], cfg: &DetectorConfig) -> Result<DetectionReport, DetectorError> {
    engine(rows, cfg, 0)
}

/// Runs the detector with a bounded behaviour queue so adopted drifts can
/// be flagged as recurrences of previously seen behaviour.
///
/// `queue_capacity = 0` behaves exactly like [`run`].
pub fn run_with_recurrence(
    rows: &[Vec<f64>],
    cfg: &DetectorConfig,
    queue_capacity: usize,
) -> Result<DetectionReport, DetectorError> {
    engine(rows, cfg, queue_capacity)
}
