//! Divergence tests over tracker reading streams, and consensus voting.
//!
//! Two boolean tests compare a *reference* series of readings against a
//! *detection* series: one asks whether the reference's total variation
//! still dominates, the other whether the detection mean stays inside a
//! one-standard-deviation band around the reference mean. Each test that
//! fails contributes a drift vote; votes from every test x tracker pair are
//! averaged and compared against a consensus threshold.

use alloc::vec::Vec;

use crate::trackers::{TrackReading, Tracker};

/// Errors raised while comparing reading series.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DivergenceError {
    /// Reference and detection series have different lengths.
    #[error("reference series has {reference} readings but detection has {detection}")]
    LengthMismatch {
        /// Reference series length.
        reference: usize,
        /// Detection series length.
        detection: usize,
    },
    /// A series contains no readings.
    #[error("series for tracker index {0} is empty")]
    EmptySeries(usize),
    /// Reference and detection disagree on which tracker produced a series.
    #[error("series {index} tracks different quantities in reference and detection")]
    TrackerMismatch {
        /// Position of the offending series pair.
        index: usize,
    },
    /// Readings within one series (or across the window pair) change shape.
    #[error("series {index} mixes readings of different component counts")]
    InhomogeneousSeries {
        /// Position of the offending series.
        index: usize,
    },
}

/// Sum of absolute first differences of a series.
#[must_use]
pub fn total_variation(x: &[f64]) -> f64 {
    let mut tv = 0.0;
    for w in x.windows(2) {
        tv += libm::fabs(w[1] - w[0]);
    }
    tv
}

/// Arithmetic mean (caller guarantees non-empty input).
fn mean(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in x {
        s += v;
    }
    s / x.len() as f64
}

/// Population (1/N) standard deviation around a precomputed mean.
fn population_std(x: &[f64], mu: f64) -> f64 {
    let mut s = 0.0;
    for &v in x {
        let d = v - mu;
        s += d * d;
    }
    libm::sqrt(s / x.len() as f64)
}

/// Variation-dominance test: true iff the reference series varies at least
/// as much as the detection series (`TV(x) >= TV(y)`).
///
/// A detection window that oscillates more than its reference is read as
/// behavioural change, so `false` contributes a drift vote.
pub fn variation_dominance(x: &[f64], y: &[f64]) -> Result<bool, DivergenceError> {
    check_pair(x, y)?;
    Ok(total_variation(x) >= total_variation(y))
}

/// Mean-band test: true iff the detection mean lies strictly inside one
/// population standard deviation around the reference mean
/// (`mean(x) - std(x) < mean(y) < mean(x) + std(x)`).
///
/// A zero-variance reference makes the strict band empty, so the test
/// reports `false` (a drift vote) for any detection series; this is logged
/// because constant references otherwise fire persistently.
pub fn mean_within_band(x: &[f64], y: &[f64]) -> Result<bool, DivergenceError> {
    check_pair(x, y)?;
    let mx = mean(x);
    let sx = population_std(x, mx);
    if sx == 0.0 {
        log::debug!("zero-variance reference in mean-band test; strict band is empty, voting drift");
        return Ok(false);
    }
    let my = mean(y);
    Ok(mx - sx < my && my < mx + sx)
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), DivergenceError> {
    if x.is_empty() || y.is_empty() {
        return Err(DivergenceError::EmptySeries(0));
    }
    if x.len() != y.len() {
        return Err(DivergenceError::LengthMismatch { reference: x.len(), detection: y.len() });
    }
    Ok(())
}

/// The divergence test ensemble members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DivergenceTest {
    /// [`variation_dominance`].
    VariationDominance,
    /// [`mean_within_band`].
    MeanWithinBand,
}

/// The default two-test ensemble.
pub const DEFAULT_TESTS: [DivergenceTest; 2] =
    [DivergenceTest::VariationDominance, DivergenceTest::MeanWithinBand];

impl DivergenceTest {
    /// Runs this test on one scalar component pair.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<bool, DivergenceError> {
        match self {
            DivergenceTest::VariationDominance => variation_dominance(x, y),
            DivergenceTest::MeanWithinBand => mean_within_band(x, y),
        }
    }
}

/// How a test verdict is aggregated over the components of a multi-valued
/// tracker reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ComponentRule {
    /// The test succeeds if it holds in at least one component; only a test
    /// failing in every component casts a drift vote. The permissive
    /// default.
    #[default]
    AnySatisfied,
    /// The test succeeds only if it holds in every component; a single
    /// failing component casts a drift vote.
    AllSatisfied,
}

/// An ordered stream of readings from one tracker over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadingSeries {
    /// The tracker that produced the readings.
    pub tracker: Tracker,
    /// Readings in window order; homogeneous in shape.
    pub readings: Vec<TrackReading>,
}

impl ReadingSeries {
    /// Creates an empty series for a tracker.
    #[must_use]
    pub fn new(tracker: Tracker) -> Self {
        Self { tracker, readings: Vec::new() }
    }

    /// Appends a reading.
    pub fn push(&mut self, reading: TrackReading) {
        self.readings.push(reading);
    }

    /// Clears the readings, keeping the tracker.
    pub fn clear(&mut self) {
        self.readings.clear();
    }

    /// Splits the series into per-component scalar vectors.
    ///
    /// Scalar readings yield one component; pair readings two; per-feature
    /// readings two per feature. Returns `None` if readings disagree on
    /// their component count.
    #[must_use]
    pub fn components(&self) -> Option<Vec<Vec<f64>>> {
        let count = self.readings.first().map_or(0, TrackReading::component_count);
        if self.readings.iter().any(|r| r.component_count() != count) {
            return None;
        }
        let mut out = Vec::with_capacity(count);
        for c in 0..count {
            out.push(self.readings.iter().map(|r| r.component(c)).collect());
        }
        Some(out)
    }
}

/// Binary drift-vote matrix: one row per divergence test, one column per
/// tracker. Entry 1 means "this test, on this tracker's readings, saw
/// change".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionMatrix {
    /// `rows[test][tracker]`, entries in {0, 1}.
    pub rows: Vec<Vec<u8>>,
}

impl DecisionMatrix {
    /// Fraction of entries set; an empty matrix has mean 0.
    #[must_use]
    pub fn mean(&self) -> f64 {
        let total: usize = self.rows.iter().map(Vec::len).sum();
        if total == 0 {
            return 0.0;
        }
        let set: u64 = self.rows.iter().flatten().map(|&b| u64::from(b)).sum();
        set as f64 / total as f64
    }
}

/// Runs every divergence test against every tracker's reference/detection
/// series pair and collects the drift votes.
///
/// Reference and detection must list the same trackers in the same order,
/// with equal-length, shape-homogeneous reading series. Multi-component
/// readings are folded with `rule`.
pub fn apply_tests(
    reference: &[ReadingSeries],
    detection: &[ReadingSeries],
    tests: &[DivergenceTest],
    rule: ComponentRule,
) -> Result<DecisionMatrix, DivergenceError> {
    if reference.len() != detection.len() {
        return Err(DivergenceError::LengthMismatch {
            reference: reference.len(),
            detection: detection.len(),
        });
    }
    // Decompose every series once, up front.
    let mut columns = Vec::with_capacity(reference.len());
    for (j, (r, d)) in reference.iter().zip(detection.iter()).enumerate() {
        if r.tracker != d.tracker {
            return Err(DivergenceError::TrackerMismatch { index: j });
        }
        if r.readings.is_empty() || d.readings.is_empty() {
            return Err(DivergenceError::EmptySeries(j));
        }
        if r.readings.len() != d.readings.len() {
            return Err(DivergenceError::LengthMismatch {
                reference: r.readings.len(),
                detection: d.readings.len(),
            });
        }
        let rc = r.components().ok_or(DivergenceError::InhomogeneousSeries { index: j })?;
        let dc = d.components().ok_or(DivergenceError::InhomogeneousSeries { index: j })?;
        if rc.len() != dc.len() {
            return Err(DivergenceError::InhomogeneousSeries { index: j });
        }
        columns.push((rc, dc));
    }

    let mut rows = Vec::with_capacity(tests.len());
    for test in tests {
        let mut row = Vec::with_capacity(columns.len());
        for (rc, dc) in &columns {
            let mut satisfied_any = false;
            let mut satisfied_all = true;
            for (x, y) in rc.iter().zip(dc.iter()) {
                if test.evaluate(x, y)? {
                    satisfied_any = true;
                } else {
                    satisfied_all = false;
                }
            }
            let satisfied = match rule {
                ComponentRule::AnySatisfied => satisfied_any,
                ComponentRule::AllSatisfied => satisfied_all,
            };
            row.push(u8::from(!satisfied));
        }
        rows.push(row);
    }
    Ok(DecisionMatrix { rows })
}

/// Average-vote consensus: drift iff the mean vote strictly exceeds the
/// threshold.
#[must_use]
pub fn consensus(matrix: &DecisionMatrix, threshold: f64) -> bool {
    matrix.mean() > threshold
}
