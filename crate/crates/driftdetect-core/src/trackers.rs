//! Hyperbox trackers: scalar and per-feature summaries of sliding centroid
//! windows.
//!
//! Each tracker condenses the axis-aligned bounding box (hyperbox) of a
//! window of trajectory rows into a small reading. Two trackers describe the
//! current window alone (its box volume and box diagonal); two describe how
//! the box *moved* between the previous and current window (per-feature
//! bound shifts, and their two Euclidean norms). Streams of readings are
//! later compared across two larger windows by the divergence tests.

use alloc::vec::Vec;

/// Per-feature `[min, max]` bounds of a window of rows.
///
/// Returns one pair per feature; an empty window yields an empty list.
#[must_use]
pub fn feature_bounds(window: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let Some(first) = window.first() else {
        return Vec::new();
    };
    let mut bounds: Vec<[f64; 2]> = first.iter().map(|&v| [v, v]).collect();
    for row in &window[1..] {
        for (b, &v) in bounds.iter_mut().zip(row.iter()) {
            b[0] = b[0].min(v);
            b[1] = b[1].max(v);
        }
    }
    bounds
}

/// Volume of the window's bounding box: the product of per-feature spans.
///
/// Collapses to zero as soon as any single feature is constant over the
/// window, which makes it the most change-sensitive of the scalar trackers.
#[must_use]
pub fn volume(window: &[Vec<f64>]) -> f64 {
    let bounds = feature_bounds(window);
    if bounds.is_empty() {
        return 0.0;
    }
    let mut v = 1.0;
    for b in &bounds {
        v *= b[1] - b[0];
    }
    v
}

/// Length of the bounding box diagonal: the Euclidean norm of the
/// per-feature spans. Unlike [`volume`] it degrades gracefully when some
/// features barely vary.
#[must_use]
pub fn diagonal(window: &[Vec<f64>]) -> f64 {
    let mut sq = 0.0;
    for b in &feature_bounds(window) {
        let span = b[1] - b[0];
        sq += span * span;
    }
    libm::sqrt(sq)
}

/// Per-feature shift of the bounding box between two windows.
///
/// For each feature `h` the reading holds
/// `[max(prev_h) - max(curr_h), min(prev_h) - min(curr_h)]`: how far the
/// upper and lower bounds travelled. Windows must share a feature
/// dimension; extra features on either side are ignored.
#[must_use]
pub fn bound_shift(prev: &[Vec<f64>], curr: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let pb = feature_bounds(prev);
    let cb = feature_bounds(curr);
    pb.iter()
        .zip(cb.iter())
        .map(|(p, c)| [p[1] - c[1], p[0] - c[0]])
        .collect()
}

/// Euclidean norms of the two bound-shift streams: `[‖max shifts‖, ‖min
/// shifts‖]`. A compact two-component view of [`bound_shift`].
#[must_use]
pub fn bound_shift_norm(prev: &[Vec<f64>], curr: &[Vec<f64>]) -> [f64; 2] {
    let (mut max_sq, mut min_sq) = (0.0, 0.0);
    for d in &bound_shift(prev, curr) {
        max_sq += d[0] * d[0];
        min_sq += d[1] * d[1];
    }
    [libm::sqrt(max_sq), libm::sqrt(min_sq)]
}

/// The tracker ensemble members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Tracker {
    /// Bounding-box volume of the current window ([`volume`]).
    Volume,
    /// Bounding-box diagonal of the current window ([`diagonal`]).
    Diagonal,
    /// Per-feature bound travel between windows ([`bound_shift`]).
    BoundShift,
    /// Norms of the bound travel ([`bound_shift_norm`]).
    BoundShiftNorm,
}

/// The default four-member ensemble, mixing single-window shape trackers
/// with between-window movement trackers.
pub const DEFAULT_TRACKERS: [Tracker; 4] =
    [Tracker::Volume, Tracker::Diagonal, Tracker::BoundShift, Tracker::BoundShiftNorm];

/// One tracker observation of a window step.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackReading {
    /// Single value ([`Tracker::Volume`], [`Tracker::Diagonal`]).
    Scalar(f64),
    /// Two values ([`Tracker::BoundShiftNorm`]).
    Pair([f64; 2]),
    /// Two values per feature ([`Tracker::BoundShift`]).
    PerFeature(Vec<[f64; 2]>),
}

impl TrackReading {
    /// Number of scalar components in this reading.
    #[must_use]
    pub fn component_count(&self) -> usize {
        match self {
            TrackReading::Scalar(_) => 1,
            TrackReading::Pair(_) => 2,
            TrackReading::PerFeature(v) => 2 * v.len(),
        }
    }

    /// The `c`-th scalar component. Per-feature readings enumerate max
    /// shifts first (one per feature), then min shifts.
    #[must_use]
    pub fn component(&self, c: usize) -> f64 {
        match self {
            TrackReading::Scalar(v) => *v,
            TrackReading::Pair(p) => p[c],
            TrackReading::PerFeature(v) => {
                let m = v.len();
                if c < m {
                    v[c][0]
                } else {
                    v[c - m][1]
                }
            }
        }
    }
}

impl Tracker {
    /// Observes one window step.
    ///
    /// `prev` is `None` at the start of a sliding pass; movement trackers
    /// then compare the window against itself and report zero shift, while
    /// shape trackers ignore `prev` entirely.
    #[must_use]
    pub fn track(&self, prev: Option<&[Vec<f64>]>, curr: &[Vec<f64>]) -> TrackReading {
        let prev = prev.unwrap_or(curr);
        match self {
            Tracker::Volume => TrackReading::Scalar(volume(curr)),
            Tracker::Diagonal => TrackReading::Scalar(diagonal(curr)),
            Tracker::BoundShift => TrackReading::PerFeature(bound_shift(prev, curr)),
            Tracker::BoundShiftNorm => TrackReading::Pair(bound_shift_norm(prev, curr)),
        }
    }
}
