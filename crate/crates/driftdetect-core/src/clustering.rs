//! Incremental per-interval micro-clustering, density classification with
//! forgetting, connected-cluster grouping, densest-cluster selection, and
//! trajectory assembly.
//!
//! Each interval's feature vectors are absorbed into axis-aligned hyperbox
//! micro-clusters. Micro-clusters are classified dense / semi-dense /
//! low-dense by their (forgetting-discounted) density relative to the
//! population median and mean, grouped into connected components by
//! hyperbox overlap, and the densest resulting group summarises the
//! interval as one trajectory row: the mean of its member centroids.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::events::DailyFeatureRow;

/// Smallest admissible hyperbox span and scaling range, preventing
/// zero-volume boxes and division by zero on constant features.
pub const MIN_SPAN: f64 = 1e-9;

/// Errors raised by clustering and trajectory assembly.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    /// A vector's dimension does not match the micro-cluster's.
    #[error("feature vector has dimension {found}, expected {expected}")]
    DimensionMismatch {
        /// Dimension required by the existing state.
        expected: usize,
        /// Dimension of the offending vector.
        found: usize,
    },
    /// A feature row's dimension differs from the first row's.
    #[error("interval {interval} has feature dimension {found}, expected {expected}")]
    RowDimensionMismatch {
        /// Interval index of the offending row.
        interval: usize,
        /// Dimension established by the first non-empty row.
        expected: usize,
        /// Dimension of the offending row.
        found: usize,
    },
    /// The hyperbox span fraction must lie in (0, 1].
    #[error("hyperbox span fraction must be in (0, 1], got {0}")]
    InvalidSpanFraction(f64),
    /// The forgetting rate must be non-negative.
    #[error("forgetting rate must be non-negative, got {0}")]
    InvalidForgettingRate(f64),
    /// The warm-up must cover at least one interval.
    #[error("warm-up must cover at least one interval")]
    EmptyWarmup,
    /// Every interval was empty; there is nothing to cluster.
    #[error("all intervals are empty; nothing to cluster")]
    NoObservations,
}

/// Knobs for per-interval clustering and trajectory assembly.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterConfig {
    /// Per-dimension hyperbox span as a fraction of the scaled feature
    /// range (which is 2 after min-max scaling to [-1, 1]).
    pub span_fraction: f64,
    /// Maximum number of non-overlapping dimensions still counted as a
    /// hyperbox connection.
    pub theta: usize,
    /// Exponential forgetting rate applied to densities by
    /// [`classify_density`].
    pub forgetting_rate: f64,
    /// Number of leading intervals whose non-empty rows fix the feature
    /// scaling.
    pub warmup_intervals: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { span_fraction: 0.06, theta: 0, forgetting_rate: 0.02, warmup_intervals: 15 }
    }
}

impl ClusterConfig {
    /// Checks parameter ranges.
    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.span_fraction > 0.0 && self.span_fraction <= 1.0) {
            return Err(ClusterError::InvalidSpanFraction(self.span_fraction));
        }
        if self.forgetting_rate.is_nan() || self.forgetting_rate < 0.0 {
            return Err(ClusterError::InvalidForgettingRate(self.forgetting_rate));
        }
        if self.warmup_intervals == 0 {
            return Err(ClusterError::EmptyWarmup);
        }
        Ok(())
    }
}

/// Per-feature min-max scaling to [-1, 1], fitted on warm-up rows.
///
/// Values observed outside the fitted range scale beyond [-1, 1] rather
/// than clamping: departures from the warm-up regime must stay visible.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    /// Per-feature minimum over the fitted rows.
    pub mins: Vec<f64>,
    /// Per-feature maximum over the fitted rows.
    pub maxs: Vec<f64>,
}

impl FeatureScaler {
    /// Fits the scaler over rows; `None` when no rows are given.
    pub fn fit<'a, I>(rows: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut it = rows.into_iter();
        let first = it.next()?;
        let mut mins = first.to_vec();
        let mut maxs = first.to_vec();
        for row in it {
            for (h, &v) in row.iter().enumerate() {
                mins[h] = mins[h].min(v);
                maxs[h] = maxs[h].max(v);
            }
        }
        Some(Self { mins, maxs })
    }

    /// Scales one vector; constant features use a floor range of
    /// [`MIN_SPAN`] so the mapping stays finite.
    #[must_use]
    pub fn apply(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(h, &v)| {
                let range = (self.maxs[h] - self.mins[h]).max(MIN_SPAN);
                -1.0 + 2.0 * (v - self.mins[h]) / range
            })
            .collect()
    }
}

/// A hyperbox micro-cluster absorbing nearby feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroCluster {
    /// Number of absorbed vectors.
    pub count: usize,
    /// The absorbed vectors, in assignment order.
    pub feature_rows: Vec<Vec<f64>>,
    /// Creation time.
    pub created_at: f64,
    /// Time of the most recent assignment.
    pub last_assign: f64,
    /// Density: `count` divided by the hyperbox volume.
    pub density: f64,
    /// Per-feature mean of the absorbed vectors; the hyperbox centre.
    pub centroid: Vec<f64>,
    /// Fixed per-feature hyperbox spans.
    pub spans: Vec<f64>,
}

fn hyperbox_volume(spans: &[f64]) -> f64 {
    let mut v = 1.0;
    for &u in spans {
        v *= u.max(MIN_SPAN);
    }
    v
}

fn column_means(rows: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut means = vec![0.0; dim];
    for row in rows {
        for (h, &v) in row.iter().enumerate() {
            means[h] += v;
        }
    }
    let n = rows.len() as f64;
    for m in &mut means {
        *m /= n;
    }
    means
}

impl MicroCluster {
    /// Creates a single-point micro-cluster centred at `features`.
    #[must_use]
    pub fn new(features: Vec<f64>, spans: Vec<f64>, now: f64) -> Self {
        let density = 1.0 / hyperbox_volume(&spans);
        Self {
            count: 1,
            centroid: features.clone(),
            feature_rows: vec![features],
            created_at: now,
            last_assign: now,
            density,
            spans,
        }
    }

    /// Exponential forgetting factor at time `now`; 1 exactly when `now`
    /// equals the last assignment time.
    #[must_use]
    pub fn forgetting_factor(&self, now: f64, rate: f64) -> f64 {
        libm::exp(-rate * (now - self.last_assign))
    }
}

/// True iff the vector falls strictly inside the micro-cluster's hyperbox:
/// `|features[h] - centroid[h]| < spans[h] / 2` in every dimension.
pub fn reachable(event_features: &[f64], mc: &MicroCluster) -> Result<bool, ClusterError> {
    if event_features.len() != mc.centroid.len() {
        return Err(ClusterError::DimensionMismatch {
            expected: mc.centroid.len(),
            found: event_features.len(),
        });
    }
    Ok(event_features
        .iter()
        .zip(mc.centroid.iter())
        .zip(mc.spans.iter())
        .all(|((&v, &o), &u)| libm::fabs(v - o) < u / 2.0))
}

/// Picks the reachable candidate closest in Manhattan distance.
///
/// Ties break to the lowest candidate index; `None` when no candidate is
/// reachable (the caller then opens a new micro-cluster at the vector).
pub fn assign(
    event_features: &[f64],
    candidates: &[MicroCluster],
) -> Result<Option<usize>, ClusterError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, mc) in candidates.iter().enumerate() {
        if !reachable(event_features, mc)? {
            continue;
        }
        let mut dist = 0.0;
        for (&v, &o) in event_features.iter().zip(mc.centroid.iter()) {
            dist += libm::fabs(v - o);
        }
        let closer = match best {
            None => true,
            Some((_, d)) => dist < d, // strict: earlier index wins ties
        };
        if closer {
            best = Some((i, dist));
        }
    }
    Ok(best.map(|(i, _)| i))
}

/// Absorbs a vector into a micro-cluster: appends the row, bumps the
/// count and last-assignment time, and recomputes centroid and density.
pub fn update_on_assign(
    mc: &mut MicroCluster,
    event_features: &[f64],
    now: f64,
) -> Result<(), ClusterError> {
    if event_features.len() != mc.centroid.len() {
        return Err(ClusterError::DimensionMismatch {
            expected: mc.centroid.len(),
            found: event_features.len(),
        });
    }
    mc.feature_rows.push(event_features.to_vec());
    mc.count += 1;
    mc.last_assign = now;
    mc.centroid = column_means(&mc.feature_rows, mc.centroid.len());
    mc.density = mc.count as f64 / hyperbox_volume(&mc.spans);
    Ok(())
}

/// Density class of a micro-cluster relative to its population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityLabel {
    /// At or above both the median and the mean discounted density.
    Dense,
    /// At or above the median but below the mean.
    SemiDense,
    /// Below the median.
    LowDense,
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Labels each micro-cluster dense, semi-dense, or low-dense.
///
/// Densities are first discounted by the exponential forgetting factor
/// `e^(-rate * (now - last_assign))`, then compared against the population
/// median (below it: low-dense) and mean (at or above both: dense;
/// otherwise semi-dense). A single micro-cluster is always dense.
#[must_use]
pub fn classify_density(mcs: &[MicroCluster], now: f64, forgetting_rate: f64) -> Vec<DensityLabel> {
    if mcs.is_empty() {
        return Vec::new();
    }
    let discounted: Vec<f64> =
        mcs.iter().map(|mc| mc.density * mc.forgetting_factor(now, forgetting_rate)).collect();
    let mut sorted = discounted.clone();
    sorted.sort_by(f64::total_cmp);
    let median = median_of_sorted(&sorted);
    let mean = {
        let mut s = 0.0;
        for &d in &discounted {
            s += d;
        }
        s / discounted.len() as f64
    };
    discounted
        .iter()
        .map(|&d| {
            if d < median {
                DensityLabel::LowDense
            } else if d >= mean {
                DensityLabel::Dense
            } else {
                DensityLabel::SemiDense
            }
        })
        .collect()
}

/// A connected group of micro-clusters within one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicCluster {
    /// The member micro-clusters.
    pub members: Vec<MicroCluster>,
    /// The interval the group was formed in.
    pub interval_index: usize,
    /// 0-based position among the interval's emitted groups.
    pub cluster_index: usize,
}

impl DynamicCluster {
    /// Mean of the member densities.
    #[must_use]
    pub fn mean_density(&self) -> f64 {
        let mut s = 0.0;
        for m in &self.members {
            s += m.density;
        }
        s / self.members.len() as f64
    }

    /// Mean of the member centroids: the group's trajectory row.
    #[must_use]
    pub fn centroid_mean(&self) -> Vec<f64> {
        let dim = self.members[0].centroid.len();
        let mut mean = vec![0.0; dim];
        for m in &self.members {
            for (h, &v) in m.centroid.iter().enumerate() {
                mean[h] += v;
            }
        }
        let n = self.members.len() as f64;
        for v in &mut mean {
            *v /= n;
        }
        mean
    }
}

/// True iff two hyperboxes overlap in a dimension: centre distance at most
/// the mean of their spans.
fn boxes_overlap_in_dim(a: &MicroCluster, b: &MicroCluster, h: usize) -> bool {
    libm::fabs(a.centroid[h] - b.centroid[h]) <= (a.spans[h] + b.spans[h]) / 2.0
}

/// True iff the boxes overlap in all but at most `theta` dimensions.
fn boxes_connected(a: &MicroCluster, b: &MicroCluster, theta: usize) -> bool {
    let dim = a.centroid.len();
    let mut missed = 0;
    for h in 0..dim {
        if !boxes_overlap_in_dim(a, b, h) {
            missed += 1;
            if missed > theta {
                return false;
            }
        }
    }
    true
}

/// Groups micro-clusters into connected components by hyperbox overlap and
/// emits the components that qualify as dynamic clusters.
///
/// Components are found over *all* micro-clusters; a component is emitted
/// only if every member is dense or semi-dense and at least one member is
/// dense. Emitted groups are indexed in order of their lowest member
/// position, so output is deterministic.
///
/// `labels` must parallel `mcs` (as produced by [`classify_density`]).
#[must_use]
pub fn connected_components(
    mcs: &[MicroCluster],
    labels: &[DensityLabel],
    theta: usize,
    interval_index: usize,
) -> Vec<DynamicCluster> {
    debug_assert_eq!(mcs.len(), labels.len(), "labels must parallel micro-clusters");
    let n = mcs.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // BFS over the overlap graph.
        let mut component = Vec::new();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            component.push(i);
            for j in 0..n {
                if !seen[j] && boxes_connected(&mcs[i], &mcs[j], theta) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        component.sort_unstable();
        let all_dense_or_semi = component.iter().all(|&i| labels[i] != DensityLabel::LowDense);
        let any_dense = component.iter().any(|&i| labels[i] == DensityLabel::Dense);
        if all_dense_or_semi && any_dense {
            out.push(DynamicCluster {
                members: component.iter().map(|&i| mcs[i].clone()).collect(),
                interval_index,
                cluster_index: out.len(),
            });
        }
    }
    out
}

/// Picks the group with the highest mean member density; ties break to the
/// lowest cluster index. `None` for an empty list (an interval without a
/// qualifying group).
#[must_use]
pub fn densest_cluster(clusters: &[DynamicCluster]) -> Option<&DynamicCluster> {
    let mut best: Option<(&DynamicCluster, f64)> = None;
    for c in clusters {
        let mean = c.mean_density();
        let better = match &best {
            None => true,
            Some((b, bm)) => {
                mean > *bm || (mean == *bm && c.cluster_index < b.cluster_index)
            }
        };
        if better {
            best = Some((c, mean));
        }
    }
    best.map(|(c, _)| c)
}

/// The per-interval summary matrix consumed by the drift detector.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// One row per interval, in scaled feature space.
    pub rows: Vec<Vec<f64>>,
    /// Dimension of every row.
    pub feature_dim: usize,
}

impl Trajectory {
    /// Number of intervals summarised.
    #[must_use]
    pub fn interval_count(&self) -> usize {
        self.rows.len()
    }
}

/// Builds the trajectory: one row per interval, each the centroid mean of
/// the interval's densest dynamic cluster.
///
/// Feature columns are min-max scaled to [-1, 1] over the non-empty rows of
/// the first [`ClusterConfig::warmup_intervals`] intervals (falling back to
/// all non-empty rows if the warm-up happens to be entirely empty).
/// Clustering restarts from an empty micro-cluster set each interval.
/// Intervals without a qualifying cluster (in particular, empty intervals)
/// carry the previous row forward; a leading gap produces all-zero rows and
/// a logged warning.
pub fn build_trajectory(
    rows: &[DailyFeatureRow],
    config: &ClusterConfig,
) -> Result<Trajectory, ClusterError> {
    config.validate()?;
    let mut dim: Option<usize> = None;
    for row in rows {
        if let Some(f) = &row.features {
            match dim {
                None => dim = Some(f.len()),
                Some(d) if d != f.len() => {
                    return Err(ClusterError::RowDimensionMismatch {
                        interval: row.interval_index,
                        expected: d,
                        found: f.len(),
                    });
                }
                _ => {}
            }
        }
    }
    let Some(dim) = dim else {
        return Err(ClusterError::NoObservations);
    };

    let warmup = rows.len().min(config.warmup_intervals);
    let scaler = FeatureScaler::fit(
        rows[..warmup].iter().filter_map(|r| r.features.as_deref()),
    )
    .or_else(|| {
        log::warn!("warm-up intervals are all empty; fitting feature scaling on the full series");
        FeatureScaler::fit(rows.iter().filter_map(|r| r.features.as_deref()))
    })
    .expect("at least one non-empty row exists");

    let spans = vec![(config.span_fraction * 2.0).max(MIN_SPAN); dim];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut leading_gap = false;
    for (j, row) in rows.iter().enumerate() {
        let interval_points: Vec<Vec<f64>> = match &row.features {
            Some(f) => vec![scaler.apply(f)],
            None => Vec::new(),
        };
        // Fresh micro-cluster set for each interval's wake-up.
        let mut mcs: Vec<MicroCluster> = Vec::new();
        let now = (j + 1) as f64; // interval end, in interval units
        for point in interval_points {
            match assign(&point, &mcs)? {
                Some(i) => update_on_assign(&mut mcs[i], &point, now)?,
                None => mcs.push(MicroCluster::new(point, spans.clone(), now)),
            }
        }
        let labels = classify_density(&mcs, now, config.forgetting_rate);
        let clusters = connected_components(&mcs, &labels, config.theta, j);
        match densest_cluster(&clusters) {
            Some(c) => out.push(c.centroid_mean()),
            None => {
                if let Some(prev) = out.last() {
                    let prev = prev.clone();
                    out.push(prev);
                } else {
                    leading_gap = true;
                    out.push(vec![0.0; dim]);
                }
            }
        }
    }
    if leading_gap {
        log::warn!("leading empty intervals produced all-zero trajectory rows");
    }
    Ok(Trajectory { rows: out, feature_dim: dim })
}
