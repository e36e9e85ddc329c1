//! Reference detectors: the two-sample Kolmogorov-Smirnov test, a seeded
//! coin-flip labeller, and two KS-window drift detectors (sliding pair and
//! fixed head reference).
//!
//! These exist to calibrate expectations: any serious detector must beat
//! the coin flip, and the KS-window detectors show how far plain
//! distribution testing gets on the same feature rows.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detector::DriftLabels;

/// Errors raised by the baseline detectors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    /// A KS sample was empty.
    #[error("samples must be non-empty")]
    EmptySample,
    /// A KS sample contained NaN or an infinity.
    #[error("samples must be finite")]
    NonFiniteSample,
    /// The window budget must be at least 4.
    #[error("window length must be at least 4, got {0}")]
    WindowTooSmall(usize),
    /// The window budget must be even.
    #[error("window length must be even, got {0}")]
    OddWindow(usize),
    /// The advance step must be positive.
    #[error("step must be at least 1")]
    ZeroStep,
    /// The significance level must lie strictly between 0 and 1.
    #[error("significance level must be in (0, 1), got {0}")]
    InvalidAlpha(f64),
    /// The series is too short for even one window pair.
    #[error("window length {window} does not fit a series of {n} rows")]
    WindowTooLarge {
        /// Configured window budget.
        window: usize,
        /// Series length.
        n: usize,
    },
    /// The input series has no rows.
    #[error("series is empty")]
    EmptySeries,
    /// A row's dimension differs from the first row's.
    #[error("series row {index} has dimension {found}, expected {expected}")]
    InconsistentRows {
        /// Index of the offending row.
        index: usize,
        /// Dimension established by the first row.
        expected: usize,
        /// Dimension of the offending row.
        found: usize,
    },
}

/// Outcome of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Supremum distance between the two empirical CDFs, in [0, 1].
    pub statistic: f64,
    /// Asymptotic tail probability of observing a distance at least this
    /// large under the null, in [0, 1].
    pub p_value: f64,
    /// First sample size.
    pub n1: usize,
    /// Second sample size.
    pub n2: usize,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`.
///
/// Returns 1 when the alternating series fails to converge (tiny lambda).
#[must_use]
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    let a2 = -2.0 * lambda * lambda;
    let mut fac = 2.0;
    let mut sum = 0.0;
    let mut prev_term = 0.0;
    for k in 1..=100 {
        let term = fac * libm::exp(a2 * (k * k) as f64);
        sum += term;
        let mag = libm::fabs(term);
        if mag <= 0.001 * prev_term || mag <= 1e-12 * libm::fabs(sum) {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev_term = mag;
    }
    1.0
}

/// Two-sample Kolmogorov-Smirnov test with the exact supremum distance and
/// the standard asymptotic p-value at effective size `n1*n2/(n1+n2)`.
///
/// The distance is evaluated after advancing *both* samples past each
/// pooled value, so ties are handled exactly.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, BaselineError> {
    if a.is_empty() || b.is_empty() {
        return Err(BaselineError::EmptySample);
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFiniteSample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let v = a[i].min(b[j]);
        while i < n1 && a[i] == v {
            i += 1;
        }
        while j < n2 && b[j] == v {
            j += 1;
        }
        let diff = libm::fabs(i as f64 / n1 as f64 - j as f64 / n2 as f64);
        d = d.max(diff);
    }
    let en = libm::sqrt((n1 * n2) as f64 / (n1 + n2) as f64);
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda), n1, n2 })
}

/// Seeded fair-coin labeller: the weakest baseline any detector must beat.
#[must_use]
pub fn random_labels(n: usize, seed: u64) -> DriftLabels {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DriftLabels::new((0..n).map(|_| u8::from(rng.random_bool(0.5))).collect())
}

/// Parameters for the KS-window detectors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KsWindowConfig {
    /// Window budget: each compared window holds `window_len / 2` rows.
    pub window_len: usize,
    /// Advance step between comparisons.
    pub step: usize,
    /// Rejection level for the per-feature KS tests.
    pub alpha: f64,
}

impl Default for KsWindowConfig {
    fn default() -> Self {
        Self { window_len: 30, step: 10, alpha: 0.01 }
    }
}

impl KsWindowConfig {
    /// Checks the parameters against a series of `n` rows.
    pub fn validate(&self, n: usize) -> Result<(), BaselineError> {
        if self.window_len < 4 {
            return Err(BaselineError::WindowTooSmall(self.window_len));
        }
        if !self.window_len.is_multiple_of(2) {
            return Err(BaselineError::OddWindow(self.window_len));
        }
        if self.step == 0 {
            return Err(BaselineError::ZeroStep);
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BaselineError::InvalidAlpha(self.alpha));
        }
        if self.window_len > n {
            return Err(BaselineError::WindowTooLarge { window: self.window_len, n });
        }
        Ok(())
    }
}

fn validate_series(rows: &[Vec<f64>]) -> Result<usize, BaselineError> {
    let Some(first) = rows.first() else {
        return Err(BaselineError::EmptySeries);
    };
    for (i, r) in rows.iter().enumerate() {
        if r.len() != first.len() {
            return Err(BaselineError::InconsistentRows {
                index: i,
                expected: first.len(),
                found: r.len(),
            });
        }
    }
    Ok(first.len())
}

/// True when any feature column of the two row blocks is rejected by the
/// KS test at level `alpha`.
fn any_feature_rejects(
    reference: &[Vec<f64>],
    detection: &[Vec<f64>],
    dim: usize,
    alpha: f64,
) -> Result<bool, BaselineError> {
    for h in 0..dim {
        let a: Vec<f64> = reference.iter().map(|r| r[h]).collect();
        let b: Vec<f64> = detection.iter().map(|r| r[h]).collect();
        if ks_two_sample(&a, &b)?.p_value < alpha {
            return Ok(true);
        }
    }
    Ok(false)
}

/// KS drift detector with a sliding reference/detection window pair.
///
/// At each position the leading half-window is compared feature-by-feature
/// against the trailing half-window; if any feature rejects, the leading
/// half is flagged as drift. The pair then advances by the step regardless
/// of the outcome.
pub fn ks_sliding_windows(
    rows: &[Vec<f64>],
    cfg: &KsWindowConfig,
) -> Result<DriftLabels, BaselineError> {
    let dim = validate_series(rows)?;
    let n = rows.len();
    cfg.validate(n)?;
    let half = cfg.window_len / 2;
    let mut predicted = vec![0u8; n];
    let mut t = 0usize;
    while t + cfg.window_len <= n {
        let reference = &rows[t..t + half];
        let detection = &rows[t + half..t + cfg.window_len];
        if any_feature_rejects(reference, detection, dim, cfg.alpha)? {
            for flag in &mut predicted[t + half..t + cfg.window_len] {
                *flag = 1;
            }
        }
        t += cfg.step;
    }
    Ok(DriftLabels::new(predicted))
}

/// KS drift detector with the reference window fixed at the series head.
///
/// The first half-window is the permanent reference; a detection
/// half-window slides over the rest and is flagged whenever any feature
/// rejects against the head.
pub fn ks_fixed_reference(
    rows: &[Vec<f64>],
    cfg: &KsWindowConfig,
) -> Result<DriftLabels, BaselineError> {
    let dim = validate_series(rows)?;
    let n = rows.len();
    cfg.validate(n)?;
    let half = cfg.window_len / 2;
    let reference = &rows[0..half];
    let mut predicted = vec![0u8; n];
    let mut t = half;
    while t + half <= n {
        let detection = &rows[t..t + half];
        if any_feature_rejects(reference, detection, dim, cfg.alpha)? {
            for flag in &mut predicted[t..t + half] {
                *flag = 1;
            }
        }
        t += cfg.step;
    }
    Ok(DriftLabels::new(predicted))
}
