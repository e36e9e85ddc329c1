//! Seeded synthetic generator of nightly behaviour event sequences with
//! injectable gradual drifts, plus moment summaries for validating the
//! generated regimes.
//!
//! Each day produces one night of a single event kind: an onset time, a
//! total sleep duration, and a number of interruptions splitting the night
//! into fragments. Per-day parameters are drawn from a [`RegimeSpec`];
//! during the drift period they move toward a target regime along a
//! configurable transition shape. The sawtooth shape oscillates around the
//! target so that the drift period *keeps changing* while still matching
//! the target's mean and standard deviation exactly in the long run.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::events::{Event, EventSequence, Timestamp};

/// Earliest admissible mean onset: 18:00.
pub const ONSET_MIN_S: f64 = 64_800.0;
/// Latest admissible mean onset: 02:00 past midnight.
pub const ONSET_MAX_S: f64 = 93_600.0;
/// Shortest admissible sleep duration in hours.
pub const DURATION_MIN_H: f64 = 0.5;
/// Longest admissible sleep duration in hours.
pub const DURATION_MAX_H: f64 = 14.0;
/// A night must end by noon of the following day (seconds from midnight).
pub const NIGHT_END_MAX_S: f64 = 129_600.0;

const SECONDS_PER_DAY: i64 = 86_400;
const MAX_SAMPLING_ATTEMPTS: usize = 10_000;

/// Errors raised while validating regimes or generating sequences.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatagenError {
    /// Too short a series to carry a meaningful drift experiment.
    #[error("at least 10 days required, got {0}")]
    TooFewDays(usize),
    /// A standard deviation is negative or not finite.
    #[error("{field} standard deviation must be non-negative and finite, got {value}")]
    InvalidStd {
        /// Name of the offending field.
        field: &'static str,
        /// Offending value.
        value: f64,
    },
    /// Mean onset outside the admissible evening window.
    #[error("mean onset {0} s must lie between 64800 (18:00) and 93600 (02:00 next day)")]
    InfeasibleOnset(f64),
    /// Mean duration outside the admissible range.
    #[error("mean sleep duration {0} h must lie between 0.5 and 14")]
    InfeasibleDuration(f64),
    /// Negative mean interruption count.
    #[error("mean interruption count must be non-negative, got {0}")]
    InfeasibleCount(f64),
    /// Negative mean interruption minutes.
    #[error("mean interruption minutes must be non-negative, got {0}")]
    InfeasibleMinutes(f64),
    /// The mean night would overrun noon of the following day.
    #[error("mean night span of {0} s overruns noon of the next day (129600 s)")]
    InfeasibleNightSpan(f64),
    /// Drift fraction outside (0, 1).
    #[error("drift fraction must be in (0, 1), got {0}")]
    InvalidFraction(f64),
    /// The drift perturbs nothing.
    #[error("drift must perturb at least one feature group")]
    NoPerturbedFeatures,
    /// Sawtooth period too short.
    #[error("sawtooth period must be at least 2 days, got {0}")]
    InvalidPeriod(usize),
    /// Oscillation share outside [0, 1].
    #[error("oscillation share must be in [0, 1], got {0}")]
    InvalidShare(f64),
    /// Weekly routine share outside [0, 1].
    #[error("weekly routine share must be in [0, 1], got {0}")]
    InvalidWeeklyShare(f64),
    /// Ramp fraction outside (0, 1].
    #[error("ramp fraction must be in (0, 1], got {0}")]
    InvalidRampFraction(f64),
    /// Spread-sawtooth rise fraction outside (0, 1).
    #[error("rise fraction must be in (0, 1), got {0}")]
    InvalidRiseFraction(f64),
    /// Rejection sampling failed to find a feasible day.
    #[error("could not sample a feasible day after {0} attempts")]
    SamplingStuck(usize),
}

/// Statistical regime of the generated nights.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RegimeSpec {
    /// Mean onset in seconds from midnight (values past 86400 are after
    /// midnight).
    pub onset_mean_s: f64,
    /// Onset standard deviation in seconds.
    pub onset_std_s: f64,
    /// Mean total sleep duration in hours.
    pub duration_mean_h: f64,
    /// Sleep duration standard deviation in hours.
    pub duration_std_h: f64,
    /// Mean number of interruptions per night.
    pub interruption_count_mean: f64,
    /// Interruption count standard deviation.
    pub interruption_count_std: f64,
    /// Mean total interrupted time per interrupted night, in minutes.
    pub interruption_minutes_mean: f64,
    /// Interrupted-time standard deviation in minutes.
    pub interruption_minutes_std: f64,
    /// Fraction of the onset variance carried by a fixed weekly routine
    /// (day-of-week offsets), in [0, 1). The rest is day-to-day noise; the
    /// marginal mean and std stay exactly as configured.
    pub weekly_onset_share: f64,
    /// Fraction of the duration variance carried by the weekly routine,
    /// in [0, 1).
    pub weekly_duration_share: f64,
}

/// Canonical zero-mean, unit-variance day-of-week profile (Monday first):
/// slightly earlier/shorter nights midweek, later/longer on the weekend.
const WEEKLY_PROFILE_RAW: [f64; 7] = [-0.8, -1.1, -0.3, 0.1, -0.2, 1.4, 0.9];

/// `WEEKLY_PROFILE_RAW` normalised to mean 0 and population variance 1.
fn weekly_profile(day: usize) -> f64 {
    let mut mean = 0.0;
    for v in WEEKLY_PROFILE_RAW {
        mean += v;
    }
    mean /= 7.0;
    let mut var = 0.0;
    for v in WEEKLY_PROFILE_RAW {
        var += (v - mean) * (v - mean);
    }
    var /= 7.0;
    (WEEKLY_PROFILE_RAW[day % 7] - mean) / libm::sqrt(var)
}

impl RegimeSpec {
    /// Checks physical feasibility of the regime's means and stds.
    pub fn validate(&self) -> Result<(), DatagenError> {
        for (field, value) in [
            ("onset", self.onset_std_s),
            ("duration", self.duration_std_h),
            ("interruption count", self.interruption_count_std),
            ("interruption minutes", self.interruption_minutes_std),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(DatagenError::InvalidStd { field, value });
            }
        }
        if !(ONSET_MIN_S..=ONSET_MAX_S).contains(&self.onset_mean_s) {
            return Err(DatagenError::InfeasibleOnset(self.onset_mean_s));
        }
        if !(DURATION_MIN_H..=DURATION_MAX_H).contains(&self.duration_mean_h) {
            return Err(DatagenError::InfeasibleDuration(self.duration_mean_h));
        }
        if self.interruption_count_mean.is_nan() || self.interruption_count_mean < 0.0 {
            return Err(DatagenError::InfeasibleCount(self.interruption_count_mean));
        }
        if self.interruption_minutes_mean.is_nan() || self.interruption_minutes_mean < 0.0 {
            return Err(DatagenError::InfeasibleMinutes(self.interruption_minutes_mean));
        }
        for share in [self.weekly_onset_share, self.weekly_duration_share] {
            if !(0.0..=1.0).contains(&share) {
                return Err(DatagenError::InvalidWeeklyShare(share));
            }
        }
        let mean_span = self.onset_mean_s
            + self.duration_mean_h * 3600.0
            + self.interruption_minutes_mean * 60.0;
        if mean_span > NIGHT_END_MAX_S {
            return Err(DatagenError::InfeasibleNightSpan(mean_span));
        }
        Ok(())
    }
}

/// How the perturbed parameters travel from the normal to the target
/// regime across the drift period.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum TransitionShape {
    /// Linear interpolation of mean and std over the leading fraction of
    /// the drift span, then steady at the target.
    Ramp {
        /// Fraction of the drift span spent ramping, in (0, 1].
        ramp_fraction: f64,
    },
    /// Target regime from the first drift day.
    Step,
    /// Triangle-wave oscillation around the target mean. The amplitude is
    /// chosen so the drift period's overall mean and standard deviation
    /// still match the target exactly: a share `s` of the target variance
    /// is carried by the oscillation and the rest by per-day noise.
    Sawtooth {
        /// Oscillation period in days (≥ 2).
        period_days: usize,
        /// Fraction of the target variance carried by the oscillation,
        /// in [0, 1].
        oscillation_share: f64,
    },
    /// Sawtooth oscillation of the day-to-day *spread* at a constant
    /// target mean: the per-day variance swings between `(1 ± share)` times
    /// the target variance, so the drift period still matches the target
    /// mean and standard deviation exactly while its dispersion keeps
    /// changing. `rise_fraction` skews the wave: the variance climbs over
    /// that fraction of the period and falls over the rest, so values near
    /// 1 give a long steady build-up with an abrupt collapse. A skewed
    /// piecewise-linear wave still averages to zero over a full period, so
    /// the pooled moments are unaffected by the skew.
    SpreadSawtooth {
        /// Oscillation period in days (≥ 2).
        period_days: usize,
        /// Relative variance swing, in [0, 1].
        oscillation_share: f64,
        /// Fraction of the period spent rising, in (0, 1); 0.5 is the
        /// symmetric triangle.
        rise_fraction: f64,
    },
}

impl Default for TransitionShape {
    fn default() -> Self {
        TransitionShape::Ramp { ramp_fraction: 0.15 }
    }
}

/// Which parameter groups the drift moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PerturbedFeatures {
    /// Move the sleep duration parameters.
    pub duration: bool,
    /// Move both interruption parameter pairs (count and minutes).
    pub interruptions: bool,
    /// Move the onset parameters.
    pub onset: bool,
}

impl PerturbedFeatures {
    /// True when no group is selected.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        !(self.duration || self.interruptions || self.onset)
    }
}

/// How individual drift-day values scatter around the (possibly moving)
/// drift-regime parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DriftTexture {
    /// Bounded continuous day-to-day noise, as in the normal period.
    #[default]
    Continuous,
    /// The behavioural repertoire collapses onto three rigid night
    /// templates: each drift night draws one of `{low, mid, high}` and all
    /// perturbed parameters move together to `mean`, or `mean ± √1.5·std`.
    /// The three-point uniform keeps the regime's mean and standard
    /// deviation exactly while the night-to-night variety disappears —
    /// modelling the loss of behavioural flexibility that accompanies
    /// cognitive decline. Weekly routine shares are ignored on these days.
    RigidTemplates,
}

/// Template offset in standard deviations: `±√1.5` with probability 1/3
/// each (and 0 otherwise) reproduces the target variance exactly.
const TEMPLATE_OFFSET: f64 = 1.224_744_871_391_589;

/// A drift injection plan.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DriftSpec {
    /// Fraction of the series occupied by the drift period, in (0, 1).
    pub fraction: f64,
    /// Transition shape of the perturbed parameters.
    pub shape: TransitionShape,
    /// Day-to-day texture of the drift period.
    #[cfg_attr(feature = "serde", serde(default))]
    pub texture: DriftTexture,
    /// Parameter groups that move.
    pub perturbed: PerturbedFeatures,
    /// Regime the perturbed groups move toward.
    pub target: RegimeSpec,
}

impl DriftSpec {
    /// Checks the plan, including feasibility of the shape's extremes.
    pub fn validate(&self, normal: &RegimeSpec) -> Result<(), DatagenError> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(DatagenError::InvalidFraction(self.fraction));
        }
        if self.perturbed.is_empty() {
            return Err(DatagenError::NoPerturbedFeatures);
        }
        self.target.validate()?;
        match self.shape {
            TransitionShape::Ramp { ramp_fraction } => {
                if !(ramp_fraction > 0.0 && ramp_fraction <= 1.0) {
                    return Err(DatagenError::InvalidRampFraction(ramp_fraction));
                }
            }
            TransitionShape::Step => {}
            TransitionShape::Sawtooth { period_days, oscillation_share } => {
                if period_days < 2 {
                    return Err(DatagenError::InvalidPeriod(period_days));
                }
                if !(0.0..=1.0).contains(&oscillation_share) {
                    return Err(DatagenError::InvalidShare(oscillation_share));
                }
                // The oscillation extremes must themselves be feasible.
                for tri in [-1.0, 1.0] {
                    effective_regime(normal, self, 0, 1, ForcedPhase::Some(tri)).validate()?;
                }
            }
            TransitionShape::SpreadSawtooth { period_days, oscillation_share, rise_fraction } => {
                if period_days < 2 {
                    return Err(DatagenError::InvalidPeriod(period_days));
                }
                if !(0.0..=1.0).contains(&oscillation_share) {
                    return Err(DatagenError::InvalidShare(oscillation_share));
                }
                if !(rise_fraction > 0.0 && rise_fraction < 1.0) {
                    return Err(DatagenError::InvalidRiseFraction(rise_fraction));
                }
                for tri in [-1.0, 1.0] {
                    effective_regime(normal, self, 0, 1, ForcedPhase::Some(tri)).validate()?;
                }
            }
        }
        if self.texture == DriftTexture::RigidTemplates {
            // Every template of every drift regime the shape can produce
            // must be a feasible night (no rejection loop exists on the
            // template path).
            let mut regimes = Vec::new();
            match self.shape {
                TransitionShape::Step => regimes.push(self.target),
                // Ramp regimes interpolate linearly, so the template
                // night-plans are linear in the ramp position and their
                // extremes sit at the endpoints.
                TransitionShape::Ramp { .. } => {
                    regimes.push(*normal);
                    regimes.push(self.target);
                }
                TransitionShape::Sawtooth { .. } | TransitionShape::SpreadSawtooth { .. } => {
                    for tri in [-1.0, 1.0] {
                        regimes.push(effective_regime(normal, self, 0, 1, ForcedPhase::Some(tri)));
                    }
                }
            }
            for regime in regimes {
                for e in [-1.0, 0.0, 1.0] {
                    template_plan(&regime, e)?;
                }
            }
        }
        Ok(())
    }
}

/// Triangle wave on [0, 1) starting at -1, peaking at +1 mid-period.
fn triangle(phase: f64) -> f64 {
    1.0 - 4.0 * libm::fabs(phase - 0.5)
}

/// Skewed triangle wave on [0, 1): climbs linearly from -1 to +1 over
/// `rise` of the period, then falls linearly back. `rise = 0.5` is
/// [`triangle`]. Each linear leg averages to zero, so so does the wave.
fn triangle_skewed(phase: f64, rise: f64) -> f64 {
    if phase < rise {
        -1.0 + 2.0 * phase / rise
    } else {
        1.0 - 2.0 * (phase - rise) / (1.0 - rise)
    }
}

enum ForcedPhase {
    /// Evaluate the sawtooth at this triangle value (used for validation).
    Some(f64),
    /// Evaluate the sawtooth at the day's actual phase.
    FromDay,
}

/// The regime in force on drift day `offset` of `span` drift days.
fn effective_regime(
    normal: &RegimeSpec,
    drift: &DriftSpec,
    offset: usize,
    span: usize,
    forced: ForcedPhase,
) -> RegimeSpec {
    // Per perturbed pair: (mean, std) -> transformed (mean, std).
    let transform = |n_mean: f64, n_std: f64, t_mean: f64, t_std: f64| -> (f64, f64) {
        match drift.shape {
            TransitionShape::Step => (t_mean, t_std),
            TransitionShape::Ramp { ramp_fraction } => {
                let ramp_days = libm::round(span as f64 * ramp_fraction).max(1.0);
                let s = ((offset as f64 + 1.0) / ramp_days).min(1.0);
                (n_mean + s * (t_mean - n_mean), n_std + s * (t_std - n_std))
            }
            TransitionShape::Sawtooth { period_days, oscillation_share } => {
                let tri = match forced {
                    ForcedPhase::Some(v) => v,
                    ForcedPhase::FromDay => {
                        triangle((offset % period_days) as f64 / period_days as f64)
                    }
                };
                let amplitude = t_std * libm::sqrt(3.0 * oscillation_share);
                let residual = t_std * libm::sqrt(1.0 - oscillation_share);
                (t_mean + amplitude * tri, residual)
            }
            TransitionShape::SpreadSawtooth { period_days, oscillation_share, rise_fraction } => {
                let tri = match forced {
                    ForcedPhase::Some(v) => v,
                    ForcedPhase::FromDay => triangle_skewed(
                        (offset % period_days) as f64 / period_days as f64,
                        rise_fraction,
                    ),
                };
                (t_mean, t_std * libm::sqrt(1.0 + oscillation_share * tri))
            }
        }
    };

    let mut regime = *normal;
    let target = &drift.target;
    if drift.perturbed.duration {
        let (m, s) =
            transform(normal.duration_mean_h, normal.duration_std_h, target.duration_mean_h, target.duration_std_h);
        regime.duration_mean_h = m;
        regime.duration_std_h = s;
    }
    if drift.perturbed.onset {
        let (m, s) =
            transform(normal.onset_mean_s, normal.onset_std_s, target.onset_mean_s, target.onset_std_s);
        regime.onset_mean_s = m;
        regime.onset_std_s = s;
    }
    if drift.perturbed.interruptions {
        let (m, s) = transform(
            normal.interruption_count_mean,
            normal.interruption_count_std,
            target.interruption_count_mean,
            target.interruption_count_std,
        );
        regime.interruption_count_mean = m;
        regime.interruption_count_std = s;
        let (m, s) = transform(
            normal.interruption_minutes_mean,
            normal.interruption_minutes_std,
            target.interruption_minutes_mean,
            target.interruption_minutes_std,
        );
        regime.interruption_minutes_mean = m;
        regime.interruption_minutes_std = s;
    }
    regime
}

/// One night's sampled plan, in whole seconds.
struct DayPlan {
    onset_s: i64,
    duration_s: i64,
    interruptions: usize,
    gap_total_s: i64,
}

/// Draws from the moment-matched bounded (uniform) distribution
/// `mean ± √3·std`. Bounded day-to-day noise keeps the generated regimes
/// physically plausible (behaviour constrained by schedules has hard
/// limits, not Gaussian tails) while matching the configured mean and
/// standard deviation exactly.
fn sample_centered(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return mean;
    }
    let half_width = libm::sqrt(3.0) * std;
    mean + half_width * rng.random_range(-1.0..1.0)
}

fn sample_bounded(
    rng: &mut ChaCha8Rng,
    mean: f64,
    std: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, DatagenError> {
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let v = sample_centered(rng, mean, std);
        if (lo..=hi).contains(&v) {
            return Ok(v);
        }
    }
    Err(DatagenError::SamplingStuck(MAX_SAMPLING_ATTEMPTS))
}

/// The deterministic night plan of template `e` (−1, 0, or +1) under
/// `regime`, or an error when that night would be infeasible.
fn template_plan(regime: &RegimeSpec, e: f64) -> Result<DayPlan, DatagenError> {
    let off = e * TEMPLATE_OFFSET;
    let onset = regime.onset_mean_s + off * regime.onset_std_s;
    if !(ONSET_MIN_S..=ONSET_MAX_S).contains(&onset) {
        return Err(DatagenError::InfeasibleOnset(onset));
    }
    let duration_h = regime.duration_mean_h + off * regime.duration_std_h;
    if !(DURATION_MIN_H..=DURATION_MAX_H).contains(&duration_h) {
        return Err(DatagenError::InfeasibleDuration(duration_h));
    }
    let count = regime.interruption_count_mean + off * regime.interruption_count_std;
    if count < -0.5 {
        return Err(DatagenError::InfeasibleCount(count));
    }
    let interruptions = libm::round(count).max(0.0) as usize;
    let onset_s = libm::round(onset) as i64;
    let duration_s = libm::round(duration_h * 3600.0) as i64;
    let gap_total_s = if interruptions == 0 {
        0
    } else {
        let minutes = regime.interruption_minutes_mean + off * regime.interruption_minutes_std;
        let s = libm::round(minutes * 60.0) as i64;
        if s < interruptions as i64 {
            return Err(DatagenError::InfeasibleMinutes(minutes));
        }
        s
    };
    if (onset_s + duration_s + gap_total_s) as f64 > NIGHT_END_MAX_S {
        return Err(DatagenError::InfeasibleNightSpan((onset_s + duration_s + gap_total_s) as f64));
    }
    if duration_s < (interruptions + 1) as i64 {
        return Err(DatagenError::InfeasibleDuration(duration_h));
    }
    Ok(DayPlan { onset_s, duration_s, interruptions, gap_total_s })
}

/// Draws one of the three rigid night templates uniformly.
fn sample_template_day(rng: &mut ChaCha8Rng, regime: &RegimeSpec) -> Result<DayPlan, DatagenError> {
    let e = rng.random_range(0..3) as f64 - 1.0;
    template_plan(regime, e)
}

fn sample_day(rng: &mut ChaCha8Rng, regime: &RegimeSpec, day: usize) -> Result<DayPlan, DatagenError> {
    // Split each modulated parameter into its deterministic weekly routine
    // component and the day-to-day noise; the marginal moments over whole
    // weeks stay exactly (mean, std).
    let profile = weekly_profile(day);
    let onset_mean =
        regime.onset_mean_s + regime.onset_std_s * libm::sqrt(regime.weekly_onset_share) * profile;
    let onset_std = regime.onset_std_s * libm::sqrt(1.0 - regime.weekly_onset_share);
    let duration_mean = regime.duration_mean_h
        + regime.duration_std_h * libm::sqrt(regime.weekly_duration_share) * profile;
    let duration_std = regime.duration_std_h * libm::sqrt(1.0 - regime.weekly_duration_share);
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let onset_s =
            libm::round(sample_bounded(rng, onset_mean, onset_std, ONSET_MIN_S, ONSET_MAX_S)?)
                as i64;
        let duration_h =
            sample_bounded(rng, duration_mean, duration_std, DURATION_MIN_H, DURATION_MAX_H)?;
        let duration_s = libm::round(duration_h * 3600.0) as i64;

        let mut interruptions = None;
        for _ in 0..MAX_SAMPLING_ATTEMPTS {
            let c = libm::round(sample_centered(
                rng,
                regime.interruption_count_mean,
                regime.interruption_count_std,
            ));
            if c >= 0.0 {
                interruptions = Some(c as usize);
                break;
            }
        }
        let Some(interruptions) = interruptions else {
            return Err(DatagenError::SamplingStuck(MAX_SAMPLING_ATTEMPTS));
        };

        let gap_total_s = if interruptions == 0 {
            0
        } else {
            let mut total = None;
            for _ in 0..MAX_SAMPLING_ATTEMPTS {
                let minutes = sample_centered(
                    rng,
                    regime.interruption_minutes_mean,
                    regime.interruption_minutes_std,
                );
                let s = libm::round(minutes * 60.0) as i64;
                // Every gap needs at least one second.
                if s >= interruptions as i64 {
                    total = Some(s);
                    break;
                }
            }
            match total {
                Some(t) => t,
                None => return Err(DatagenError::SamplingStuck(MAX_SAMPLING_ATTEMPTS)),
            }
        };

        // The night, including interruptions, must end by next-day noon;
        // the sleep itself needs a whole second per fragment.
        if (onset_s + duration_s + gap_total_s) as f64 <= NIGHT_END_MAX_S
            && duration_s >= (interruptions + 1) as i64
        {
            return Ok(DayPlan { onset_s, duration_s, interruptions, gap_total_s });
        }
    }
    Err(DatagenError::SamplingStuck(MAX_SAMPLING_ATTEMPTS))
}

/// Splits `total` into `parts` whole-second pieces, each at least 1,
/// proportional to random weights. Requires `total >= parts`.
fn split_total(rng: &mut ChaCha8Rng, total: i64, parts: usize) -> Vec<i64> {
    debug_assert!(total >= parts as i64 && parts >= 1);
    if parts == 1 {
        return vec![total];
    }
    let weights: Vec<f64> = (0..parts).map(|_| rng.random_range(0.1..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut out: Vec<i64> =
        weights.iter().map(|w| (libm::round(total as f64 * w / wsum) as i64).max(1)).collect();
    let mut diff = total - out.iter().sum::<i64>();
    // Settle rounding error against the largest pieces, never below 1.
    while diff != 0 {
        let idx = (0..parts).max_by_key(|&i| out[i]).expect("parts >= 1");
        if diff > 0 {
            out[idx] += diff;
            diff = 0;
        } else {
            let take = (-diff).min(out[idx] - 1);
            out[idx] -= take;
            diff += take;
            if take == 0 {
                // Every piece is already at 1; cannot happen when total >= parts.
                break;
            }
        }
    }
    out
}

/// Generates `days` nights of the event kind `"sleep"`, with an optional
/// drift over the final `drift.fraction` of the days.
///
/// Returns the event sequence together with the per-day ground-truth drift
/// labels (length `days`, 1 on drift days). Deterministic under `seed`.
pub fn generate(
    days: usize,
    normal: &RegimeSpec,
    drift: Option<&DriftSpec>,
    seed: u64,
) -> Result<(EventSequence, Vec<u8>), DatagenError> {
    if days < 10 {
        return Err(DatagenError::TooFewDays(days));
    }
    normal.validate()?;
    if let Some(d) = drift {
        d.validate(normal)?;
    }
    let drift_span = drift.map_or(0, |d| libm::round(days as f64 * d.fraction) as usize);
    let drift_start = days - drift_span;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut truth = vec![0u8; days];

    for (day, label) in truth.iter_mut().enumerate() {
        let mut texture = DriftTexture::Continuous;
        let regime = match drift {
            Some(d) if day >= drift_start => {
                *label = 1;
                texture = d.texture;
                effective_regime(normal, d, day - drift_start, drift_span, ForcedPhase::FromDay)
            }
            _ => *normal,
        };
        regime.validate()?;
        let plan = match texture {
            DriftTexture::Continuous => sample_day(&mut rng, &regime, day)?,
            DriftTexture::RigidTemplates => sample_template_day(&mut rng, &regime)?,
        };
        let fragments = split_total(&mut rng, plan.duration_s, plan.interruptions + 1);
        let gaps = if plan.interruptions > 0 {
            split_total(&mut rng, plan.gap_total_s, plan.interruptions)
        } else {
            Vec::new()
        };
        let mut t: Timestamp = day as i64 * SECONDS_PER_DAY + plan.onset_s;
        for (i, &frag) in fragments.iter().enumerate() {
            events.push(Event::new("sleep", t, t + frag));
            t += frag;
            if i < gaps.len() {
                t += gaps[i];
            }
        }
    }

    let seq = EventSequence {
        events,
        origin: 0,
        monitoring_end: days as i64 * SECONDS_PER_DAY + 43_200,
        delta: SECONDS_PER_DAY,
    };
    debug_assert!(seq.validate().is_ok());
    Ok((seq, truth))
}

/// Sample moments of one period's nights.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeMoments {
    /// Number of nights in the period.
    pub nights: usize,
    /// Mean onset in seconds from midnight.
    pub onset_mean_s: f64,
    /// Sample standard deviation of the onset in seconds.
    pub onset_std_s: f64,
    /// Mean total sleep duration in hours.
    pub duration_mean_h: f64,
    /// Sample standard deviation of the duration in hours.
    pub duration_std_h: f64,
    /// Mean interruptions per night.
    pub interruption_count_mean: f64,
    /// Sample standard deviation of the interruption count.
    pub interruption_count_std: f64,
    /// Mean interrupted minutes per interrupted night.
    pub interruption_minutes_mean: f64,
    /// Sample standard deviation of the interrupted minutes.
    pub interruption_minutes_std: f64,
}

/// Moment summaries for a sequence, split at an optional drift start day.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStats {
    /// Moments of the nights before the split (or all nights).
    pub normal: Option<RegimeMoments>,
    /// Moments of the nights at or after the split.
    pub drift: Option<RegimeMoments>,
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

fn moments_of(nights: &[NightSummary]) -> Option<RegimeMoments> {
    if nights.is_empty() {
        return None;
    }
    let onsets: Vec<f64> = nights.iter().map(|n| n.onset_s).collect();
    let durations: Vec<f64> = nights.iter().map(|n| n.duration_h).collect();
    let counts: Vec<f64> = nights.iter().map(|n| n.interruptions as f64).collect();
    let minutes: Vec<f64> =
        nights.iter().filter(|n| n.interruptions > 0).map(|n| n.gap_minutes).collect();
    let (onset_mean_s, onset_std_s) = mean_std(&onsets);
    let (duration_mean_h, duration_std_h) = mean_std(&durations);
    let (interruption_count_mean, interruption_count_std) = mean_std(&counts);
    let (interruption_minutes_mean, interruption_minutes_std) = if minutes.is_empty() {
        (0.0, 0.0)
    } else {
        mean_std(&minutes)
    };
    Some(RegimeMoments {
        nights: nights.len(),
        onset_mean_s,
        onset_std_s,
        duration_mean_h,
        duration_std_h,
        interruption_count_mean,
        interruption_count_std,
        interruption_minutes_mean,
        interruption_minutes_std,
    })
}

struct NightSummary {
    day: i64,
    /// Exclusive end of the latest fragment, relative to the origin.
    end_rel: i64,
    onset_s: f64,
    duration_h: f64,
    interruptions: usize,
    gap_minutes: f64,
}

/// Groups a nightly event sequence into per-night summaries by
/// noon-to-noon windows relative to the sequence origin.
fn collect_nights(seq: &EventSequence) -> Vec<NightSummary> {
    let mut nights: Vec<NightSummary> = Vec::new();
    for e in &seq.events {
        let rel = e.begin - seq.origin;
        let day = (rel - 43_200).div_euclid(SECONDS_PER_DAY);
        if day < 0 {
            log::warn!("event starting before the first afternoon ignored in stats");
            continue;
        }
        let onset_s = (rel - day * SECONDS_PER_DAY) as f64;
        let duration_h = e.duration() as f64 / 3600.0;
        match nights.last_mut() {
            Some(last) if last.day == day => {
                let gap = rel - last.end_rel;
                last.interruptions += 1;
                last.gap_minutes += gap as f64 / 60.0;
                last.duration_h += duration_h;
                last.end_rel = e.end - seq.origin;
            }
            _ => {
                nights.push(NightSummary {
                    day,
                    end_rel: e.end - seq.origin,
                    onset_s,
                    duration_h,
                    interruptions: 0,
                    gap_minutes: 0.0,
                });
            }
        }
    }
    nights
}

/// Computes per-period sample moments of a nightly event sequence.
///
/// Events are grouped into nights by noon-to-noon windows relative to the
/// sequence origin. The summary is independent of any labels; the optional
/// `drift_start_day` only decides which nights land in which period (pass
/// `None` to treat the whole sequence as one normal period).
#[must_use]
pub fn stats(seq: &EventSequence, drift_start_day: Option<usize>) -> SequenceStats {
    let nights = collect_nights(seq);
    let split = drift_start_day.map(|d| d as i64);
    let (normal, drift): (Vec<NightSummary>, Vec<NightSummary>) =
        nights.into_iter().partition(|n| split.is_none_or(|s| n.day < s));
    SequenceStats { normal: moments_of(&normal), drift: moments_of(&drift) }
}

/// A ready-to-run generation scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Scenario {
    /// Length of the series in days.
    pub days: usize,
    /// Regime of the normal period.
    pub normal: RegimeSpec,
    /// Drift plan for the final period.
    pub drift: DriftSpec,
}

impl Scenario {
    /// Generates the scenario's sequence and truth labels.
    pub fn generate(&self, seed: u64) -> Result<(EventSequence, Vec<u8>), DatagenError> {
        generate(self.days, &self.normal, Some(&self.drift), seed)
    }

    /// First day of the drift period.
    #[must_use]
    pub fn drift_start_day(&self) -> usize {
        self.days - libm::round(self.days as f64 * self.drift.fraction) as usize
    }
}

/// Four-year nightly series whose final 40% gradually lengthens the sleep
/// duration (long monitored series, duration-perturbed drift).
#[must_use]
pub fn duration_drift_scenario() -> Scenario {
    let normal = RegimeSpec {
        onset_mean_s: 79_476.0, // 22:04:36
        onset_std_s: 2_274.0,   // 37 min 54 s
        duration_mean_h: 8.96,
        duration_std_h: 1.24,
        interruption_count_mean: 2.0,
        interruption_count_std: 1.0,
        interruption_minutes_mean: 9.22,
        interruption_minutes_std: 3.76,
        weekly_onset_share: 0.0,
        weekly_duration_share: 0.0,
    };
    Scenario {
        days: 1460,
        normal,
        drift: DriftSpec {
            fraction: 0.40,
            // The drift is a collapse of behavioural variety, not a shift
            // of averages: nights snap onto three rigid templates with the
            // same pooled moments, the interruption count freezes, and
            // sleep runs slightly longer.
            shape: TransitionShape::Step,
            texture: DriftTexture::RigidTemplates,
            perturbed: PerturbedFeatures { duration: true, interruptions: true, onset: true },
            target: RegimeSpec {
                duration_mean_h: 9.22,
                duration_std_h: 0.78,
                interruption_count_std: 0.0,
                interruption_minutes_mean: 9.17,
                interruption_minutes_std: 3.69,
                ..normal
            },
        },
    }
}

/// Four-year nightly series whose final 40% multiplies the night-time
/// interruptions (long monitored series, interruption-perturbed drift).
#[must_use]
pub fn interruption_drift_scenario() -> Scenario {
    let normal = RegimeSpec {
        onset_mean_s: 81_924.0, // 22:45:24
        onset_std_s: 541.0,     // 9 min 1 s
        duration_mean_h: 7.54,
        duration_std_h: 0.22,
        interruption_count_mean: 2.0,
        interruption_count_std: 1.0,
        interruption_minutes_mean: 12.76,
        interruption_minutes_std: 8.05,
        weekly_onset_share: 0.0,
        weekly_duration_share: 0.0,
    };
    Scenario {
        days: 1460,
        normal,
        drift: DriftSpec {
            fraction: 0.40,
            // Same rigid-template collapse as the duration scenario, but
            // the dominant change is in the interruptions: more of them
            // (2 -> 5 per night), longer, and perfectly regular.
            shape: TransitionShape::Step,
            texture: DriftTexture::RigidTemplates,
            perturbed: PerturbedFeatures { duration: true, interruptions: true, onset: true },
            target: RegimeSpec {
                duration_mean_h: 7.52,
                duration_std_h: 0.25,
                interruption_count_mean: 5.0,
                interruption_count_std: 0.0,
                interruption_minutes_mean: 15.19,
                interruption_minutes_std: 6.61,
                ..normal
            },
        },
    }
}
