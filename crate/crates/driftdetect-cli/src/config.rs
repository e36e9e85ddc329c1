//! JSON run configuration.
//!
//! A configuration file carries a profile name plus per-section overrides:
//!
//! ```json
//! {
//!   "profile": "realistic",
//!   "detector": { "lookback": 25, "threshold": 0.2666 },
//!   "clustering": { "span_fraction": 0.06 },
//!   "window": { "start_offset": 75600, "length": 54000 },
//!   "baseline": { "window_len": 30, "alpha": 0.01 },
//!   "search": { "trials": 100, "threshold": [0.05, 0.95] },
//!   "generator": { "days": 1460, "normal": { "...": 0 }, "drift": { "...": 0 } }
//! }
//! ```
//!
//! The profile selects the built-in defaults (`realistic` for long daily
//! series, `synthetic` for short ones); explicit keys override them field by
//! field. Unknown keys are rejected. A profile given on the command line
//! wins over one in the file.

use std::path::Path;

use serde::Deserialize;

use driftdetect_core::baselines::KsWindowConfig;
use driftdetect_core::clustering::ClusterConfig;
use driftdetect_core::datagen::Scenario;
use driftdetect_core::detector::DetectorConfig;
use driftdetect_core::divergence::{ComponentRule, DivergenceTest};
use driftdetect_core::eval::SearchSpace;
use driftdetect_core::events::ObservationWindow;
use driftdetect_core::trackers::Tracker;

use crate::errors::CliResult;
use crate::formats::read_json;

/// Built-in parameter profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Defaults for long real-world daily series.
    #[default]
    Realistic,
    /// Defaults for short synthetic series.
    Synthetic,
}

impl Profile {
    /// Detector defaults for this profile.
    #[must_use]
    pub fn detector(self) -> DetectorConfig {
        match self {
            Profile::Realistic => DetectorConfig::realistic(),
            Profile::Synthetic => DetectorConfig::synthetic(),
        }
    }

    /// Search-space defaults for this profile.
    #[must_use]
    pub fn search(self) -> SearchSpace {
        match self {
            Profile::Realistic => SearchSpace::realistic(),
            Profile::Synthetic => SearchSpace::synthetic(),
        }
    }
}

macro_rules! apply {
    ($overrides:expr, $base:expr, { $($field:ident),* $(,)? }) => {{
        let mut base = $base;
        $(
            if let Some(v) = $overrides.$field.clone() {
                base.$field = v;
            }
        )*
        base
    }};
}

/// Field-by-field overrides of the detector parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorOverrides {
    /// Look-back depth λ.
    pub lookback: Option<usize>,
    /// Window budget ℓ.
    pub window_len: Option<usize>,
    /// Advance step δ.
    pub step: Option<usize>,
    /// Consensus threshold σ.
    pub threshold: Option<f64>,
    /// Tracker ensemble.
    pub trackers: Option<Vec<Tracker>>,
    /// Divergence test ensemble.
    pub tests: Option<Vec<DivergenceTest>>,
    /// Multi-component vote aggregation rule.
    pub component_rule: Option<ComponentRule>,
    /// Capacity of the recurrence behaviour queue; 0 disables recurrence
    /// flagging.
    pub recurrence_queue: Option<usize>,
}

impl DetectorOverrides {
    /// Applies the overrides on top of a base configuration.
    #[must_use]
    pub fn apply(&self, base: DetectorConfig) -> DetectorConfig {
        apply!(self, base, {
            lookback,
            window_len,
            step,
            threshold,
            trackers,
            tests,
            component_rule,
        })
    }
}

/// Field-by-field overrides of the clustering parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterOverrides {
    /// Hyperbox span as a fraction of the scaled feature range.
    pub span_fraction: Option<f64>,
    /// Maximum non-overlapping dimensions still counted as connected.
    pub theta: Option<usize>,
    /// Exponential density forgetting rate.
    pub forgetting_rate: Option<f64>,
    /// Leading intervals that fix the feature scaling.
    pub warmup_intervals: Option<usize>,
}

impl ClusterOverrides {
    /// Applies the overrides on top of a base configuration.
    #[must_use]
    pub fn apply(&self, base: ClusterConfig) -> ClusterConfig {
        apply!(self, base, { span_fraction, theta, forgetting_rate, warmup_intervals })
    }
}

/// Overrides of the daily observation window.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowOverrides {
    /// Seconds from the interval start to the window start.
    pub start_offset: Option<i64>,
    /// Window length in seconds.
    pub length: Option<i64>,
}

impl WindowOverrides {
    /// Applies the overrides on top of a base window.
    #[must_use]
    pub fn apply(&self, base: ObservationWindow) -> ObservationWindow {
        apply!(self, base, { start_offset, length })
    }
}

/// Overrides of the KS baseline parameters.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineOverrides {
    /// Window budget (two half-windows).
    pub window_len: Option<usize>,
    /// Advance step.
    pub step: Option<usize>,
    /// Per-feature rejection level.
    pub alpha: Option<f64>,
}

impl BaselineOverrides {
    /// Applies the overrides on top of a base configuration.
    #[must_use]
    pub fn apply(&self, base: KsWindowConfig) -> KsWindowConfig {
        apply!(self, base, { window_len, step, alpha })
    }
}

/// Overrides of the tuning search space. Ranges are `[lo, hi]` arrays.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOverrides {
    /// Look-back range.
    pub lookback: Option<(usize, usize)>,
    /// Window-budget range.
    pub window_len: Option<(usize, usize)>,
    /// Step range.
    pub step: Option<(usize, usize)>,
    /// Threshold range.
    pub threshold: Option<(f64, f64)>,
    /// Number of sampled trials.
    pub trials: Option<usize>,
}

impl SearchOverrides {
    /// Applies the overrides on top of a base search space.
    #[must_use]
    pub fn apply(&self, base: SearchSpace) -> SearchSpace {
        apply!(self, base, { lookback, window_len, step, threshold, trials })
    }
}

/// Parsed configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Default-selecting profile; the command-line flag wins over it.
    pub profile: Option<Profile>,
    /// Detector overrides.
    #[serde(default)]
    pub detector: DetectorOverrides,
    /// Clustering overrides.
    #[serde(default)]
    pub clustering: ClusterOverrides,
    /// Observation-window overrides.
    #[serde(default)]
    pub window: WindowOverrides,
    /// KS-baseline overrides.
    #[serde(default)]
    pub baseline: BaselineOverrides,
    /// Tuning search-space overrides.
    #[serde(default)]
    pub search: SearchOverrides,
    /// Full custom generation scenario (replaces the built-in presets).
    pub generator: Option<Scenario>,
    /// Partitioning interval in seconds when framing bare event logs.
    pub delta_seconds: Option<i64>,
}

impl FileConfig {
    /// Loads a configuration file, or the empty configuration when no path
    /// is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            Some(p) => read_json("config", p),
            None => Ok(FileConfig::default()),
        }
    }

    /// Resolves the effective profile: flag over file over
    /// [`Profile::Realistic`].
    #[must_use]
    pub fn profile(&self, flag: Option<Profile>) -> Profile {
        flag.or(self.profile).unwrap_or_default()
    }

    /// Resolved detector configuration.
    #[must_use]
    pub fn detector(&self, flag: Option<Profile>) -> DetectorConfig {
        self.detector.apply(self.profile(flag).detector())
    }

    /// Resolved recurrence queue capacity (default 0: disabled).
    #[must_use]
    pub fn recurrence_queue(&self) -> usize {
        self.detector.recurrence_queue.unwrap_or(0)
    }

    /// Resolved clustering configuration.
    #[must_use]
    pub fn clustering(&self) -> ClusterConfig {
        self.clustering.apply(ClusterConfig::default())
    }

    /// Resolved observation window.
    #[must_use]
    pub fn observation_window(&self) -> ObservationWindow {
        self.window.apply(ObservationWindow::default())
    }

    /// Resolved KS-baseline configuration.
    #[must_use]
    pub fn baseline(&self) -> KsWindowConfig {
        self.baseline.apply(KsWindowConfig::default())
    }

    /// Resolved tuning search space.
    #[must_use]
    pub fn search(&self, flag: Option<Profile>) -> SearchSpace {
        self.search.apply(self.profile(flag).search())
    }

    /// Resolved partitioning interval (default one day).
    #[must_use]
    pub fn delta_seconds(&self) -> i64 {
        self.delta_seconds.unwrap_or(86_400)
    }
}
