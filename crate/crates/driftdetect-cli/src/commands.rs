//! The `driftdetect` subcommands.
//!
//! Every command is a pure function of its inputs, configuration, and seed:
//! identical invocations produce byte-identical data outputs. (The optional
//! detect run report contains a wall-clock timing field and is the one
//! exception.) Inputs are never modified, and all referenced paths are
//! validated before any work starts.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use driftdetect_core::baselines::{ks_fixed_reference, ks_sliding_windows, random_labels};
use driftdetect_core::clustering::{build_trajectory, FeatureScaler, Trajectory};
use driftdetect_core::datagen::{duration_drift_scenario, interruption_drift_scenario, Scenario};
use driftdetect_core::detector::{run_with_recurrence, DetectorConfig, DriftEvent, IterationTrace};
use driftdetect_core::eval::{evaluate_config, plan_trials, score, MetricReport, TrialRecord};
use driftdetect_core::events::{extract_daily_features, partition_and_split, DailyFeatureRow};

use crate::config::{FileConfig, Profile};
use crate::errors::{CliError, CliResult};
use crate::formats;

/// Behavioural drift detection toolkit: generate nightly event data,
/// extract features, build trajectories, and scan them for drift.
#[derive(Debug, Parser)]
#[command(name = "driftdetect", version, about)]
pub struct Cli {
    /// The subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// All subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic nightly event series with drift ground truth.
    Generate(GenerateArgs),
    /// Extract per-interval feature rows from an event CSV.
    Featurize(FeaturizeArgs),
    /// Summarise feature rows into a per-interval trajectory.
    Trajectory(TrajectoryArgs),
    /// Scan a trajectory for behavioural drift.
    Detect(DetectArgs),
    /// Label a trajectory with a reference detector.
    Baseline(BaselineArgs),
    /// Score predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Random-search detector hyperparameters on a labelled trajectory.
    Tune(TuneArgs),
    /// Export trajectory and normalised feature series for plotting.
    ExportPlotdata(ExportPlotdataArgs),
}

/// Runs one parsed command.
pub fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Generate(a) => cmd_generate(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Trajectory(a) => cmd_trajectory(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Tune(a) => cmd_tune(a),
        Command::ExportPlotdata(a) => cmd_export_plotdata(a),
    }
}

// ---------------------------------------------------------------------------
// Path validation
// ---------------------------------------------------------------------------

const MANIFEST: &str = "manifest";

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::validation(MANIFEST, "input file not found").with_path(path))
    }
}

fn require_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        None => Ok(()),
        Some(p) if p == Path::new("") || p.is_dir() => Ok(()),
        Some(_) => {
            Err(CliError::validation(MANIFEST, "output directory does not exist").with_path(path))
        }
    }
}

fn ensure_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        CliError::runtime(MANIFEST, format!("cannot create output directory: {e}")).with_path(path)
    })
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

/// Built-in generation presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioPreset {
    /// Four-year series whose final 40% perturbs the sleep duration.
    Duration,
    /// Four-year series whose final 40% multiplies the interruptions.
    Interruption,
}

/// Arguments of `generate`.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Output directory; receives events.csv, labels.csv, scenario.json.
    #[arg(long)]
    pub output: PathBuf,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Built-in scenario preset (default: duration). Mutually exclusive
    /// with a `generator` section in the configuration file.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioPreset>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    const STAGE: &str = "generate";
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    let cfg = FileConfig::load(args.config.as_deref())?;
    let scenario: Scenario = match (&cfg.generator, args.scenario) {
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                STAGE,
                "both --scenario and a config `generator` section were given; choose one",
            ));
        }
        (Some(s), None) => s.clone(),
        (None, preset) => match preset.unwrap_or(ScenarioPreset::Duration) {
            ScenarioPreset::Duration => duration_drift_scenario(),
            ScenarioPreset::Interruption => interruption_drift_scenario(),
        },
    };
    let (sequence, truth) = scenario
        .generate(args.seed)
        .map_err(|e| CliError::validation(STAGE, format!("invalid scenario: {e}")))?;
    ensure_dir(&args.output)?;
    formats::write_events_csv(&args.output.join("events.csv"), &sequence.events)?;
    formats::write_labels_csv(&args.output.join("labels.csv"), &truth, None)?;
    formats::write_json(
        STAGE,
        &args.output.join("scenario.json"),
        &formats::ScenarioEcho {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: args.seed,
            drift_start_day: scenario.drift_start_day(),
            sequence: formats::SequenceMeta::from(&sequence),
            scenario,
        },
    )
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

/// Arguments of `featurize`.
#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Event CSV (`kind,begin,end`).
    #[arg(long)]
    pub input: PathBuf,
    /// Monitoring-span metadata JSON (the scenario.json written by
    /// `generate`, or `{"origin":..,"monitoring_end":..,"delta":..}`).
    /// Without it the span is derived from the events themselves.
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Output feature CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn cmd_featurize(args: &FeaturizeArgs) -> CliResult<()> {
    const STAGE: &str = "featurize";
    require_file(&args.input)?;
    if let Some(m) = &args.meta {
        require_file(m)?;
    }
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    require_parent(&args.output)?;
    let cfg = FileConfig::load(args.config.as_deref())?;
    let window = cfg.observation_window();
    let events = formats::read_events_csv(&args.input)?;
    let meta = args.meta.as_deref().map(formats::read_sequence_meta).transpose()?;
    let sequence = formats::frame_events(events, meta.as_ref(), cfg.delta_seconds(), &window)?;
    let intervals = partition_and_split(&sequence)
        .map_err(|e| CliError::validation(STAGE, format!("invalid event sequence: {e}")))?;
    let rows = extract_daily_features(&sequence, &intervals, &window)
        .map_err(|e| CliError::validation(STAGE, format!("feature extraction failed: {e}")))?;
    formats::write_features_csv(&args.output, &rows)
}

// ---------------------------------------------------------------------------
// trajectory
// ---------------------------------------------------------------------------

/// Arguments of `trajectory`.
#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Feature CSV from `featurize`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output trajectory CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the JSON flavour (rows plus metadata) here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn build(rows: &[DailyFeatureRow], cfg: &FileConfig) -> CliResult<Trajectory> {
    build_trajectory(rows, &cfg.clustering())
        .map_err(|e| CliError::validation("trajectory", format!("cannot build trajectory: {e}")))
}

fn cmd_trajectory(args: &TrajectoryArgs) -> CliResult<()> {
    require_file(&args.input)?;
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    require_parent(&args.output)?;
    if let Some(j) = &args.json {
        require_parent(j)?;
    }
    let cfg = FileConfig::load(args.config.as_deref())?;
    let rows = formats::read_features_csv(&args.input)?;
    let trajectory = build(&rows, &cfg)?;
    formats::write_trajectory_csv(&args.output, &trajectory.rows)?;
    if let Some(j) = &args.json {
        formats::write_trajectory_json(j, &trajectory, &cfg.clustering())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

/// Arguments of `detect`.
#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Trajectory CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output label CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Ground-truth label CSV; its `predicted` column is embedded as the
    /// output's `truth` column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Write a JSON run report (config echo, per-iteration vote means,
    /// drift spans, recurrence flags, timing) here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Parameter profile.
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// JSON run report of a detection pass.
#[derive(Debug, Serialize)]
struct RunReport<'a> {
    version: &'static str,
    intervals: usize,
    config: &'a DetectorConfig,
    recurrence_queue: usize,
    /// Wall-clock detection time; the one non-deterministic output field.
    elapsed_ms: f64,
    drifts: &'a [DriftEvent],
    iterations: &'a [IterationTrace],
}

fn read_truth(path: &Path, intervals: usize) -> CliResult<Vec<u8>> {
    let (truth, _) = formats::read_labels_csv(path)?;
    if truth.len() != intervals {
        return Err(CliError::validation(
            "detect",
            format!("truth has {} labels but the trajectory has {intervals} rows", truth.len()),
        )
        .with_path(path));
    }
    Ok(truth)
}

fn cmd_detect(args: &DetectArgs) -> CliResult<()> {
    const STAGE: &str = "detect";
    require_file(&args.input)?;
    if let Some(t) = &args.truth {
        require_file(t)?;
    }
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    require_parent(&args.output)?;
    if let Some(r) = &args.report {
        require_parent(r)?;
    }
    let cfg = FileConfig::load(args.config.as_deref())?;
    let detector = cfg.detector(args.profile);
    let queue = cfg.recurrence_queue();
    let rows = formats::read_trajectory_csv(&args.input)?;
    let truth = args.truth.as_deref().map(|t| read_truth(t, rows.len())).transpose()?;
    let started = Instant::now();
    let report = run_with_recurrence(&rows, &detector, queue)
        .map_err(|e| CliError::validation(STAGE, format!("detection failed: {e}")))?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
    formats::write_labels_csv(&args.output, &report.labels.predicted, truth.as_deref())?;
    if let Some(path) = &args.report {
        formats::write_json(
            STAGE,
            path,
            &RunReport {
                version: env!("CARGO_PKG_VERSION"),
                intervals: rows.len(),
                config: &detector,
                recurrence_queue: queue,
                elapsed_ms,
                drifts: &report.drifts,
                iterations: &report.iterations,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// baseline
// ---------------------------------------------------------------------------

/// Reference detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    /// Two adjacent sliding half-windows compared by per-feature KS tests.
    KsSliding,
    /// Sliding half-window against a fixed head-of-series reference.
    KsFixed,
    /// Seeded coin-flip labelling (chance floor).
    Random,
}

/// Arguments of `baseline`.
#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Trajectory CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output label CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Reference detector to run.
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    /// RNG seed (used by the random method).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn cmd_baseline(args: &BaselineArgs) -> CliResult<()> {
    const STAGE: &str = "baseline";
    require_file(&args.input)?;
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    require_parent(&args.output)?;
    let cfg = FileConfig::load(args.config.as_deref())?;
    let rows = formats::read_trajectory_csv(&args.input)?;
    let labels = match args.method {
        BaselineMethod::KsSliding => ks_sliding_windows(&rows, &cfg.baseline()),
        BaselineMethod::KsFixed => ks_fixed_reference(&rows, &cfg.baseline()),
        BaselineMethod::Random => Ok(random_labels(rows.len(), args.seed)),
    }
    .map_err(|e| CliError::validation(STAGE, format!("baseline failed: {e}")))?;
    formats::write_labels_csv(&args.output, &labels.predicted, None)
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Arguments of `evaluate`.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted label CSV; an embedded `truth` column is used when
    /// present.
    #[arg(long)]
    pub input: PathBuf,
    /// Separate ground-truth label CSV (its `predicted` column holds the
    /// truth); required when the input has no `truth` column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output metrics JSON.
    #[arg(long)]
    pub output: PathBuf,
}

/// JSON metrics report.
#[derive(Debug, Serialize)]
struct EvaluationReport<'a> {
    version: &'static str,
    intervals: usize,
    metrics: &'a MetricReport,
}

fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    const STAGE: &str = "evaluate";
    require_file(&args.input)?;
    if let Some(t) = &args.truth {
        require_file(t)?;
    }
    require_parent(&args.output)?;
    let (predicted, embedded) = formats::read_labels_csv(&args.input)?;
    let truth = match (embedded, &args.truth) {
        (Some(t), None) => t,
        (None, Some(path)) => formats::read_labels_csv(path)?.0,
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                STAGE,
                "the input embeds a truth column and --truth was also given; choose one",
            ));
        }
        (None, None) => {
            return Err(CliError::validation(
                STAGE,
                "no ground truth: the input has no truth column and --truth was not given",
            ));
        }
    };
    let metrics = score(&predicted, &truth)
        .map_err(|e| CliError::validation(STAGE, format!("scoring failed: {e}")))?;
    formats::write_json(
        STAGE,
        &args.output,
        &EvaluationReport {
            version: env!("CARGO_PKG_VERSION"),
            intervals: predicted.len(),
            metrics: &metrics,
        },
    )
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

/// Arguments of `tune`.
#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Trajectory CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Ground-truth label CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Output trial-log CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Write the best configuration as JSON here.
    #[arg(long)]
    pub best: Option<PathBuf>,
    /// RNG seed for the configuration sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trial evaluation.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Parameter profile (sets the search space and the trial-0 defaults).
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// JSON summary of the best tuning trial.
#[derive(Debug, Serialize)]
struct BestTrial<'a> {
    version: &'static str,
    best_trial: usize,
    best_mean_f1: f64,
    config: &'a DetectorConfig,
}

fn cmd_tune(args: &TuneArgs) -> CliResult<()> {
    const STAGE: &str = "tune";
    require_file(&args.input)?;
    require_file(&args.truth)?;
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    require_parent(&args.output)?;
    if let Some(b) = &args.best {
        require_parent(b)?;
    }
    let cfg = FileConfig::load(args.config.as_deref())?;
    let space = cfg.search(args.profile);
    let defaults = cfg.detector(args.profile);
    let rows = formats::read_trajectory_csv(&args.input)?;
    let truth = read_truth(&args.truth, rows.len())?;
    let bundle = vec![(rows, truth)];

    // Trials are planned up front and evaluated by index, so the log (and
    // therefore the output bytes) is identical for any worker count.
    let plans = plan_trials(&space, Some(&defaults), args.seed)
        .map_err(|e| CliError::validation(STAGE, format!("invalid search space: {e}")))?;
    let jobs = args.jobs.clamp(1, plans.len());
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<f64, _>>> = Vec::new();
    slots.resize_with(plans.len(), || None);
    std::thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= plans.len() {
                            return out;
                        }
                        out.push((i, evaluate_config(&bundle, &plans[i].config)));
                    }
                })
            })
            .collect();
        for worker in workers {
            for (i, result) in worker.join().expect("tuning worker panicked") {
                slots[i] = Some(result);
            }
        }
    });

    let mut log = Vec::with_capacity(plans.len());
    for (plan, slot) in plans.iter().zip(slots) {
        let mean_f1 = slot
            .expect("every planned trial was evaluated")
            .map_err(|e| CliError::validation(STAGE, format!("trial {} failed: {e}", plan.trial)))?;
        log.push(TrialRecord {
            trial: plan.trial,
            lookback: plan.config.lookback,
            window_len: plan.config.window_len,
            step: plan.config.step,
            threshold: plan.config.threshold,
            mean_f1,
        });
    }
    formats::write_trials_csv(&args.output, &log)?;

    if let Some(path) = &args.best {
        let best = log
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| {
                // Strict comparison with ties toward the lowest index.
                a.mean_f1.partial_cmp(&b.mean_f1).expect("finite F1").then(ib.cmp(ia))
            })
            .expect("at least one trial")
            .0;
        formats::write_json(
            STAGE,
            path,
            &BestTrial {
                version: env!("CARGO_PKG_VERSION"),
                best_trial: log[best].trial,
                best_mean_f1: log[best].mean_f1,
                config: &plans[best].config,
            },
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// export-plotdata
// ---------------------------------------------------------------------------

/// Arguments of `export-plotdata`.
#[derive(Debug, Args)]
pub struct ExportPlotdataArgs {
    /// Feature CSV from `featurize`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory; receives trajectory.csv and normalized.csv.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn cmd_export_plotdata(args: &ExportPlotdataArgs) -> CliResult<()> {
    const STAGE: &str = "export-plotdata";
    require_file(&args.input)?;
    if let Some(c) = &args.config {
        require_file(c)?;
    }
    let cfg = FileConfig::load(args.config.as_deref())?;
    let rows = formats::read_features_csv(&args.input)?;
    let trajectory = build(&rows, &cfg)?;
    // The same warm-up scaling the trajectory builder uses, applied to the
    // raw rows: the per-feature normalised series with gaps kept visible.
    let clustering = cfg.clustering();
    let warmup = rows.len().min(clustering.warmup_intervals);
    let scaler = FeatureScaler::fit(rows[..warmup].iter().filter_map(|r| r.features.as_deref()))
        .or_else(|| FeatureScaler::fit(rows.iter().filter_map(|r| r.features.as_deref())))
        .ok_or_else(|| CliError::validation(STAGE, "no non-empty feature rows"))?;
    let normalized: Vec<DailyFeatureRow> = rows
        .iter()
        .map(|r| DailyFeatureRow {
            interval_index: r.interval_index,
            features: r.features.as_ref().map(|f| scaler.apply(f)),
        })
        .collect();
    ensure_dir(&args.output)?;
    formats::write_trajectory_csv(&args.output.join("trajectory.csv"), &trajectory.rows)?;
    formats::write_features_csv(&args.output.join("normalized.csv"), &normalized)
}
