//! On-disk file formats shared by the commands.
//!
//! All CSVs are UTF-8 with LF line endings and a header row. Floating-point
//! cells are written with the shortest decimal representation that parses
//! back to the identical value, so every CSV reloads losslessly.
//!
//! * event CSV — `kind,begin,end` with epoch-second timestamps;
//! * feature CSV — `interval,z1..z5`, the literal `empty` in every feature
//!   cell marking an interval without observations;
//! * trajectory CSV — `interval,q1..qm`; also exportable as JSON with row
//!   count, dimension, and a clustering-configuration echo;
//! * label CSV — `interval,predicted[,truth]` with 0/1 labels;
//! * trial-log CSV — `trial,lambda,ell,delta,sigma,mean_f1`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use csv::StringRecord;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use driftdetect_core::clustering::{ClusterConfig, Trajectory};
use driftdetect_core::datagen::Scenario;
use driftdetect_core::eval::TrialRecord;
use driftdetect_core::events::{
    DailyFeatureRow, Event, EventSequence, ObservationWindow, Timestamp, FEATURE_DIM,
};

use crate::errors::{CliError, CliResult};

/// Cell literal marking a feature row without observations.
pub const EMPTY_LITERAL: &str = "empty";

// ---------------------------------------------------------------------------
// Low-level helpers
// ---------------------------------------------------------------------------

fn csv_writer(stage: &'static str, path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path)
        .map_err(|e| CliError::runtime(stage, format!("cannot create file: {e}")).with_path(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_reader(stage: &'static str, path: &Path) -> CliResult<csv::Reader<BufReader<File>>> {
    let file = File::open(path)
        .map_err(|e| CliError::runtime(stage, format!("cannot open file: {e}")).with_path(path))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(BufReader::new(file)))
}

fn flush(stage: &'static str, path: &Path, mut w: csv::Writer<BufWriter<File>>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::runtime(stage, format!("write failed: {e}")).with_path(path))
}

fn write_record<I, S>(
    stage: &'static str,
    path: &Path,
    w: &mut csv::Writer<BufWriter<File>>,
    fields: I,
) -> CliResult<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields)
        .map_err(|e| CliError::runtime(stage, format!("write failed: {e}")).with_path(path))
}

fn record_line(record: &StringRecord) -> Option<u64> {
    record.position().map(csv::Position::line)
}

/// Checks the header of a CSV file against the expected column names.
fn check_header(
    stage: &'static str,
    path: &Path,
    reader: &mut csv::Reader<BufReader<File>>,
    expected: &[&str],
) -> CliResult<()> {
    let header = reader.headers().map_err(|e| {
        CliError::validation(stage, format!("cannot read header: {e}")).with_path(path)
    })?;
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(CliError::validation(
            stage,
            format!("header is [{}], expected [{}]", found.join(","), expected.join(",")),
        )
        .with_path(path)
        .with_line(1));
    }
    Ok(())
}

/// Iterates records, surfacing read errors with their line number.
fn records(
    stage: &'static str,
    path: &Path,
    reader: &mut csv::Reader<BufReader<File>>,
) -> CliResult<Vec<StringRecord>> {
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let mut err =
                CliError::validation(stage, format!("malformed record: {e}")).with_path(path);
            if let Some(pos) = e.position() {
                err = err.with_line(pos.line());
            }
            err
        })?;
        out.push(record);
    }
    Ok(out)
}

fn parse_cell<T: FromStr>(
    stage: &'static str,
    path: &Path,
    record: &StringRecord,
    index: usize,
    column: &str,
) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(index).ok_or_else(|| {
        let mut err =
            CliError::validation(stage, format!("missing column `{column}`")).with_path(path);
        if let Some(line) = record_line(record) {
            err = err.with_line(line);
        }
        err
    })?;
    raw.parse::<T>().map_err(|e| {
        let mut err =
            CliError::validation(stage, format!("column `{column}`: cannot parse `{raw}`: {e}"))
                .with_path(path);
        if let Some(line) = record_line(record) {
            err = err.with_line(line);
        }
        err
    })
}

/// Checks that the `interval` column counts 0, 1, 2, … without gaps.
fn check_interval(
    stage: &'static str,
    path: &Path,
    record: &StringRecord,
    expected: usize,
) -> CliResult<()> {
    let found: usize = parse_cell(stage, path, record, 0, "interval")?;
    if found != expected {
        let mut err = CliError::validation(
            stage,
            format!("interval {found} out of order, expected {expected}"),
        )
        .with_path(path);
        if let Some(line) = record_line(record) {
            err = err.with_line(line);
        }
        return Err(err);
    }
    Ok(())
}

/// `f64` cell with the shortest round-tripping decimal form.
fn float_cell(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

/// Writes a value as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(stage: &'static str, path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| CliError::runtime(stage, format!("cannot create file: {e}")).with_path(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::runtime(stage, format!("serialisation failed: {e}")).with_path(path))?;
    w.write_all(b"\n")
        .and_then(|()| w.flush())
        .map_err(|e| CliError::runtime(stage, format!("write failed: {e}")).with_path(path))
}

/// Reads a JSON value, reporting parse failures with their line.
pub fn read_json<T: DeserializeOwned>(stage: &'static str, path: &Path) -> CliResult<T> {
    let file = File::open(path)
        .map_err(|e| CliError::runtime(stage, format!("cannot open file: {e}")).with_path(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
        CliError::validation(stage, format!("invalid JSON: {e}"))
            .with_path(path)
            .with_line(e.line() as u64)
    })
}

// ---------------------------------------------------------------------------
// Event CSV
// ---------------------------------------------------------------------------

/// Writes events as `kind,begin,end`.
pub fn write_events_csv(path: &Path, events: &[Event]) -> CliResult<()> {
    const STAGE: &str = "write-events";
    let mut w = csv_writer(STAGE, path)?;
    write_record(STAGE, path, &mut w, ["kind", "begin", "end"])?;
    for e in events {
        write_record(
            STAGE,
            path,
            &mut w,
            [e.kind.as_str(), &e.begin.to_string(), &e.end.to_string()],
        )?;
    }
    flush(STAGE, path, w)
}

/// Reads a `kind,begin,end` event CSV.
pub fn read_events_csv(path: &Path) -> CliResult<Vec<Event>> {
    const STAGE: &str = "read-events";
    let mut reader = csv_reader(STAGE, path)?;
    check_header(STAGE, path, &mut reader, &["kind", "begin", "end"])?;
    let mut events = Vec::new();
    for record in records(STAGE, path, &mut reader)? {
        let kind = record.get(0).unwrap_or_default().to_string();
        let begin: Timestamp = parse_cell(STAGE, path, &record, 1, "begin")?;
        let end: Timestamp = parse_cell(STAGE, path, &record, 2, "end")?;
        events.push(Event { kind, begin, end });
    }
    Ok(events)
}

// ---------------------------------------------------------------------------
// Sequence framing
// ---------------------------------------------------------------------------

/// Monitoring-span framing needed to rebuild an [`EventSequence`] from a
/// bare event list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceMeta {
    /// Start of the monitored span (interval 0 begins here).
    pub origin: Timestamp,
    /// End of the monitored span.
    pub monitoring_end: Timestamp,
    /// Interval length in seconds.
    pub delta: i64,
}

impl From<&EventSequence> for SequenceMeta {
    fn from(seq: &EventSequence) -> Self {
        Self { origin: seq.origin, monitoring_end: seq.monitoring_end, delta: seq.delta }
    }
}

/// Assembles a validated sequence from events plus explicit or derived
/// framing.
///
/// Without metadata the origin is aligned so the earliest event falls
/// inside observation window 0, and the monitoring end is rounded up to
/// the end of the observation window containing the latest event — the
/// natural framing for data that arrives as a bare event log.
pub fn frame_events(
    events: Vec<Event>,
    meta: Option<&SequenceMeta>,
    delta: i64,
    window: &ObservationWindow,
) -> CliResult<EventSequence> {
    const STAGE: &str = "frame-events";
    let seq = match meta {
        Some(m) => EventSequence {
            events,
            origin: m.origin,
            monitoring_end: m.monitoring_end,
            delta: m.delta,
        },
        None => {
            let first = events.iter().map(|e| e.begin).min().ok_or_else(|| {
                CliError::validation(STAGE, "event list is empty; framing cannot be derived")
            })?;
            let last = events.iter().map(|e| e.end).max().expect("non-empty");
            let origin = (first - window.start_offset).div_euclid(delta) * delta;
            // Smallest window end `origin + j*delta + start + length` at or
            // after the last event.
            let window_end = origin + window.start_offset + window.length;
            let j = (last - window_end).div_euclid(delta)
                + i64::from((last - window_end).rem_euclid(delta) != 0);
            let monitoring_end = window_end + j.max(0) * delta;
            EventSequence { events, origin, monitoring_end, delta }
        }
    };
    seq.validate()
        .map_err(|e| CliError::validation(STAGE, format!("invalid event sequence: {e}")))?;
    Ok(seq)
}

// ---------------------------------------------------------------------------
// Generator echo
// ---------------------------------------------------------------------------

/// JSON echo written next to generated data so downstream commands can
/// reproduce the run and frame the events exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    /// Version of the tool that produced the data.
    pub version: String,
    /// Seed the run was generated under.
    pub seed: u64,
    /// First day of the drift period.
    pub drift_start_day: usize,
    /// Monitoring-span framing of the emitted events.
    pub sequence: SequenceMeta,
    /// The full generation scenario.
    pub scenario: Scenario,
}

/// Reads sequence framing from either a full [`ScenarioEcho`] or a bare
/// [`SequenceMeta`] JSON file.
pub fn read_sequence_meta(path: &Path) -> CliResult<SequenceMeta> {
    const STAGE: &str = "read-meta";
    let value: serde_json::Value = read_json(STAGE, path)?;
    let meta = if value.get("sequence").is_some() {
        value.get("sequence").cloned().expect("checked")
    } else {
        value
    };
    serde_json::from_value(meta).map_err(|e| {
        CliError::validation(STAGE, format!("invalid sequence metadata: {e}")).with_path(path)
    })
}

// ---------------------------------------------------------------------------
// Feature CSV
// ---------------------------------------------------------------------------

fn feature_header() -> Vec<String> {
    let mut h = vec!["interval".to_string()];
    h.extend((1..=FEATURE_DIM).map(|i| format!("z{i}")));
    h
}

/// Writes per-interval feature rows; observation-free intervals carry the
/// [`EMPTY_LITERAL`] in every feature cell.
pub fn write_features_csv(path: &Path, rows: &[DailyFeatureRow]) -> CliResult<()> {
    const STAGE: &str = "write-features";
    let mut w = csv_writer(STAGE, path)?;
    write_record(STAGE, path, &mut w, feature_header())?;
    for row in rows {
        let mut fields = vec![row.interval_index.to_string()];
        match &row.features {
            Some(f) => fields.extend(f.iter().map(|&v| float_cell(v))),
            None => fields.extend(std::iter::repeat_n(EMPTY_LITERAL.to_string(), FEATURE_DIM)),
        }
        write_record(STAGE, path, &mut w, fields)?;
    }
    flush(STAGE, path, w)
}

/// Reads an `interval,z1..z5` feature CSV with `empty` marker rows.
pub fn read_features_csv(path: &Path) -> CliResult<Vec<DailyFeatureRow>> {
    const STAGE: &str = "read-features";
    let mut reader = csv_reader(STAGE, path)?;
    let expected: Vec<String> = feature_header();
    let expected_refs: Vec<&str> = expected.iter().map(String::as_str).collect();
    check_header(STAGE, path, &mut reader, &expected_refs)?;
    let mut rows = Vec::new();
    for record in records(STAGE, path, &mut reader)? {
        check_interval(STAGE, path, &record, rows.len())?;
        let empties =
            (1..=FEATURE_DIM).filter(|&i| record.get(i) == Some(EMPTY_LITERAL)).count();
        let features = match empties {
            0 => {
                let mut f = Vec::with_capacity(FEATURE_DIM);
                for i in 1..=FEATURE_DIM {
                    f.push(parse_cell(STAGE, path, &record, i, &format!("z{i}"))?);
                }
                Some(f)
            }
            n if n == FEATURE_DIM => None,
            _ => {
                let mut err = CliError::validation(
                    STAGE,
                    format!("row mixes `{EMPTY_LITERAL}` markers with values"),
                )
                .with_path(path);
                if let Some(line) = record_line(&record) {
                    err = err.with_line(line);
                }
                return Err(err);
            }
        };
        rows.push(DailyFeatureRow { interval_index: rows.len(), features });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Trajectory CSV / JSON
// ---------------------------------------------------------------------------

fn trajectory_header(dim: usize) -> Vec<String> {
    let mut h = vec!["interval".to_string()];
    h.extend((1..=dim).map(|i| format!("q{i}")));
    h
}

/// Writes trajectory rows as `interval,q1..qm`.
pub fn write_trajectory_csv(path: &Path, rows: &[Vec<f64>]) -> CliResult<()> {
    const STAGE: &str = "write-trajectory";
    let dim = rows.first().map_or(0, Vec::len);
    let mut w = csv_writer(STAGE, path)?;
    write_record(STAGE, path, &mut w, trajectory_header(dim))?;
    for (j, row) in rows.iter().enumerate() {
        let mut fields = vec![j.to_string()];
        fields.extend(row.iter().map(|&v| float_cell(v)));
        write_record(STAGE, path, &mut w, fields)?;
    }
    flush(STAGE, path, w)
}

/// Reads an `interval,q1..qm` trajectory CSV; the dimension comes from the
/// header.
pub fn read_trajectory_csv(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    const STAGE: &str = "read-trajectory";
    let mut reader = csv_reader(STAGE, path)?;
    let header = reader
        .headers()
        .map_err(|e| {
            CliError::validation(STAGE, format!("cannot read header: {e}")).with_path(path)
        })?
        .clone();
    let dim = header.len().saturating_sub(1);
    let expected = trajectory_header(dim);
    let found: Vec<&str> = header.iter().collect();
    if dim == 0 || found != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CliError::validation(
            STAGE,
            format!("header is [{}], expected [interval,q1..qm]", found.join(",")),
        )
        .with_path(path)
        .with_line(1));
    }
    let mut rows = Vec::new();
    for record in records(STAGE, path, &mut reader)? {
        check_interval(STAGE, path, &record, rows.len())?;
        let mut row = Vec::with_capacity(dim);
        for i in 1..=dim {
            row.push(parse_cell(STAGE, path, &record, i, &format!("q{i}"))?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Row-major trajectory JSON with metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryJson {
    /// Version of the tool that produced the file.
    pub version: String,
    /// Number of intervals (rows).
    pub intervals: usize,
    /// Feature dimension (columns).
    pub feature_dim: usize,
    /// Clustering configuration the trajectory was built with.
    pub config: ClusterConfig,
    /// The trajectory rows.
    pub rows: Vec<Vec<f64>>,
}

/// Writes the trajectory JSON flavour.
pub fn write_trajectory_json(
    path: &Path,
    trajectory: &Trajectory,
    config: &ClusterConfig,
) -> CliResult<()> {
    write_json(
        "write-trajectory",
        path,
        &TrajectoryJson {
            version: env!("CARGO_PKG_VERSION").to_string(),
            intervals: trajectory.interval_count(),
            feature_dim: trajectory.feature_dim,
            config: config.clone(),
            rows: trajectory.rows.clone(),
        },
    )
}

// ---------------------------------------------------------------------------
// Label CSV
// ---------------------------------------------------------------------------

/// Writes `interval,predicted[,truth]` labels.
pub fn write_labels_csv(path: &Path, predicted: &[u8], truth: Option<&[u8]>) -> CliResult<()> {
    const STAGE: &str = "write-labels";
    if let Some(t) = truth {
        debug_assert_eq!(t.len(), predicted.len());
    }
    let mut w = csv_writer(STAGE, path)?;
    match truth {
        Some(_) => write_record(STAGE, path, &mut w, ["interval", "predicted", "truth"])?,
        None => write_record(STAGE, path, &mut w, ["interval", "predicted"])?,
    }
    for (j, &p) in predicted.iter().enumerate() {
        let mut fields = vec![j.to_string(), p.to_string()];
        if let Some(t) = truth {
            fields.push(t[j].to_string());
        }
        write_record(STAGE, path, &mut w, fields)?;
    }
    flush(STAGE, path, w)
}

fn parse_label(
    stage: &'static str,
    path: &Path,
    record: &StringRecord,
    index: usize,
    column: &str,
) -> CliResult<u8> {
    let v: u8 = parse_cell(stage, path, record, index, column)?;
    if v > 1 {
        let mut err = CliError::validation(stage, format!("label {v} is not 0 or 1")).with_path(path);
        if let Some(line) = record_line(record) {
            err = err.with_line(line);
        }
        return Err(err);
    }
    Ok(v)
}

/// Reads an `interval,predicted[,truth]` label CSV.
pub fn read_labels_csv(path: &Path) -> CliResult<(Vec<u8>, Option<Vec<u8>>)> {
    const STAGE: &str = "read-labels";
    let mut reader = csv_reader(STAGE, path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| {
            CliError::validation(STAGE, format!("cannot read header: {e}")).with_path(path)
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let with_truth = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["interval", "predicted"] => false,
        ["interval", "predicted", "truth"] => true,
        found => {
            return Err(CliError::validation(
                STAGE,
                format!(
                    "header is [{}], expected [interval,predicted] or [interval,predicted,truth]",
                    found.join(",")
                ),
            )
            .with_path(path)
            .with_line(1));
        }
    };
    let mut predicted = Vec::new();
    let mut truth = Vec::new();
    for record in records(STAGE, path, &mut reader)? {
        check_interval(STAGE, path, &record, predicted.len())?;
        predicted.push(parse_label(STAGE, path, &record, 1, "predicted")?);
        if with_truth {
            truth.push(parse_label(STAGE, path, &record, 2, "truth")?);
        }
    }
    Ok((predicted, with_truth.then_some(truth)))
}

// ---------------------------------------------------------------------------
// Trial-log CSV
// ---------------------------------------------------------------------------

const TRIAL_HEADER: [&str; 6] = ["trial", "lambda", "ell", "delta", "sigma", "mean_f1"];

/// Writes a tuning trial log as `trial,lambda,ell,delta,sigma,mean_f1`.
pub fn write_trials_csv(path: &Path, log: &[TrialRecord]) -> CliResult<()> {
    const STAGE: &str = "write-trials";
    let mut w = csv_writer(STAGE, path)?;
    write_record(STAGE, path, &mut w, TRIAL_HEADER)?;
    for t in log {
        write_record(
            STAGE,
            path,
            &mut w,
            [
                t.trial.to_string(),
                t.lookback.to_string(),
                t.window_len.to_string(),
                t.step.to_string(),
                float_cell(t.threshold),
                float_cell(t.mean_f1),
            ],
        )?;
    }
    flush(STAGE, path, w)
}

/// Reads a trial log back; values round-trip exactly.
pub fn read_trials_csv(path: &Path) -> CliResult<Vec<TrialRecord>> {
    const STAGE: &str = "read-trials";
    let mut reader = csv_reader(STAGE, path)?;
    check_header(STAGE, path, &mut reader, &TRIAL_HEADER)?;
    let mut log = Vec::new();
    for record in records(STAGE, path, &mut reader)? {
        log.push(TrialRecord {
            trial: parse_cell(STAGE, path, &record, 0, "trial")?,
            lookback: parse_cell(STAGE, path, &record, 1, "lambda")?,
            window_len: parse_cell(STAGE, path, &record, 2, "ell")?,
            step: parse_cell(STAGE, path, &record, 3, "delta")?,
            threshold: parse_cell(STAGE, path, &record, 4, "sigma")?,
            mean_f1: parse_cell(STAGE, path, &record, 5, "mean_f1")?,
        });
    }
    Ok(log)
}
