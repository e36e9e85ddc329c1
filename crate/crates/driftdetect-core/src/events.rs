//! Event sequences: validation, interval partitioning with boundary
//! splitting, and per-window feature extraction.
//!
//! A monitored signal arrives as an ordered list of non-overlapping
//! [`Event`]s. The sequence is cut into fixed-length intervals (one per day
//! in the nightly-rest profile); events straddling an interval boundary are
//! split into contiguous fragments so every fragment lies in exactly one
//! interval. Feature extraction then looks at one observation window per
//! interval (21:00 to 12:00 next day by default) and summarises it as a
//! five-dimensional row.

use alloc::string::String;
use alloc::vec::Vec;

/// Seconds since the epoch (or any fixed origin the caller prefers).
pub type Timestamp = i64;

/// Errors raised while validating or transforming event sequences.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    /// The interval length must be a positive number of seconds.
    #[error("interval length must be positive, got {0}")]
    InvalidDelta(i64),
    /// `monitoring_end` does not lie after `origin`.
    #[error("monitoring end {end} must lie after origin {origin}")]
    InvalidSpan {
        /// Start of the monitored span.
        origin: Timestamp,
        /// End of the monitored span.
        end: Timestamp,
    },
    /// An event's begin timestamp is not strictly before its end.
    #[error("event {index} has begin {begin} >= end {end}")]
    EmptyEvent {
        /// Position of the offending event in the sequence.
        index: usize,
        /// Begin timestamp of the offending event.
        begin: Timestamp,
        /// End timestamp of the offending event.
        end: Timestamp,
    },
    /// Events are not sorted ascending by begin timestamp.
    #[error("event {second} begins before event {first}; events must be sorted by begin")]
    UnorderedEvents {
        /// Index of the earlier-positioned event.
        first: usize,
        /// Index of the event that breaks the ordering.
        second: usize,
    },
    /// Two events overlap in time.
    #[error("events {first} and {second} overlap in time")]
    OverlappingEvents {
        /// Index of the first event of the offending pair.
        first: usize,
        /// Index of the second event of the offending pair.
        second: usize,
    },
    /// An event lies outside the monitored span.
    #[error("event {index} lies outside the monitored span [{origin}, {end}]")]
    OutOfSpan {
        /// Position of the offending event.
        index: usize,
        /// Start of the monitored span.
        origin: Timestamp,
        /// End of the monitored span.
        end: Timestamp,
    },
    /// The observation window does not fit the interval length.
    #[error("observation window (offset {offset}, length {length}) invalid for interval length {delta}")]
    InvalidWindow {
        /// Offset of the window from the interval start.
        offset: i64,
        /// Length of the window.
        length: i64,
        /// Interval length the window was checked against.
        delta: i64,
    },
}

/// One timestamped behaviour occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    /// Event-type identifier (e.g. `"sleep"`).
    pub kind: String,
    /// Begin timestamp, inclusive.
    pub begin: Timestamp,
    /// End timestamp, exclusive; always greater than `begin`.
    pub end: Timestamp,
}

impl Event {
    /// Creates an event; the begin/end order is checked by
    /// [`EventSequence::validate`], not here.
    #[must_use]
    pub fn new(kind: impl Into<String>, begin: Timestamp, end: Timestamp) -> Self {
        Self { kind: kind.into(), begin, end }
    }

    /// Covered duration in seconds.
    #[must_use]
    pub fn duration(&self) -> i64 {
        self.end - self.begin
    }
}

/// An ordered, non-overlapping event list together with the monitored span
/// and the interval length used for partitioning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSequence {
    /// Events sorted ascending by begin, pairwise non-overlapping.
    pub events: Vec<Event>,
    /// Start of the monitored span; interval 0 begins here. Keeping this
    /// explicit lets callers use raw epoch seconds without materialising
    /// decades of empty intervals.
    pub origin: Timestamp,
    /// End of the monitored span; every event ends at or before it.
    pub monitoring_end: Timestamp,
    /// Interval length in seconds (86 400 for daily partitioning).
    pub delta: i64,
}

impl EventSequence {
    /// Number of partitioning intervals covering the monitored span.
    #[must_use]
    pub fn interval_count(&self) -> usize {
        div_ceil(self.monitoring_end - self.origin, self.delta).max(0) as usize
    }

    /// Checks all sequence invariants and reports the first violation.
    pub fn validate(&self) -> Result<(), EventError> {
        if self.delta <= 0 {
            return Err(EventError::InvalidDelta(self.delta));
        }
        if self.monitoring_end <= self.origin {
            return Err(EventError::InvalidSpan { origin: self.origin, end: self.monitoring_end });
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.begin >= e.end {
                return Err(EventError::EmptyEvent { index: i, begin: e.begin, end: e.end });
            }
            if e.begin < self.origin || e.end > self.monitoring_end {
                return Err(EventError::OutOfSpan {
                    index: i,
                    origin: self.origin,
                    end: self.monitoring_end,
                });
            }
        }
        for i in 1..self.events.len() {
            let (prev, curr) = (&self.events[i - 1], &self.events[i]);
            if curr.begin < prev.begin {
                return Err(EventError::UnorderedEvents { first: i - 1, second: i });
            }
            if curr.begin < prev.end {
                return Err(EventError::OverlappingEvents { first: i - 1, second: i });
            }
        }
        Ok(())
    }
}

/// The daily observation window applied before feature extraction,
/// expressed relative to each interval's start.
///
/// The default watches 21:00 of each day through 12:00 of the next: late
/// bedtimes and post-midnight wake-ups land in one window, so pre- and
/// post-midnight onsets are monotone on a single axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationWindow {
    /// Seconds from the interval start to the window start.
    pub start_offset: i64,
    /// Window length in seconds; at most one interval so windows never
    /// overlap each other.
    pub length: i64,
}

impl Default for ObservationWindow {
    fn default() -> Self {
        // 21:00 -> 12:00 next day.
        Self { start_offset: 75_600, length: 54_000 }
    }
}

impl ObservationWindow {
    /// A window covering each interval exactly, for signals without a
    /// natural nightly frame.
    #[must_use]
    pub fn full_interval(delta: i64) -> Self {
        Self { start_offset: 0, length: delta }
    }

    /// Checks the window against the interval length.
    pub fn validate(&self, delta: i64) -> Result<(), EventError> {
        if self.start_offset < 0 || self.start_offset >= delta || self.length <= 0 || self.length > delta
        {
            return Err(EventError::InvalidWindow {
                offset: self.start_offset,
                length: self.length,
                delta,
            });
        }
        Ok(())
    }
}

/// Index of the feature carrying the first event onset (seconds from window
/// start).
pub const FEATURE_FIRST_ONSET: usize = 0;
/// Index of the feature carrying the last event offset (seconds from window
/// start).
pub const FEATURE_LAST_OFFSET: usize = 1;
/// Index of the feature carrying the summed event duration in seconds.
pub const FEATURE_ACTIVE_SECONDS: usize = 2;
/// Index of the feature carrying the event count.
pub const FEATURE_EVENT_COUNT: usize = 3;
/// Index of the feature carrying the summed gap duration in seconds.
pub const FEATURE_GAP_SECONDS: usize = 4;
/// Dimensionality of the extracted feature rows.
pub const FEATURE_DIM: usize = 5;

/// Per-interval extracted feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyFeatureRow {
    /// 0-based interval (observation window) index.
    pub interval_index: usize,
    /// Feature values, or `None` for an interval in which nothing was
    /// observed. The explicit marker keeps event-free days from being
    /// mistaken for days of zero-length activity.
    pub features: Option<Vec<f64>>,
}

impl DailyFeatureRow {
    /// True when the interval contained no observed events.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.features.is_none()
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    // Division rounding towards positive infinity, for positive b.
    let d = a.div_euclid(b);
    if a.rem_euclid(b) != 0 {
        d + 1
    } else {
        d
    }
}

/// Cuts a sequence into its intervals, splitting boundary-straddling events
/// into contiguous fragments.
///
/// Fragment ends coincide with the boundary instant, so the total covered
/// duration of every event kind is conserved to the second. The output
/// always has exactly [`EventSequence::interval_count`] entries; intervals
/// without events yield empty lists.
pub fn partition_and_split(seq: &EventSequence) -> Result<Vec<Vec<Event>>, EventError> {
    seq.validate()?;
    let n = seq.interval_count();
    let mut out: Vec<Vec<Event>> = Vec::with_capacity(n);
    out.resize_with(n, Vec::new);
    for e in &seq.events {
        let mut begin = e.begin;
        while begin < e.end {
            let interval = ((begin - seq.origin) / seq.delta) as usize;
            let boundary = seq.origin + (interval as i64 + 1) * seq.delta;
            let end = e.end.min(boundary);
            out[interval].push(Event::new(e.kind.clone(), begin, end));
            begin = end;
        }
    }
    Ok(out)
}

/// Undoes boundary splitting: fragments of one original event touch at an
/// interval boundary and are glued back together.
fn merge_boundary_fragments(
    interval_events: &[Vec<Event>],
    origin: Timestamp,
    delta: i64,
) -> Vec<Event> {
    let mut merged: Vec<Event> = Vec::new();
    for e in interval_events.iter().flatten() {
        if let Some(last) = merged.last_mut() {
            let at_boundary = (e.begin - origin).rem_euclid(delta) == 0;
            if last.end == e.begin && at_boundary && last.kind == e.kind {
                last.end = e.end;
                continue;
            }
        }
        merged.push(e.clone());
    }
    merged
}

/// Extracts one feature row per observation window from partitioned events.
///
/// Boundary fragments are first glued back together so a sleep episode that
/// crosses midnight counts as a single event. Events are then clipped to
/// their window; events wholly outside every window (e.g. afternoon
/// activity under the nightly default) are ignored. Windows with no events
/// produce the explicit empty-interval marker.
///
/// The number of rows equals the number of windows that start inside the
/// monitored span, which matches the interval count whenever the span ends
/// on an interval boundary.
pub fn extract_daily_features(
    seq: &EventSequence,
    interval_events: &[Vec<Event>],
    window: &ObservationWindow,
) -> Result<Vec<DailyFeatureRow>, EventError> {
    window.validate(seq.delta)?;
    let merged = merge_boundary_fragments(interval_events, seq.origin, seq.delta);
    let span = seq.monitoring_end - seq.origin;
    let n_windows = div_ceil(span - window.start_offset, seq.delta).max(0) as usize;

    let mut rows = Vec::with_capacity(n_windows);
    let mut cursor = 0usize; // first event that may still overlap the current window
    for j in 0..n_windows {
        let w_start = seq.origin + j as i64 * seq.delta + window.start_offset;
        let w_end = w_start + window.length;
        while cursor < merged.len() && merged[cursor].end <= w_start {
            cursor += 1;
        }
        let mut first_begin: Option<i64> = None;
        let mut last_end = 0i64;
        let mut active = 0i64;
        let mut gaps = 0i64;
        let mut count = 0usize;
        let mut prev_end: Option<i64> = None;
        for e in merged[cursor..].iter() {
            if e.begin >= w_end {
                break;
            }
            if e.end <= w_start {
                continue;
            }
            let b = e.begin.max(w_start) - w_start;
            let f = e.end.min(w_end) - w_start;
            if first_begin.is_none() {
                first_begin = Some(b);
            }
            if let Some(pe) = prev_end {
                gaps += b - pe;
            }
            active += f - b;
            last_end = f;
            count += 1;
            prev_end = Some(f);
        }
        let features = first_begin.map(|fb| {
            let mut v = Vec::with_capacity(FEATURE_DIM);
            v.push(fb as f64);
            v.push(last_end as f64);
            v.push(active as f64);
            v.push(count as f64);
            v.push(gaps as f64);
            v
        });
        rows.push(DailyFeatureRow { interval_index: j, features });
    }
    Ok(rows)
}
