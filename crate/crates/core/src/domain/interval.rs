//! Time intervals on a single video timeline.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Endpoints closer than this are treated as equal (seconds).
pub const TIME_EPS: f64 = 1e-9;

/// Half-open span `[start, end)` in seconds with `0 <= start < end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct TimeRange {
    start: f64,
    end: f64,
}

impl TimeRange {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::validation(format!(
                "range [{start}, {end}] has a non-finite bound"
            )));
        }
        if start < 0.0 {
            return Err(Error::validation(format!(
                "range [{start}, {end}] starts before 0"
            )));
        }
        if start >= end {
            return Err(Error::validation(format!(
                "range [{start}, {end}] is empty or inverted"
            )));
        }
        Ok(TimeRange { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start - TIME_EPS && t <= self.end + TIME_EPS
    }
}

impl TryFrom<[f64; 2]> for TimeRange {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        TimeRange::new(v[0], v[1])
    }
}

impl From<TimeRange> for [f64; 2] {
    fn from(r: TimeRange) -> Self {
        [r.start, r.end]
    }
}

impl fmt::Display for TimeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

/// Sorted, pairwise-disjoint, non-touching ranges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<TimeRange>", into = "Vec<TimeRange>")]
pub struct SegmentSet {
    segments: Vec<TimeRange>,
}

impl SegmentSet {
    pub fn empty() -> Self {
        SegmentSet::default()
    }

    /// The whole timeline `[0, duration]`.
    pub fn full(duration: f64) -> Result<Self> {
        Ok(SegmentSet {
            segments: vec![TimeRange::new(0.0, duration)?],
        })
    }

    /// Sorts the ranges and fuses any that overlap or touch.
    pub fn normalize(ranges: impl IntoIterator<Item = TimeRange>) -> Self {
        let mut ranges: Vec<TimeRange> = ranges.into_iter().collect();
        ranges.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut out: Vec<TimeRange> = Vec::with_capacity(ranges.len());
        for r in ranges {
            match out.last_mut() {
                Some(last) if r.start <= last.end + TIME_EPS => {
                    if r.end > last.end {
                        last.end = r.end;
                    }
                }
                _ => out.push(r),
            }
        }
        SegmentSet { segments: out }
    }

    /// Validates raw `(start, end)` pairs, then normalizes them.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let ranges = pairs
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| {
                TimeRange::new(s, e).map_err(|err| match err {
                    Error::Validation(msg) => Error::Validation(format!("range #{i}: {msg}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SegmentSet::normalize(ranges))
    }

    pub fn segments(&self) -> &[TimeRange] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(TimeRange::duration).sum()
    }

    pub fn intersect(&self, other: &SegmentSet) -> SegmentSet {
        let (a, b) = (&self.segments, &other.segments);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].start.max(b[j].start);
            let hi = a[i].end.min(b[j].end);
            if hi - lo > TIME_EPS {
                out.push(TimeRange { start: lo, end: hi });
            }
            if a[i].end < b[j].end {
                i += 1;
            } else {
                j += 1;
            }
        }
        SegmentSet::normalize(out)
    }

    pub fn union(&self, other: &SegmentSet) -> SegmentSet {
        SegmentSet::normalize(self.segments.iter().chain(&other.segments).copied())
    }

    /// Restricts the set to `[0, duration]`.
    pub fn clamp_to(&self, duration: f64) -> SegmentSet {
        match TimeRange::new(0.0, duration) {
            Ok(extent) => self.intersect(&SegmentSet {
                segments: vec![extent],
            }),
            Err(_) => SegmentSet::empty(),
        }
    }

    pub fn is_subset_of(&self, other: &SegmentSet) -> bool {
        self.intersect(other).total_duration() >= self.total_duration() - TIME_EPS
    }

    pub fn within(&self, duration: f64) -> bool {
        self.segments
            .last()
            .map_or(true, |last| last.end <= duration + TIME_EPS)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.segments.iter().any(|r| r.contains(t))
    }

    pub fn bounds(&self) -> Option<TimeRange> {
        match (self.segments.first(), self.segments.last()) {
            (Some(first), Some(last)) => Some(TimeRange {
                start: first.start,
                end: last.end,
            }),
            _ => None,
        }
    }

    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.segments.iter().map(|r| (r.start, r.end)).collect()
    }
}

impl From<Vec<TimeRange>> for SegmentSet {
    fn from(v: Vec<TimeRange>) -> Self {
        SegmentSet::normalize(v)
    }
}

impl From<SegmentSet> for Vec<TimeRange> {
    fn from(s: SegmentSet) -> Self {
        s.segments
    }
}

impl From<TimeRange> for SegmentSet {
    fn from(r: TimeRange) -> Self {
        SegmentSet { segments: vec![r] }
    }
}

impl fmt::Display for SegmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, r) in self.segments.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "]")
    }
}
