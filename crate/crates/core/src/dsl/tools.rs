//! The pure tools over frame indices. Frame `i` covers `[i/r, (i+1)/r)`.

use crate::domain::{SegmentSet, TimeRange, VideoMeta};
use crate::error::{Error, Result};

/// Absorbs rounding in `t * r` so that `i / r` maps back to `i`.
pub const FRAME_EPS: f64 = 1e-9;
pub const WINDOW_BEFORE: u64 = 30;
pub const WINDOW_AFTER: u64 = 29;

fn last_frame(meta: &VideoMeta) -> u64 {
    meta.total_frames.saturating_sub(1)
}

/// `floor(t * r)` clamped to `[0, total_frames)`.
pub fn timestamp_to_single_index(meta: &VideoMeta, t: f64) -> u64 {
    let f = (t * meta.frame_rate + FRAME_EPS).floor();
    if f <= 0.0 {
        0
    } else {
        (f as u64).min(last_frame(meta))
    }
}

/// `[c - 30, c + 29]` around `c = timestamp_to_single_index(t)`, clamped.
pub fn single_timestamp_to_index_range(meta: &VideoMeta, t: f64) -> Vec<u64> {
    let c = timestamp_to_single_index(meta, t);
    let lo = c.saturating_sub(WINDOW_BEFORE);
    let hi = (c + WINDOW_AFTER).min(last_frame(meta));
    (lo..=hi).collect()
}

/// `[floor(s r), floor(e r)]` inclusive, clamped.
pub fn range_timestamp_to_index_range(meta: &VideoMeta, s: f64, e: f64) -> Result<Vec<u64>> {
    if s > e {
        return Err(Error::validation(format!("range_timestamp_to_index_range: start {s} is after end {e}")));
    }
    let (a, b) = (timestamp_to_single_index(meta, s), timestamp_to_single_index(meta, e));
    Ok((a..=b).collect())
}

pub fn normalize(xs: &[u64]) -> Vec<u64> {
    let mut v = xs.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Both inputs sorted and duplicate-free.
pub fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Both inputs sorted and duplicate-free.
pub fn union(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j, mut out) = (0, 0, Vec::with_capacity(a.len() + b.len()));
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) | (None, Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// Every integer from the smallest to the largest index of either list.
pub fn concat_and_fill(a: &[u64], b: &[u64]) -> Vec<u64> {
    let lo = a.iter().chain(b).min();
    let hi = a.iter().chain(b).max();
    match (lo, hi) {
        (Some(&lo), Some(&hi)) => (lo..=hi).collect(),
        _ => Vec::new(),
    }
}

/// Order-preserving, duplicates kept.
pub fn concat(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().chain(b).copied().collect()
}

/// Maximal runs `i..=j` of consecutive indices become `[i/r, (j+1)/r]`,
/// clamped to the video.
pub fn indices_to_segments(meta: &VideoMeta, sorted: &[u64]) -> SegmentSet {
    let r = meta.frame_rate;
    let mut ranges = Vec::new();
    let mut iter = sorted.iter().copied().peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end += 1;
            iter.next();
        }
        if let Ok(tr) = TimeRange::new(start as f64 / r, (end + 1) as f64 / r) {
            ranges.push(tr);
        }
    }
    SegmentSet::normalize(ranges).clamp_to(meta.duration)
}
