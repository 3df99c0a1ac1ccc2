use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::domain::{TimeRange, VideoMeta};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StepAnnotation {
    pub segment: TimeRange,
    pub sentence: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VideoAnnotations {
    pub meta: VideoMeta,
    /// Sorted by start time (stable).
    pub steps: Vec<StepAnnotation>,
    /// True when the file listed the steps out of start-time order.
    pub reordered: bool,
}

#[derive(Deserialize)]
struct RawVideo {
    duration: f64,
    #[serde(default)]
    fps: Option<f64>,
    #[serde(default)]
    vid_fname: Option<String>,
    #[serde(default)]
    annotations: Vec<Value>,
}

#[derive(Deserialize)]
struct RawStep {
    segment: [f64; 2],
    sentence: String,
}

/// Parses a step-annotation file: either `{"database": {vid: ...}}` or a
/// direct map of video name to `{duration, fps?, vid_fname?, annotations}`.
///
/// Every malformed record is reported, not just the first. Videos without
/// `fps` use `default_fps`, and are errors when that is `None` too.
pub fn parse_annotations(json: &str, default_fps: Option<f64>) -> Result<Vec<VideoAnnotations>> {
    let root: Value = serde_json::from_str(json).map_err(|e| Error::validation(format!("annotation file: {e}")))?;
    let db = match root.get("database") {
        Some(db) => db,
        None => &root,
    };
    let map = db
        .as_object()
        .ok_or_else(|| Error::validation("annotation file: expected an object of videos"))?;
    let mut problems = Vec::new();
    let mut out = Vec::new();
    let sorted: BTreeMap<&String, &Value> = map.iter().collect();
    for (vid, raw) in sorted {
        let rv: RawVideo = match serde_json::from_value(raw.clone()) {
            Ok(v) => v,
            Err(e) => {
                problems.push(format!("{vid}: {e}"));
                continue;
            }
        };
        let Some(fps) = rv.fps.or(default_fps) else {
            problems.push(format!("{vid}: frame rate missing (no fps and no default)"));
            continue;
        };
        let mut meta = match VideoMeta::derived(vid, rv.duration, fps) {
            Ok(m) => m,
            Err(e) => {
                problems.push(format!("{vid}: {e}"));
                continue;
            }
        };
        if let Some(f) = rv.vid_fname {
            meta.vid_fname = f;
        }
        let mut steps = Vec::new();
        for (i, a) in rv.annotations.iter().enumerate() {
            let step = serde_json::from_value::<RawStep>(a.clone())
                .map_err(|e| e.to_string())
                .and_then(|s| {
                    let seg = TimeRange::new(s.segment[0], s.segment[1]).map_err(|e| e.to_string())?;
                    if seg.end() > meta.duration + 1e-6 {
                        return Err(format!("segment {seg} ends after the video ({})", meta.duration));
                    }
                    let sentence = s.sentence.trim().to_string();
                    if sentence.is_empty() {
                        return Err("empty sentence".into());
                    }
                    Ok(StepAnnotation { segment: seg, sentence })
                });
            match step {
                Ok(s) => steps.push(s),
                Err(e) => problems.push(format!("{vid}: annotation #{i}: {e}")),
            }
        }
        let reordered = steps.windows(2).any(|w| w[1].segment.start() < w[0].segment.start());
        steps.sort_by(|a, b| a.segment.start().total_cmp(&b.segment.start()));
        out.push(VideoAnnotations { meta, steps, reordered });
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(Error::validation(format!(
            "{} malformed annotation record(s):\n  {}",
            problems.len(),
            problems.join("\n  ")
        )))
    }
}

pub fn load_annotations(path: &Path, default_fps: Option<f64>) -> Result<Vec<VideoAnnotations>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    parse_annotations(&text, default_fps)
}
