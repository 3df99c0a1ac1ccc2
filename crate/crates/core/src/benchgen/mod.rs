//! Benchmark synthesis from step annotations: connectivity grouping,
//! triplets, nine question templates per triplet and stratified splits.

mod annotations;
mod connect;
mod items;
mod split;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use annotations::{load_annotations, parse_annotations, StepAnnotation, VideoAnnotations};
pub use connect::{connectable, extract_triplets, group_annotations, is_gap_case, overlap_ratio, DEFAULT_THETA};
pub use items::{instantiate, question_text, QAItem, Split, GT_REWRITTEN_QUERY};
pub use split::{split_counts, split_dataset};

use crate::domain::QaType;
use crate::error::Result;
use crate::exec::ExecMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchgenConfig {
    pub theta: f64,
    pub seed: u64,
    /// Frame rate for videos whose annotations carry none.
    pub default_fps: Option<f64>,
}

impl Default for BenchgenConfig {
    fn default() -> Self {
        BenchgenConfig { theta: DEFAULT_THETA, seed: 0, default_fps: None }
    }
}

/// Two neighbouring group members that were joined across a gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCase {
    pub vid_name: String,
    pub group: usize,
    pub steps: [usize; 2],
    pub gap: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub theta: f64,
    pub seed: u64,
    pub videos: usize,
    pub steps: usize,
    pub groups: usize,
    pub triplets: usize,
    pub items: usize,
    pub items_per_type: BTreeMap<String, usize>,
    pub split_totals: BTreeMap<String, usize>,
    pub gap_cases: Vec<GapCase>,
    pub reordered_videos: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub items: Vec<QAItem>,
    pub report: BuildReport,
}

struct VideoOutput {
    groups: usize,
    triplets: usize,
    items: Vec<QAItem>,
    gaps: Vec<GapCase>,
}

fn process_video(v: &VideoAnnotations, theta: f64) -> Result<VideoOutput> {
    let groups = group_annotations(&v.steps, theta)?;
    let mut gaps = Vec::new();
    let mut items = Vec::new();
    let mut triplet_index = 0;
    for (gi, g) in groups.iter().enumerate() {
        for w in g.windows(2) {
            let (a, b) = (&v.steps[w[0]].segment, &v.steps[w[1]].segment);
            if is_gap_case(a, b) {
                gaps.push(GapCase {
                    vid_name: v.meta.vid_name.clone(),
                    group: gi,
                    steps: [w[0], w[1]],
                    gap: b.start() - a.end(),
                    ratio: overlap_ratio(a, b),
                });
            }
        }
        for [i, j, k] in extract_triplets(&v.steps, g, theta) {
            items.extend(instantiate([&v.steps[i], &v.steps[j], &v.steps[k]], &v.meta, triplet_index)?);
            triplet_index += 1;
        }
    }
    Ok(VideoOutput { groups: groups.len(), triplets: triplet_index, items, gaps })
}

/// Runs the whole synthesis. Videos are processed independently (in
/// parallel under `mode`) and merged in name order before splitting.
///
/// A dataset too small to stratify is still returned, without splits, and
/// the reason is kept in `report.split_error`.
pub fn build_dataset(videos: &[VideoAnnotations], cfg: &BenchgenConfig, mode: ExecMode) -> Result<Dataset> {
    let outputs = mode.map(videos, |v| process_video(v, cfg.theta));
    let mut report = BuildReport { theta: cfg.theta, seed: cfg.seed, videos: videos.len(), ..BuildReport::default() };
    let mut items = Vec::new();
    for (v, out) in videos.iter().zip(outputs) {
        let out = out?;
        report.steps += v.steps.len();
        report.groups += out.groups;
        report.triplets += out.triplets;
        report.gap_cases.extend(out.gaps);
        if v.reordered {
            report.reordered_videos.push(v.meta.vid_name.clone());
        }
        items.extend(out.items);
    }
    report.items = items.len();
    for t in QaType::ALL {
        report.items_per_type.insert(t.tag().to_string(), items.iter().filter(|i| i.qa_type == t).count());
    }
    if items.is_empty() {
        report.warnings.push("no triplets found; the dataset is empty".to_string());
    }
    if !report.gap_cases.is_empty() {
        report.warnings.push(format!(
            "{} grouping(s) joined steps across a gap",
            report.gap_cases.len()
        ));
    }
    if let Err(e) = split_dataset(&mut items, cfg.seed) {
        report.split_error = Some(e.to_string());
        report.warnings.push(format!("items left unsplit: {e}"));
    }
    for s in Split::ALL {
        let n = items.iter().filter(|i| i.split == Some(s)).count();
        report.split_totals.insert(s.name().to_string(), n);
    }
    Ok(Dataset { items, report })
}
