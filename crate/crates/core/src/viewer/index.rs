use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backends::{Captioner, FrameRef};
use crate::domain::{VideoMeta, TIME_EPS};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::isodata::{select_keyframes_with, Clustering, EmbeddingMatrix, IsodataParams};

/// One row of the candidate-frame manifest JSONL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateFrame {
    pub timestamp: f64,
    pub frame_index: u64,
    pub embedding_row: usize,
    #[serde(default = "yes")]
    pub is_iframe: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyframeEntry {
    pub timestamp: f64,
    pub frame_index: u64,
    pub caption: String,
    pub embedding_row: usize,
}

/// Captioned keyframes of one video, immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIndex", into = "RawIndex")]
pub struct KeyframeIndex {
    video: VideoMeta,
    entries: Vec<KeyframeEntry>,
}

#[derive(Serialize, Deserialize)]
struct RawIndex {
    video: VideoMeta,
    entries: Vec<KeyframeEntry>,
}

impl TryFrom<RawIndex> for KeyframeIndex {
    type Error = Error;
    fn try_from(r: RawIndex) -> Result<Self> {
        KeyframeIndex::new(r.video, r.entries)
    }
}

impl From<KeyframeIndex> for RawIndex {
    fn from(k: KeyframeIndex) -> Self {
        RawIndex { video: k.video, entries: k.entries }
    }
}

fn check_frame(meta: &VideoMeta, what: &str, t: f64, frame_index: u64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0 && t <= meta.duration + TIME_EPS) {
        return Err(Error::validation(format!("{what}: timestamp {t} outside [0, {}]", meta.duration)));
    }
    if frame_index >= meta.total_frames {
        return Err(Error::validation(format!(
            "{what}: frame_index {frame_index} outside [0, {})",
            meta.total_frames
        )));
    }
    if (frame_index as f64 - t * meta.frame_rate).abs() > 0.5 + 1e-6 {
        return Err(Error::validation(format!(
            "{what}: frame_index {frame_index} does not match timestamp {t} at {} fps",
            meta.frame_rate
        )));
    }
    Ok(())
}

impl KeyframeIndex {
    pub fn new(video: VideoMeta, entries: Vec<KeyframeEntry>) -> Result<Self> {
        video.validate()?;
        for (i, e) in entries.iter().enumerate() {
            check_frame(&video, &format!("keyframe #{i}"), e.timestamp, e.frame_index)?;
        }
        if let Some(i) = entries.windows(2).position(|w| !(w[1].timestamp > w[0].timestamp)) {
            return Err(Error::validation(format!(
                "keyframe timestamps must be strictly increasing (#{i} -> #{})",
                i + 1
            )));
        }
        Ok(KeyframeIndex { video, entries })
    }

    /// Clusters the candidate embeddings, keeps one frame per cluster and
    /// captions each kept frame once.
    pub fn build(
        video: &VideoMeta,
        manifest: &[CandidateFrame],
        embeddings: &EmbeddingMatrix,
        params: &IsodataParams,
        captioner: &dyn Captioner,
        mode: ExecMode,
    ) -> Result<(Self, Clustering)> {
        video.validate()?;
        if manifest.len() != embeddings.rows() {
            return Err(Error::validation(format!(
                "manifest has {} rows but the embedding matrix has {}",
                manifest.len(),
                embeddings.rows()
            )));
        }
        let mut seen = BTreeSet::new();
        for (i, c) in manifest.iter().enumerate() {
            check_frame(video, &format!("manifest row {}", i + 1), c.timestamp, c.frame_index)?;
            if c.embedding_row >= embeddings.rows() || !seen.insert(c.embedding_row) {
                return Err(Error::validation(format!(
                    "manifest row {}: embedding_row {} is out of range or reused",
                    i + 1,
                    c.embedding_row
                )));
            }
        }
        let candidates: Vec<&CandidateFrame> = manifest.iter().filter(|c| c.is_iframe).collect();
        if candidates.is_empty() {
            return Err(Error::validation("manifest contains no I-frame candidates"));
        }
        let rows: Vec<usize> = candidates.iter().map(|c| c.embedding_row).collect();
        let x = embeddings.select_rows(&rows)?;
        let ts: Vec<f64> = candidates.iter().map(|c| c.timestamp).collect();
        let (picked, clustering) = select_keyframes_with(&x, &ts, &params.fitted_to(x.rows()), mode)?;
        let captions: Vec<Result<String>> = mode.map(&picked, |f| {
            let c = candidates[f.row];
            captioner.caption(&video.vid_name, FrameRef { frame_index: c.frame_index, timestamp: c.timestamp })
        });
        let entries = picked
            .iter()
            .zip(captions)
            .map(|(f, cap)| {
                let c = candidates[f.row];
                Ok(KeyframeEntry {
                    timestamp: c.timestamp,
                    frame_index: c.frame_index,
                    caption: cap?,
                    embedding_row: c.embedding_row,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((KeyframeIndex::new(video.clone(), entries)?, clustering))
    }

    pub fn video(&self) -> &VideoMeta {
        &self.video
    }

    pub fn entries(&self) -> &[KeyframeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keyframes with `start <= timestamp <= end`, in time order.
    pub fn prep(&self, start: f64, end: f64) -> Result<&[KeyframeEntry]> {
        if !(start.is_finite() && end.is_finite()) || start > end {
            return Err(Error::validation(format!("prep: invalid range [{start}, {end}]")));
        }
        let lo = self.entries.partition_point(|e| e.timestamp < start);
        let hi = self.entries.partition_point(|e| e.timestamp <= end);
        Ok(&self.entries[lo..hi.max(lo)])
    }

    /// Position of the keyframe closest to `t`; the earlier one on ties.
    pub fn nearest_position(&self, t: f64) -> Option<usize> {
        if self.entries.is_empty() {
            return None;
        }
        let i = self.entries.partition_point(|e| e.timestamp < t);
        if i == 0 {
            return Some(0);
        }
        if i == self.entries.len() {
            return Some(i - 1);
        }
        let before = t - self.entries[i - 1].timestamp;
        let after = self.entries[i].timestamp - t;
        Some(if after < before { i } else { i - 1 })
    }

    pub fn nearest(&self, t: f64) -> Option<&KeyframeEntry> {
        self.nearest_position(t).map(|i| &self.entries[i])
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("index serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
    }
}

/// Renders keyframes as `[12.0s] caption` lines.
pub fn format_captions(entries: &[KeyframeEntry]) -> String {
    if entries.is_empty() {
        return "(no keyframes in this range)".to_string();
    }
    entries
        .iter()
        .map(|e| format!("[{:.1}s] {}", e.timestamp, e.caption))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::MockCaptioner;

    fn meta() -> VideoMeta {
        VideoMeta::derived("v", 100.0, 10.0).unwrap()
    }

    fn manifest(ts: &[f64]) -> Vec<CandidateFrame> {
        ts.iter()
            .enumerate()
            .map(|(i, &t)| CandidateFrame { timestamp: t, frame_index: (t * 10.0).round() as u64, embedding_row: i, is_iframe: true })
            .collect()
    }

    #[test]
    fn two_clusters_two_captions() {
        let ts: Vec<f64> = (0..10).map(|i| i as f64 * 9.0).collect();
        let rows: Vec<Vec<f32>> = (0..10).map(|i| if i < 5 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
        let x = EmbeddingMatrix::from_rows(&rows).unwrap();
        let cap = MockCaptioner::new();
        let p = IsodataParams { k_init: 4, ..IsodataParams::default() };
        let (idx, cl) = KeyframeIndex::build(&meta(), &manifest(&ts), &x, &p, &cap, ExecMode::Sequential).unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(cap.calls(), 2);
        assert_eq!(cl.k(), 2);
        assert_eq!(idx.entries()[0].caption, "CAP[0]");
        assert_eq!(idx.entries()[1].caption, "CAP[450]");
    }

    #[test]
    fn single_candidate() {
        let x = EmbeddingMatrix::from_rows(&[vec![0.3, 0.4]]).unwrap();
        let cap = MockCaptioner::new();
        let (idx, _) = KeyframeIndex::build(&meta(), &manifest(&[12.0]), &x, &IsodataParams::default(), &cap, ExecMode::Sequential).unwrap();
        assert_eq!(idx.entries()[0].caption, "CAP[120]");
    }

    #[test]
    fn rejects_bad_manifests() {
        let x = EmbeddingMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let cap = MockCaptioner::new();
        let p = IsodataParams::default();
        assert!(KeyframeIndex::build(&meta(), &manifest(&[5.0, 5.0]), &x, &p, &cap, ExecMode::Sequential).is_err());
        assert!(KeyframeIndex::build(&meta(), &manifest(&[5.0]), &x, &p, &cap, ExecMode::Sequential).is_err());
        let mut m = manifest(&[1.0, 2.0]);
        m[1].frame_index = 99;
        assert!(KeyframeIndex::build(&meta(), &m, &x, &p, &cap, ExecMode::Sequential).is_err());
        assert_eq!(cap.calls(), 0);
    }

    fn small() -> KeyframeIndex {
        let e = |t: f64| KeyframeEntry { timestamp: t, frame_index: (t * 10.0) as u64, caption: format!("c{t}"), embedding_row: 0 };
        KeyframeIndex::new(meta(), vec![e(10.0), e(20.0), e(30.0)]).unwrap()
    }

    #[test]
    fn prep_ranges() {
        let idx = small();
        assert_eq!(idx.prep(0.0, 100.0).unwrap().len(), 3);
        assert!(idx.prep(21.0, 29.0).unwrap().is_empty());
        assert_eq!(idx.prep(20.0, 20.0 + 1e-9).unwrap()[0].caption, "c20");
        assert!(idx.prep(30.0, 10.0).is_err());
    }

    #[test]
    fn nearest_prefers_earlier_on_ties() {
        let idx = small();
        assert_eq!(idx.nearest(15.0).unwrap().timestamp, 10.0);
        assert_eq!(idx.nearest(15.1).unwrap().timestamp, 20.0);
        assert_eq!(idx.nearest(99.0).unwrap().timestamp, 30.0);
    }

    #[test]
    fn save_load_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.json");
        let idx = small();
        idx.save(&p).unwrap();
        let first = std::fs::read(&p).unwrap();
        let back = KeyframeIndex::load(&p).unwrap();
        assert_eq!(back, idx);
        back.save(&p).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), first);
    }
}
