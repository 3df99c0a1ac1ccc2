//! Object grounding: which frames show a named object.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::domain::VideoMeta;
use crate::error::{Error, Result};
use crate::viewer::KeyframeIndex;

pub trait Grounder: Send + Sync {
    /// Sorted, duplicate-free frame indices among `candidates` (all frames
    /// when `None`) that contain `obj_name`.
    fn select(&self, obj_name: &str, candidates: Option<&[u64]>, meta: &VideoMeta) -> Result<Vec<u64>>;

    /// Set when results are a coarse stand-in for a real detector.
    fn low_fidelity(&self) -> bool {
        false
    }
}

fn candidate_frames(candidates: Option<&[u64]>, meta: &VideoMeta) -> Vec<u64> {
    match candidates {
        Some(c) => c
            .iter()
            .copied()
            .filter(|&i| i < meta.total_frames)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        None => (0..meta.total_frames).collect(),
    }
}

/// Matches the object name against the caption of each frame's nearest
/// keyframe, case-insensitively.
pub struct CaptionGrounder<'a> {
    index: &'a KeyframeIndex,
}

impl<'a> CaptionGrounder<'a> {
    pub fn new(index: &'a KeyframeIndex) -> Self {
        CaptionGrounder { index }
    }
}

impl Grounder for CaptionGrounder<'_> {
    fn select(&self, obj_name: &str, candidates: Option<&[u64]>, meta: &VideoMeta) -> Result<Vec<u64>> {
        let needle = obj_name.trim().to_lowercase();
        if needle.is_empty() {
            return Err(Error::validation("grounding_select: empty object name"));
        }
        let hits: Vec<bool> = self
            .index
            .entries()
            .iter()
            .map(|e| e.caption.to_lowercase().contains(&needle))
            .collect();
        Ok(candidate_frames(candidates, meta)
            .into_iter()
            .filter(|&i| {
                let mid = (i as f64 + 0.5) / meta.frame_rate;
                self.index.nearest_position(mid).is_some_and(|k| hits[k])
            })
            .collect())
    }

    fn low_fidelity(&self) -> bool {
        true
    }
}

/// Replays fixed answers per object name and counts calls; the answer is
/// restricted to the candidate set.
#[derive(Debug, Default)]
pub struct ScriptedGrounder {
    answers: Mutex<Vec<(String, Vec<u64>)>>,
    calls: AtomicUsize,
}

impl ScriptedGrounder {
    pub fn new(answers: impl IntoIterator<Item = (String, Vec<u64>)>) -> Self {
        ScriptedGrounder {
            answers: Mutex::new(answers.into_iter().collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Grounder for ScriptedGrounder {
    fn select(&self, obj_name: &str, candidates: Option<&[u64]>, meta: &VideoMeta) -> Result<Vec<u64>> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let answers = self.answers.lock().unwrap();
        let found = answers
            .iter()
            .find(|(name, _)| name == obj_name)
            .ok_or_else(|| Error::ScriptMismatch(format!("no scripted grounding for `{obj_name}`")))?;
        let allowed: BTreeSet<u64> = candidate_frames(candidates, meta).into_iter().collect();
        let mut out: Vec<u64> = found.1.iter().copied().filter(|i| allowed.contains(i)).collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}
