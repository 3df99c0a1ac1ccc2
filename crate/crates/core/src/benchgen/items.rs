use serde::{Deserialize, Serialize};

use super::annotations::StepAnnotation;
use crate::domain::{QaType, SegmentSet, VideoMeta};
use crate::error::{Error, Result};

/// Rewritten query shared by every item: once the video is cut to the middle
/// step, each question asks which step is on screen.
pub const GT_REWRITTEN_QUERY: &str = "What is the cooking step shown in this video?";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub item_id: String,
    pub vid_name: String,
    pub vid_fname: String,
    pub vid_duration: f64,
    pub vid_frame_rate: f64,
    #[serde(rename = "type")]
    pub qa_type: QaType,
    pub question: String,
    pub answer: String,
    pub gt_timestamp: SegmentSet,
    pub gt_rewritten_query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

fn secs(t: f64) -> String {
    format!("{t:.1}")
}

fn frames(t: f64, r: f64) -> String {
    format!("{}", (t * r).round() as i64)
}

pub fn question_text(qa_type: QaType, t: [&StepAnnotation; 3], frame_rate: f64) -> String {
    let [t1, t2, t3] = t;
    let (s2, e2) = (t2.segment.start(), t2.segment.end());
    match qa_type {
        QaType::Trr1 => format!("What is the cooking step after {}?", t1.sentence),
        QaType::Trr2 => format!("What is the cooking step before {}?", t3.sentence),
        QaType::Trr3 => format!("What is the cooking step between {} and {}?", t1.sentence, t3.sentence),
        QaType::Tir1 => format!("What is the step between timestamps {} and {}?", secs(s2), secs(e2)),
        QaType::Tir2 => format!(
            "What is the step between frame indices {} and {}?",
            frames(s2, frame_rate),
            frames(e2, frame_rate)
        ),
        QaType::Tir3 => format!(
            "What step appears within {} frames after {} seconds?",
            frames(e2 - s2, frame_rate),
            secs(s2)
        ),
        QaType::Mir1 => format!("What is the first step after timestamp {}?", secs(s2)),
        QaType::Mir2 => format!("What is the last step before timestamp {}?", secs(e2)),
        QaType::Mir3 => format!(
            "Within {} and {}, what is (are) the cooking step(s) apart from {} and {}?",
            secs(t1.segment.start()),
            secs(t3.segment.end()),
            t1.sentence,
            t3.sentence
        ),
    }
}

/// The nine items of one triplet. Every item targets the middle step.
pub fn instantiate(t: [&StepAnnotation; 3], meta: &VideoMeta, triplet_index: usize) -> Result<Vec<QAItem>> {
    if !(meta.frame_rate.is_finite() && meta.frame_rate > 0.0) {
        return Err(Error::validation(format!("{}: frame rate missing", meta.vid_name)));
    }
    if let Some(s) = t.iter().find(|s| s.segment.end() > meta.duration + 1e-6) {
        return Err(Error::validation(format!(
            "{}: step {} ends after the video",
            meta.vid_name, s.segment
        )));
    }
    let gt = SegmentSet::normalize([t[1].segment]);
    Ok(QaType::ALL
        .iter()
        .map(|&ty| QAItem {
            item_id: format!("{}:{}:{}", meta.vid_name, triplet_index, ty.tag()),
            vid_name: meta.vid_name.clone(),
            vid_fname: meta.vid_fname.clone(),
            vid_duration: meta.duration,
            vid_frame_rate: meta.frame_rate,
            qa_type: ty,
            question: question_text(ty, t, meta.frame_rate),
            answer: t[1].sentence.clone(),
            gt_timestamp: gt.clone(),
            gt_rewritten_query: GT_REWRITTEN_QUERY.to_string(),
            split: None,
        })
        .collect())
}
