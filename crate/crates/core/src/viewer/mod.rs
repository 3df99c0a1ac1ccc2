//! Keyframe index plus the scan and localize services built on it.

mod index;
mod service;

pub use index::{format_captions, CandidateFrame, KeyframeEntry, KeyframeIndex};
pub use service::{
    pad_and_clamp, CaptionSource, CaptionTool, LocalizeTrace, Viewer, ViewerService, DEFAULT_TOOL_BUDGET,
    LOCALIZE_PAD, STAGE1_CANDIDATES, STAGE3_WINDOW,
};
