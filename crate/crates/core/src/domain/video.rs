use serde::{Deserialize, Serialize};

use super::interval::SegmentSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

/// Container-level facts about one source video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVideoMeta")]
pub struct VideoMeta {
    pub vid_name: String,
    pub vid_fname: String,
    pub duration: f64,
    pub frame_rate: f64,
    pub total_frames: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

#[derive(Deserialize)]
struct RawVideoMeta {
    vid_name: String,
    vid_fname: String,
    duration: f64,
    frame_rate: f64,
    total_frames: u64,
    #[serde(default)]
    resolution: Option<Resolution>,
}

impl TryFrom<RawVideoMeta> for VideoMeta {
    type Error = Error;

    fn try_from(r: RawVideoMeta) -> Result<Self> {
        let meta = VideoMeta {
            vid_name: r.vid_name,
            vid_fname: r.vid_fname,
            duration: r.duration,
            frame_rate: r.frame_rate,
            total_frames: r.total_frames,
            resolution: r.resolution,
        };
        meta.validate()?;
        Ok(meta)
    }
}

impl VideoMeta {
    /// Builds metadata, deriving `total_frames` from duration and frame rate.
    pub fn derived(vid_name: &str, duration: f64, frame_rate: f64) -> Result<Self> {
        if !(frame_rate.is_finite() && frame_rate > 0.0) || !(duration.is_finite() && duration > 0.0) {
            return Err(Error::validation(format!(
                "video {vid_name}: duration {duration} and frame rate {frame_rate} must be positive"
            )));
        }
        let meta = VideoMeta {
            vid_name: vid_name.to_string(),
            vid_fname: format!("{vid_name}.mp4"),
            duration,
            frame_rate,
            total_frames: ((duration * frame_rate).round() as u64).max(1),
            resolution: None,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        let name = &self.vid_name;
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::validation(format!("video {name}: duration must be > 0")));
        }
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::validation(format!("video {name}: frame rate must be > 0")));
        }
        if self.total_frames < 1 {
            return Err(Error::validation(format!("video {name}: total_frames must be >= 1")));
        }
        // one second of slack for container rounding
        let expected = (self.duration * self.frame_rate).round();
        if (self.total_frames as f64 - expected).abs() > self.frame_rate {
            return Err(Error::validation(format!(
                "video {name}: total_frames {} disagrees with duration x frame rate ({expected})",
                self.total_frames
            )));
        }
        Ok(())
    }

    pub fn full_extent(&self) -> SegmentSet {
        SegmentSet::full(self.duration).expect("validated duration is positive")
    }

    /// Frame index nearest to `t`, clamped into the video.
    pub fn nearest_frame(&self, t: f64) -> u64 {
        let f = (t * self.frame_rate).round().max(0.0) as u64;
        f.min(self.total_frames - 1)
    }
}

/// The (video, query) pair a screening run hands to a downstream model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningPair {
    pub video: SegmentSet,
    pub query: String,
}

impl ScreeningPair {
    pub fn new(video: SegmentSet, query: impl Into<String>) -> Result<Self> {
        let query = query.into();
        if video.is_empty() {
            return Err(Error::validation("screened video must be non-empty"));
        }
        if query.trim().is_empty() {
            return Err(Error::validation("screened query must be non-empty"));
        }
        Ok(ScreeningPair { video, query })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_slack() {
        let mut m = VideoMeta::derived("v", 10.0, 30.0).unwrap();
        assert_eq!(m.total_frames, 300);
        m.total_frames = 329;
        assert!(m.validate().is_ok());
        m.total_frames = 331;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_bad_meta() {
        assert!(VideoMeta::derived("v", 0.0, 30.0).is_err());
        assert!(VideoMeta::derived("v", 5.0, -1.0).is_err());
        let json = r#"{"vid_name":"a","vid_fname":"a.mp4","duration":5,"frame_rate":25,"total_frames":0}"#;
        assert!(serde_json::from_str::<VideoMeta>(json).is_err());
    }

    #[test]
    fn screening_pair_contract() {
        let full = SegmentSet::full(4.0).unwrap();
        assert!(ScreeningPair::new(full.clone(), "  ").is_err());
        assert!(ScreeningPair::new(SegmentSet::empty(), "q").is_err());
        assert!(ScreeningPair::new(full, "q").is_ok());
    }
}
