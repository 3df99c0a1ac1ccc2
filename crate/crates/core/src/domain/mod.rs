//! Video-time interval algebra, video metadata and segment metrics.

mod interval;
pub mod io;
mod metrics;
mod qa_type;
mod video;

pub use interval::{SegmentSet, TimeRange, TIME_EPS};
pub use metrics::{evaluate, f1_score, score_pair, GroundTruth, MetricQuad, MetricsReport, PairScore};
pub use qa_type::{Category, QaType};
pub use video::{Resolution, ScreeningPair, VideoMeta};
