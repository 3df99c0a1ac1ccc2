//! Temporal visual screening: trim a video to the segments a question needs
//! and rewrite the question to match.
//!
//! The crate is organized bottom-up:
//!
//! * [`domain`] interval algebra over video time and the segment metrics,
//! * [`isodata`] adaptive clustering that picks keyframes from candidate frames,
//! * [`backends`] chat, captioning, grounding and judging interfaces with
//!   scripted test doubles and live HTTP clients,
//! * [`viewer`] the keyframe index plus the scan and localize services,
//! * [`agent`] the launcher/validator screening loop and its single-agent variant,
//! * [`dsl`] the tool-plan language behind the video-blind variant,
//! * [`benchgen`] benchmark synthesis from step annotations,
//! * [`pipeline`] the batch commands wired together for the CLI.

pub mod agent;
pub mod backends;
pub mod benchgen;
pub mod domain;
pub mod dsl;
pub mod error;
pub mod exec;
pub mod isodata;
pub mod pipeline;
pub mod prompts;
pub mod protocol;
pub mod transcript;
pub mod viewer;

pub use error::{Error, Result};
pub use exec::ExecMode;
