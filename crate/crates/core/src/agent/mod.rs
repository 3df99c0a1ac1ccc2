//! The screening loop: a video-blind launcher proposes cuts and rewrites, a
//! validator checks them through the viewer. Also the single-agent variant.

mod run;
mod simple;
mod types;

pub use run::{launcher_step, run_tvs, validator_step, AgentBackends, LAUNCHER_ROLE, VALIDATOR_ROLE};
pub use simple::{run_tvs_simple, SIMPLE_ROLE};
pub use types::*;
