//! The tool-plan language used by the video-blind variant.

mod blind;
mod exec;
mod plan;
pub mod tools;

pub use blind::{run_tvs_blind, BLIND_ROLE};
pub use exec::{execute_plan, Execution, Value};
pub use plan::{parse_plan, Arg, Step, Tool, ToolPlan};
