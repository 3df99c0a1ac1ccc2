use serde::{Deserialize, Serialize};

use crate::domain::{ScreeningPair, SegmentSet};
use crate::error::Error;
use crate::transcript::Transcript;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Proceed,
    Stop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LauncherOutput {
    pub decision: Decision,
    pub rewritten_query: String,
    pub instruction: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Judgement {
    Succeeded,
    Failed,
    View,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "request", rename_all = "snake_case")]
pub enum ViewRequest {
    Scan { start: f64, end: f64 },
    Localize { text: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidatorOutput {
    pub judgement: Judgement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<ViewRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SegmentSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// How a validator session ended.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Succeeded(SegmentSet),
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub query_before: String,
    pub query_after: String,
    pub instruction: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryKind {
    Success,
    Failure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryTracker {
    pub kind: HistoryKind,
    pub entries: Vec<HistoryEntry>,
}

impl HistoryTracker {
    pub fn new(kind: HistoryKind) -> Self {
        HistoryTracker { kind, entries: Vec::new() }
    }

    pub fn append(&mut self, query_before: &str, query_after: &str, instruction: &str) {
        self.entries.push(HistoryEntry {
            query_before: query_before.to_string(),
            query_after: query_after.to_string(),
            instruction: instruction.to_string(),
        });
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Numbered lines for a prompt, or `(none)`.
    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return "(none)".to_string();
        }
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                format!(
                    "{}. \"{}\" -> \"{}\" | instruction: {}",
                    i + 1,
                    e.query_before,
                    e.query_after,
                    e.instruction
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    LauncherStop,
    RoundCap,
    /// Single-pass variants finish with one answer.
    FinalAnswer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub pair: ScreeningPair,
    pub rounds: usize,
    pub terminated_by: TerminatedBy,
    pub success_history: HistoryTracker,
    pub failure_history: HistoryTracker,
    /// Rounds whose committed set was longer than the one before.
    pub non_shrinking_rounds: Vec<usize>,
    pub warnings: Vec<String>,
    pub transcript: Transcript,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Proceed rounds before the run is cut off.
    pub max_rounds: usize,
    /// Viewer requests per validator session.
    pub view_budget: usize,
    /// Tool calls per viewer or single-agent session.
    pub tool_budget: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { max_rounds: 4, view_budget: 6, tool_budget: 8 }
    }
}

/// A run that aborted, with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub transcript: Transcript,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}
