//! Ordered record of every model exchange in a run.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    /// System or user message sent to a model.
    Prompt,
    /// Text reply from a model.
    Reply,
    ToolCall,
    ToolResult,
    /// Orchestrator bookkeeping (commits, failures, flags).
    Event,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: usize,
    pub round: usize,
    pub role: String,
    pub kind: EntryKind,
    pub raw: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn push(&mut self, round: usize, role: &str, kind: EntryKind, raw: impl Into<String>) {
        let seq = self.entries.len();
        self.entries.push(TranscriptEntry {
            seq,
            round,
            role: role.to_string(),
            kind,
            raw: raw.into(),
            parsed: None,
        });
    }

    pub fn event(&mut self, round: usize, raw: impl Into<String>, parsed: Value) {
        self.push(round, "orchestrator", EntryKind::Event, raw);
        self.annotate_last(parsed);
    }

    /// Attaches the parsed form to the most recent entry.
    pub fn annotate_last(&mut self, parsed: Value) {
        if let Some(last) = self.entries.last_mut() {
            last.parsed = Some(parsed);
        }
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn by_role<'a>(&'a self, role: &'a str) -> impl Iterator<Item = &'a TranscriptEntry> + 'a {
        self.entries.iter().filter(move |e| e.role == role)
    }

    pub fn events(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Event)
    }
}
