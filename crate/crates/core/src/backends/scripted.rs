//! Deterministic replay backends for tests and offline runs.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::chat::{ChatBackend, ChatReply, ChatRequest, Message, Role, ToolCall};
use crate::error::{Error, Result};

/// What the next request must look like for a script entry to apply.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    #[default]
    Any,
    /// The latest user or tool message contains this substring.
    Contains(String),
}

impl Matcher {
    fn matches(&self, messages: &[Message]) -> bool {
        match self {
            Matcher::Any => true,
            Matcher::Contains(s) => last_input(messages).map_or(false, |m| m.contains(s.as_str())),
        }
    }
}

fn last_input(messages: &[Message]) -> Option<&str> {
    messages
        .iter()
        .rev()
        .find(|m| matches!(m.role, Role::User | Role::Tool))
        .map(|m| m.content.as_str())
}

/// One canned exchange. On disk:
/// `{"match": "substring", "text": "..."}` or
/// `{"tool_call": {"name": "caption_at", "arguments": {"timestamp": 12.0}}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEntry", into = "RawEntry")]
pub struct ScriptEntry {
    pub matcher: Matcher,
    pub reply: ChatReply,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawEntry {
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    matcher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tool_call: Option<RawToolCall>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawToolCall {
    name: String,
    #[serde(default)]
    arguments: Value,
}

impl TryFrom<RawEntry> for ScriptEntry {
    type Error = Error;

    fn try_from(r: RawEntry) -> Result<Self> {
        let reply = match (r.text, r.tool_call) {
            (Some(t), None) => ChatReply::text(t),
            (None, Some(c)) => ChatReply::tool(&c.name, c.arguments),
            _ => {
                return Err(Error::validation(
                    "script entry needs exactly one of `text` or `tool_call`",
                ))
            }
        };
        Ok(ScriptEntry {
            matcher: r.matcher.map_or(Matcher::Any, Matcher::Contains),
            reply,
        })
    }
}

impl From<ScriptEntry> for RawEntry {
    fn from(e: ScriptEntry) -> Self {
        let matcher = match e.matcher {
            Matcher::Any => None,
            Matcher::Contains(s) => Some(s),
        };
        match e.reply {
            ChatReply::Text { text } => RawEntry { matcher, text: Some(text), tool_call: None },
            ChatReply::ToolCall(ToolCall { name, arguments, .. }) => RawEntry {
                matcher,
                text: None,
                tool_call: Some(RawToolCall { name, arguments }),
            },
        }
    }
}

impl ScriptEntry {
    pub fn any(reply: ChatReply) -> Self {
        ScriptEntry { matcher: Matcher::Any, reply }
    }

    pub fn when(substring: &str, reply: ChatReply) -> Self {
        ScriptEntry {
            matcher: Matcher::Contains(substring.to_string()),
            reply,
        }
    }
}

/// Replays script entries strictly in order.
///
/// A strict script (see [`ScriptedChat::strict`]) panics on drop while
/// entries remain unconsumed, which fails the owning test.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    entries: Mutex<VecDeque<ScriptEntry>>,
    requests: Mutex<Vec<Vec<Message>>>,
    strict: bool,
}

impl ScriptedChat {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        ScriptedChat {
            entries: Mutex::new(entries.into_iter().collect()),
            requests: Mutex::default(),
            strict: false,
        }
    }

    /// Every reply matches any request.
    pub fn replies(replies: impl IntoIterator<Item = ChatReply>) -> Self {
        Self::new(replies.into_iter().map(ScriptEntry::any))
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    /// Message lists of every request received, in order.
    pub fn requests(&self) -> Vec<Vec<Message>> {
        self.requests.lock().unwrap().clone()
    }

    pub fn finish(&self) -> Result<()> {
        let left = self.entries.lock().unwrap();
        if left.is_empty() {
            Ok(())
        } else {
            Err(Error::ScriptMismatch(format!(
                "{} scripted replies were never requested; next: {:?}",
                left.len(),
                left.front().map(|e| &e.reply)
            )))
        }
    }
}

impl ChatBackend for ScriptedChat {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply> {
        self.requests.lock().unwrap().push(request.messages.to_vec());
        let mut entries = self.entries.lock().unwrap();
        let got = last_input(request.messages).unwrap_or("").to_string();
        let Some(next) = entries.front() else {
            return Err(Error::ScriptMismatch(format!(
                "script exhausted; unexpected request:\n+ {got}"
            )));
        };
        if !next.matcher.matches(request.messages) {
            return Err(Error::ScriptMismatch(format!(
                "request does not match the next entry\n- expected: {:?}\n+ got: {got}",
                next.matcher
            )));
        }
        Ok(entries.pop_front().unwrap().reply)
    }
}

impl Drop for ScriptedChat {
    fn drop(&mut self) {
        if self.strict && !std::thread::panicking() {
            if let Err(e) = self.finish() {
                panic!("{e}");
            }
        }
    }
}

/// Wraps a backend and counts calls; fails once `limit` would be exceeded.
pub struct CountingChat<B> {
    inner: B,
    calls: AtomicUsize,
    limit: Option<usize>,
}

impl<B: ChatBackend> CountingChat<B> {
    pub fn new(inner: B) -> Self {
        CountingChat { inner, calls: AtomicUsize::new(0), limit: None }
    }

    pub fn with_limit(inner: B, limit: usize) -> Self {
        CountingChat { inner, calls: AtomicUsize::new(0), limit: Some(limit) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ChatBackend> ChatBackend for CountingChat<B> {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if let Some(limit) = self.limit {
            if n > limit {
                return Err(Error::Budget(format!("counting wrapper: call {n} exceeds limit {limit}")));
            }
        }
        self.inner.complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::ChatSession;
    use crate::transcript::Transcript;

    #[test]
    fn replays_in_order_and_records() {
        let chat = ScriptedChat::replies([ChatReply::text("STOP")]).strict();
        let mut tx = Transcript::new();
        let mut s = ChatSession::open(&chat, &mut tx, "t", 0, Some("sys"), vec![], 4);
        assert_eq!(s.ask(&mut tx, "hello").unwrap(), ChatReply::text("STOP"));
        assert_eq!(tx.len(), 3);
        assert_eq!(chat.requests()[0].len(), 2);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let chat = ScriptedChat::replies([ChatReply::text("x")]);
        let mut tx = Transcript::new();
        let mut s = ChatSession::open(&chat, &mut tx, "t", 0, None, vec![], 0);
        assert!(matches!(s.ask(&mut tx, "hi"), Err(Error::Budget(_))));
        assert_eq!(chat.remaining(), 1);
    }

    #[test]
    fn mismatch_carries_diff() {
        let chat = ScriptedChat::new([ScriptEntry::when("sauce", ChatReply::text("ok"))]);
        let mut tx = Transcript::new();
        let mut s = ChatSession::open(&chat, &mut tx, "t", 0, None, vec![], 4);
        let err = s.ask(&mut tx, "onions").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sauce") && msg.contains("onions"), "{msg}");
        assert!(chat.finish().is_err());
    }

    #[test]
    fn tool_calls_must_be_answered() {
        let chat = ScriptedChat::replies([
            ChatReply::tool("caption_at", serde_json::json!({"timestamp": 1.0})),
            ChatReply::text("done"),
        ]);
        let mut tx = Transcript::new();
        let mut s = ChatSession::open(&chat, &mut tx, "t", 0, None, vec![], 4);
        let ChatReply::ToolCall(call) = s.ask(&mut tx, "go").unwrap() else {
            panic!("expected tool call")
        };
        assert!(s.ask(&mut tx, "again").is_err());
        assert_eq!(s.answer_tool(&mut tx, &call, "CAP[30]").unwrap(), ChatReply::text("done"));
    }

    #[test]
    fn script_file_shape() {
        let json = r#"[{"text":"a"},{"match":"x","tool_call":{"name":"prep","arguments":{"start":0,"end":5}}}]"#;
        let entries: Vec<ScriptEntry> = serde_json::from_str(json).unwrap();
        assert_eq!(entries[0].reply, ChatReply::text("a"));
        assert_eq!(entries[1].matcher, Matcher::Contains("x".into()));
        assert!(serde_json::from_str::<Vec<ScriptEntry>>(r#"[{}]"#).is_err());
        let back = serde_json::to_string(&entries).unwrap();
        assert_eq!(serde_json::from_str::<Vec<ScriptEntry>>(&back).unwrap(), entries);
    }

    #[test]
    fn counting_wrapper_enforces_limit() {
        let chat = CountingChat::with_limit(
            ScriptedChat::replies([ChatReply::text("a"), ChatReply::text("b")]),
            1,
        );
        let req = ChatRequest { messages: &[], tools: &[] };
        assert!(chat.complete(&req).is_ok());
        assert!(matches!(chat.complete(&req), Err(Error::Budget(_))));
        assert_eq!(chat.calls(), 2);
    }
}
