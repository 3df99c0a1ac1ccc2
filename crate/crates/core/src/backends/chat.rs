use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::transcript::{EntryKind, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// A function call requested by the model: tool name plus an arguments object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    #[serde(default)]
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub arguments: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call: Option<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
            tool_call: None,
            tool_call_id: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    /// JSON schema of the arguments object.
    pub parameters: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatReply {
    Text { text: String },
    ToolCall(ToolCall),
}

impl ChatReply {
    pub fn text(t: impl Into<String>) -> Self {
        ChatReply::Text { text: t.into() }
    }

    pub fn tool(name: &str, arguments: Value) -> Self {
        ChatReply::ToolCall(ToolCall {
            id: String::new(),
            name: name.to_string(),
            arguments,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChatRequest<'a> {
    pub messages: &'a [Message],
    pub tools: &'a [ToolSpec],
}

/// A chat-completion model. Implementations must tolerate concurrent sessions.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<T> {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<ChatReply> {
        (**self).complete(request)
    }
}

/// One conversation with a backend. Every message in and out is appended to
/// the run transcript under this session's role and round.
pub struct ChatSession<'a> {
    backend: &'a dyn ChatBackend,
    messages: Vec<Message>,
    tools: Vec<ToolSpec>,
    budget: usize,
    role: String,
    round: usize,
    calls: usize,
}

impl<'a> ChatSession<'a> {
    pub fn open(
        backend: &'a dyn ChatBackend,
        tx: &mut Transcript,
        role: &str,
        round: usize,
        system: Option<&str>,
        tools: Vec<ToolSpec>,
        budget: usize,
    ) -> Self {
        let mut messages = Vec::new();
        if let Some(sys) = system {
            tx.push(round, role, EntryKind::Prompt, sys);
            messages.push(Message::new(Role::System, sys));
        }
        ChatSession {
            backend,
            messages,
            tools,
            budget,
            role: role.to_string(),
            round,
            calls: 0,
        }
    }

    pub fn role(&self) -> &str {
        &self.role
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn remaining_budget(&self) -> usize {
        self.budget
    }

    pub fn calls(&self) -> usize {
        self.calls
    }

    fn pending_tool_call(&self) -> Option<&ToolCall> {
        self.messages
            .last()
            .filter(|m| m.role == Role::Assistant)
            .and_then(|m| m.tool_call.as_ref())
    }

    pub fn ask(&mut self, tx: &mut Transcript, content: &str) -> Result<ChatReply> {
        if let Some(call) = self.pending_tool_call() {
            return Err(Error::protocol(format!(
                "{}: tool call `{}` must be answered before a new user message",
                self.role, call.name
            )));
        }
        tx.push(self.round, &self.role, EntryKind::Prompt, content);
        self.messages.push(Message::new(Role::User, content));
        self.call(tx)
    }

    pub fn answer_tool(
        &mut self,
        tx: &mut Transcript,
        call: &ToolCall,
        content: &str,
    ) -> Result<ChatReply> {
        match self.pending_tool_call() {
            Some(pending) if pending.id == call.id && pending.name == call.name => {}
            _ => {
                return Err(Error::protocol(format!(
                    "{}: no pending tool call `{}` to answer",
                    self.role, call.name
                )))
            }
        }
        tx.push(self.round, &self.role, EntryKind::ToolResult, content);
        let mut msg = Message::new(Role::Tool, content);
        msg.tool_call_id = Some(call.id.clone());
        self.messages.push(msg);
        self.call(tx)
    }

    fn call(&mut self, tx: &mut Transcript) -> Result<ChatReply> {
        if self.budget == 0 {
            return Err(Error::Budget(format!("{}: chat call budget exhausted", self.role)));
        }
        self.budget -= 1;
        self.calls += 1;
        let reply = self.backend.complete(&ChatRequest {
            messages: &self.messages,
            tools: &self.tools,
        })?;
        match &reply {
            ChatReply::Text { text } => {
                tx.push(self.round, &self.role, EntryKind::Reply, text.clone());
                self.messages.push(Message::new(Role::Assistant, text.clone()));
            }
            ChatReply::ToolCall(call) => {
                let mut call = call.clone();
                if call.id.is_empty() {
                    call.id = format!("call_{}", self.calls);
                }
                tx.push(
                    self.round,
                    &self.role,
                    EntryKind::ToolCall,
                    format!("{}({})", call.name, call.arguments),
                );
                tx.annotate_last(serde_json::to_value(&call).unwrap_or_default());
                let mut msg = Message::new(Role::Assistant, "");
                msg.tool_call = Some(call.clone());
                self.messages.push(msg);
                return Ok(ChatReply::ToolCall(call));
            }
        }
        Ok(reply)
    }
}
