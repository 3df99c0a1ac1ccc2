//! Model interfaces with live HTTP clients and scripted test doubles.

mod captioner;
mod chat;
mod grounder;
pub mod http;
mod judge;
mod scripted;

pub use captioner::{Captioner, FrameRef, HttpCaptioner, MockCaptioner, SidecarCaptioner};
pub use chat::{ChatBackend, ChatReply, ChatRequest, ChatSession, Message, Role, ToolCall, ToolSpec};
pub use grounder::{CaptionGrounder, Grounder, ScriptedGrounder};
pub use http::{HttpChatClient, HttpSettings};
pub use judge::{judge_rewrite, ExactMatchJudge, Judge, LlmJudge};
pub use scripted::{CountingChat, Matcher, ScriptEntry, ScriptedChat};
