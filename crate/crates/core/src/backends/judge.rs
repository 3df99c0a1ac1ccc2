//! Scoring a rewritten query against a reference rewrite.

use super::chat::{ChatBackend, ChatReply, ChatRequest, Message, Role};
use crate::error::{Error, Result};
use crate::prompts::PromptTemplate;
use crate::protocol::{parse_fields, parse_number};

pub trait Judge: Send + Sync {
    /// Score in [0, 100].
    fn score(&self, original: &str, rewritten: &str, reference: &str) -> Result<f64>;
}

/// 100 on exact match after trimming, else 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactMatchJudge;

impl Judge for ExactMatchJudge {
    fn score(&self, _original: &str, rewritten: &str, reference: &str) -> Result<f64> {
        Ok(if rewritten.trim() == reference.trim() { 100.0 } else { 0.0 })
    }
}

/// Asks a chat model for a `score:` field. No rubric is built in; supply one
/// through the template.
pub struct LlmJudge<B> {
    backend: B,
    template: PromptTemplate,
}

impl<B: ChatBackend> LlmJudge<B> {
    pub fn new(backend: B, template: PromptTemplate) -> Result<Self> {
        template.check(&["original", "rewritten", "reference"], &["original", "rewritten", "reference"])?;
        Ok(LlmJudge { backend, template })
    }
}

impl<B: ChatBackend> Judge for LlmJudge<B> {
    fn score(&self, original: &str, rewritten: &str, reference: &str) -> Result<f64> {
        let prompt = self.template.render(&[
            ("original", original),
            ("rewritten", rewritten),
            ("reference", reference),
        ])?;
        let msgs = [Message::new(Role::User, prompt)];
        let reply = self.backend.complete(&ChatRequest { messages: &msgs, tools: &[] })?;
        let ChatReply::Text { text } = reply else {
            return Err(Error::protocol("judge replied with a tool call"));
        };
        let score = parse_number(parse_fields(&text, &["score"])?.require("score")?)?;
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::protocol(format!("judge score {score} outside [0, 100]")));
        }
        Ok(score)
    }
}

pub fn judge_rewrite(judge: Option<&dyn Judge>, original: &str, rewritten: &str, reference: &str) -> Result<f64> {
    for (name, s) in [("original", original), ("rewritten", rewritten), ("reference", reference)] {
        if s.trim().is_empty() {
            return Err(Error::validation(format!("judge_rewrite: {name} query is empty")));
        }
    }
    let judge = judge.ok_or_else(|| Error::Unavailable("no judge backend configured".into()))?;
    judge.score(original, rewritten, reference)
}
