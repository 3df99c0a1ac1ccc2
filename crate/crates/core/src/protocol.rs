//! Structured replies: agents answer with `key: value` fields inside a fenced
//! block, e.g.
//!
//! ````text
//! ```tvs
//! decision: proceed
//! rewritten_query: What is added to the pan?
//! ```
//! ````
//!
//! Only keys the caller expects start a new field; any other line continues
//! the previous value, so free text inside a value is harmless.

use serde::Serialize;

use crate::backends::{ChatReply, ChatSession, ToolCall};
use crate::error::{Error, Result};
use crate::transcript::Transcript;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fields {
    fields: Vec<(String, String)>,
}

impl Fields {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        match self.get(key) {
            Some(v) if !v.trim().is_empty() => Ok(v.trim()),
            _ => Err(Error::protocol(format!("missing field `{key}`"))),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Body of the first fenced block whose info string is `lang` (any fence when `None`).
pub fn fenced_block<'a>(text: &'a str, lang: Option<&str>) -> Option<&'a str> {
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let line_end = after.find('\n')?;
        let info = after[..line_end].trim();
        let body = &after[line_end + 1..];
        let close = body.find("```")?;
        if lang.map_or(true, |l| info == l) {
            return Some(&body[..close]);
        }
        rest = &body[close + 3..];
    }
    None
}

/// Parses `key: value` fields from the `tvs` fenced block, or from any fenced
/// block, or from the whole text when there is no fence.
pub fn parse_fields(text: &str, known: &[&str]) -> Result<Fields> {
    let body = fenced_block(text, Some("tvs"))
        .or_else(|| fenced_block(text, None))
        .unwrap_or(text);
    let mut fields: Vec<(String, String)> = Vec::new();
    for line in body.lines() {
        let key = line
            .split_once(':')
            .map(|(k, _)| k.trim())
            .filter(|k| known.contains(k));
        match key {
            Some(k) => {
                let value = line.split_once(':').unwrap().1.trim().to_string();
                fields.push((k.to_string(), value));
            }
            None => {
                if let Some((_, v)) = fields.last_mut() {
                    if !line.trim().is_empty() {
                        if !v.is_empty() {
                            v.push('\n');
                        }
                        v.push_str(line.trim());
                    }
                }
            }
        }
    }
    if fields.is_empty() {
        return Err(Error::protocol(format!(
            "reply has none of the expected fields ({})",
            known.join(", ")
        )));
    }
    Ok(Fields { fields })
}

/// Renders fields the way agents are asked to reply. Used by test scripts.
pub fn render_fields(fields: &[(&str, &str)]) -> String {
    let mut out = String::from("```tvs\n");
    for (k, v) in fields {
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    }
    out.push_str("```");
    out
}

pub fn parse_number(s: &str) -> Result<f64> {
    let t = s.trim().trim_end_matches('s').trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::protocol(format!("`{s}` is not a number")))
}

/// Comma- or whitespace-separated numbers, optionally wrapped in brackets.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(parse_number)
        .collect()
}

/// A JSON-style list of `[start, end]` pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    let v: Vec<[f64; 2]> = serde_json::from_str(s.trim())
        .map_err(|e| Error::protocol(format!("`{}` is not a list of [start, end] pairs: {e}", s.trim())))?;
    Ok(v.into_iter().map(|[a, b]| (a, b)).collect())
}

/// Drives one conversation until `parse` accepts a text reply.
///
/// Tool calls are answered by `on_tool` until more than `tool_budget` have
/// been made. A reply `parse` rejects earns exactly one repair re-prompt;
/// a second rejection is a protocol error.
pub(crate) fn converse<T: Serialize>(
    session: &mut ChatSession<'_>,
    tx: &mut Transcript,
    opening: &str,
    tool_budget: usize,
    on_tool: &mut dyn FnMut(&ToolCall, &mut Transcript) -> Result<String>,
    parse: &dyn Fn(&str) -> Result<T>,
    reply_format: &str,
) -> Result<T> {
    let mut reply = session.ask(tx, opening)?;
    let mut tool_calls = 0;
    let mut repaired = false;
    loop {
        match reply {
            ChatReply::ToolCall(call) => {
                tool_calls += 1;
                if tool_calls > tool_budget {
                    return Err(Error::Budget(format!(
                        "{}: more than {tool_budget} tool calls",
                        session.role()
                    )));
                }
                let result = on_tool(&call, tx)?;
                reply = session.answer_tool(tx, &call, &result)?;
            }
            ChatReply::Text { text } => match parse(&text) {
                Ok(v) => {
                    tx.annotate_last(serde_json::to_value(&v).unwrap_or_default());
                    return Ok(v);
                }
                Err(e) if !repaired => {
                    repaired = true;
                    let msg = format!(
                        "Your previous reply could not be used: {e}\nReply again using exactly this format:\n{reply_format}"
                    );
                    reply = session.ask(tx, &msg)?;
                }
                Err(e) => {
                    return Err(Error::protocol(format!(
                        "{}: unusable reply after repair: {e}",
                        session.role()
                    )))
                }
            },
        }
    }
}
