use serde::Serialize;
use serde_json::{json, Value};

use super::run::parse_segments;
use super::types::*;
use crate::backends::{ChatBackend, ChatSession, ToolCall, ToolSpec};
use crate::domain::{ScreeningPair, SegmentSet};
use crate::error::{Error, Result};
use crate::prompts::{PromptSet, SIMPLE_FORMAT};
use crate::protocol::{converse, parse_fields};
use crate::transcript::Transcript;
use crate::viewer::{format_captions, CaptionTool, ViewerService};

pub const SIMPLE_ROLE: &str = "agent";

#[derive(Clone, Debug, Serialize)]
struct FinalAnswer {
    segments: SegmentSet,
    rewritten_query: String,
}

fn tool_specs() -> Vec<ToolSpec> {
    let num = json!({"type": "number"});
    vec![
        ToolSpec {
            name: "prep".into(),
            description: "Captions of the keyframes between start and end seconds.".into(),
            parameters: json!({"type": "object", "properties": {"start": num, "end": num}, "required": ["start", "end"]}),
        },
        CaptionTool::spec(),
        ToolSpec {
            name: "localize".into(),
            description: "Time range in seconds where the described event happens.".into(),
            parameters: json!({"type": "object", "properties": {"text": {"type": "string"}}, "required": ["text"]}),
        },
    ]
}

fn num_arg(call: &ToolCall, key: &str) -> Result<f64> {
    call.arguments
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::protocol(format!("{} needs a numeric `{key}`, got {}", call.name, call.arguments)))
}

/// The single-agent variant: one session with prep, caption_at and localize
/// tools that ends in a final answer.
pub fn run_tvs_simple(
    query: &str,
    caption_tool: CaptionTool<'_>,
    viewer: &dyn ViewerService,
    llm: &dyn ChatBackend,
    prompts: &PromptSet,
    cfg: &AgentConfig,
) -> std::result::Result<ScreeningResult, RunFailure> {
    let mut tx = Transcript::new();
    match simple_inner(query, caption_tool, viewer, llm, prompts, cfg, &mut tx) {
        Ok(mut r) => {
            r.transcript = tx;
            Ok(r)
        }
        Err(error) => Err(RunFailure { error, transcript: tx }),
    }
}

fn simple_inner(
    query: &str,
    caption_tool: CaptionTool<'_>,
    viewer: &dyn ViewerService,
    llm: &dyn ChatBackend,
    prompts: &PromptSet,
    cfg: &AgentConfig,
    tx: &mut Transcript,
) -> Result<ScreeningResult> {
    let meta = caption_tool.index.video();
    ScreeningPair::new(meta.full_extent(), query)?;
    let d = meta.duration;
    let prompt = prompts.simple.render(&[("query", query), ("duration", &format!("{d:.1}"))])?;
    let mut session = ChatSession::open(llm, tx, SIMPLE_ROLE, 1, None, tool_specs(), cfg.tool_budget + 2);
    let mut on_tool = |call: &ToolCall, tx: &mut Transcript| -> Result<String> {
        match call.name.as_str() {
            "prep" => {
                let (s, e) = (num_arg(call, "start")?, num_arg(call, "end")?);
                let entries = caption_tool.index.prep(s, e).map_err(|err| Error::protocol(err.to_string()))?;
                Ok(format_captions(entries))
            }
            "caption_at" => caption_tool.serve(call).map(|(text, _)| text),
            "localize" => {
                let text = call
                    .arguments
                    .get("text")
                    .and_then(Value::as_str)
                    .filter(|t| !t.trim().is_empty())
                    .ok_or_else(|| Error::protocol(format!("localize needs `text`, got {}", call.arguments)))?;
                viewer.localize(tx, 1, text).map(|(r, _)| r.to_string())
            }
            other => Err(Error::protocol(format!("unknown tool `{other}`"))),
        }
    };
    let parse = |text: &str| -> Result<FinalAnswer> {
        let f = parse_fields(text, &["segments", "rewritten_query"])?;
        let segments = parse_segments(f.require("segments")?)?.clamp_to(d);
        if segments.is_empty() {
            return Err(Error::protocol("segments lie outside the video"));
        }
        let q = f.require("rewritten_query")?;
        if q.is_empty() {
            return Err(Error::protocol("rewritten_query is empty"));
        }
        Ok(FinalAnswer { segments, rewritten_query: q.to_string() })
    };
    let answer = converse(&mut session, tx, &prompt, cfg.tool_budget, &mut on_tool, &parse, SIMPLE_FORMAT).map_err(
        |e| match e {
            Error::Budget(m) => Error::protocol(format!("no final answer before the tool budget ran out ({m})")),
            e => e,
        },
    )?;
    tx.event(1, format!("final answer {}", answer.segments), json!({"terminated_by": "final_answer"}));
    let mut success = HistoryTracker::new(HistoryKind::Success);
    success.append(query, &answer.rewritten_query, "single-agent final answer");
    Ok(ScreeningResult {
        pair: ScreeningPair::new(answer.segments, answer.rewritten_query)?,
        rounds: 1,
        terminated_by: TerminatedBy::FinalAnswer,
        success_history: success,
        failure_history: HistoryTracker::new(HistoryKind::Failure),
        non_shrinking_rounds: Vec::new(),
        warnings: Vec::new(),
        transcript: Transcript::new(),
    })
}
