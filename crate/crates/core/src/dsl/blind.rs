use serde::Serialize;
use serde_json::json;

use super::exec::execute_plan;
use super::plan::{parse_plan, Tool, ToolPlan};
use crate::agent::{AgentConfig, HistoryKind, HistoryTracker, RunFailure, ScreeningResult, TerminatedBy};
use crate::backends::{ChatBackend, ChatSession, Grounder, ToolCall};
use crate::domain::{ScreeningPair, VideoMeta};
use crate::error::{Error, Result};
use crate::prompts::{PromptSet, BLIND_FORMAT};
use crate::protocol::{converse, fenced_block, parse_fields};
use crate::transcript::Transcript;

pub const BLIND_ROLE: &str = "blind";

#[derive(Clone, Debug, Serialize)]
struct BlindReply {
    rewritten_query: String,
    plan: String,
    #[serde(skip)]
    parsed: Option<ToolPlan>,
}

fn parse_reply(text: &str) -> Result<BlindReply> {
    let plan_text = fenced_block(text, Some("plan"))
        .ok_or_else(|| Error::protocol("reply has no ```plan block"))?
        .to_string();
    let without_plan = text.replacen(&format!("```plan\n{plan_text}```"), "", 1);
    let q = parse_fields(&without_plan, &["rewritten_query"])?.require("rewritten_query")?.to_string();
    if q.is_empty() {
        return Err(Error::protocol("rewritten_query is empty"));
    }
    let parsed = parse_plan(&plan_text).map_err(|e| Error::protocol(format!("plan: {e}")))?;
    Ok(BlindReply { rewritten_query: q, plan: plan_text, parsed: Some(parsed) })
}

/// The video-blind variant: one exchange yields a rewritten query and a tool
/// plan, which is then executed without further model involvement.
///
/// A plan that selects no frames leaves the video untrimmed, with a warning.
pub fn run_tvs_blind(
    meta: &VideoMeta,
    query: &str,
    llm: &dyn ChatBackend,
    grounder: Option<&dyn Grounder>,
    prompts: &PromptSet,
    _cfg: &AgentConfig,
) -> std::result::Result<ScreeningResult, RunFailure> {
    let mut tx = Transcript::new();
    match blind_inner(meta, query, llm, grounder, prompts, &mut tx) {
        Ok(mut r) => {
            r.transcript = tx;
            Ok(r)
        }
        Err(error) => Err(RunFailure { error, transcript: tx }),
    }
}

fn blind_inner(
    meta: &VideoMeta,
    query: &str,
    llm: &dyn ChatBackend,
    grounder: Option<&dyn Grounder>,
    prompts: &PromptSet,
    tx: &mut Transcript,
) -> Result<ScreeningResult> {
    let original = ScreeningPair::new(meta.full_extent(), query)?;
    let resolution = meta.resolution.map_or("unknown".to_string(), |r| format!("{}x{}", r.width, r.height));
    let prompt = prompts.blind.render(&[
        ("query", query),
        ("tools", &Tool::catalogue()),
        ("duration", &format!("{:.1}", meta.duration)),
        ("fps", &format!("{}", meta.frame_rate)),
        ("total_frames", &meta.total_frames.to_string()),
        ("resolution", &resolution),
    ])?;
    let mut session = ChatSession::open(llm, tx, BLIND_ROLE, 1, None, vec![], 2);
    let mut no_tools = |call: &ToolCall, _: &mut Transcript| -> Result<String> {
        Err(Error::protocol(format!("the blind agent cannot call tools, called `{}`", call.name)))
    };
    let reply = converse(&mut session, tx, &prompt, 0, &mut no_tools, &parse_reply, BLIND_FORMAT)?;
    let plan = reply.parsed.expect("parse_reply fills the plan");
    let exec = execute_plan(&plan, meta, grounder).map_err(|e| match e {
        Error::Unavailable(m) => Error::Unavailable(format!("{m}\nplan:\n{}", reply.plan)),
        e @ (Error::Backend { .. } | Error::Budget(_) | Error::ScriptMismatch(_) | Error::Caption { .. }) => e,
        e => Error::Type(format!("{e}\nplan:\n{}", reply.plan)),
    })?;
    tx.event(
        1,
        format!("executed plan -> {}", exec.segments),
        json!({"segments": exec.segments, "warnings": exec.warnings, "grounder_calls": exec.grounder_calls}),
    );
    let mut warnings = exec.warnings.clone();
    let video = if exec.segments.is_empty() {
        warnings.push("plan selected no frames; the video is left untrimmed".to_string());
        original.video.clone()
    } else {
        exec.segments
    };
    let mut success = HistoryTracker::new(HistoryKind::Success);
    success.append(query, &reply.rewritten_query, &plan.to_string());
    Ok(ScreeningResult {
        pair: ScreeningPair::new(video, reply.rewritten_query)?,
        rounds: 1,
        terminated_by: TerminatedBy::FinalAnswer,
        success_history: success,
        failure_history: HistoryTracker::new(HistoryKind::Failure),
        non_shrinking_rounds: Vec::new(),
        warnings,
        transcript: Transcript::new(),
    })
}
