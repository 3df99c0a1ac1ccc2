use serde_json::json;

use super::types::*;
use crate::backends::{ChatBackend, ChatReply, ChatSession};
use crate::domain::{ScreeningPair, SegmentSet, TimeRange, VideoMeta, TIME_EPS};
use crate::error::{Error, Result};
use crate::prompts::{PromptSet, LAUNCHER_FORMAT, VALIDATOR_FORMAT};
use crate::protocol::{converse, parse_fields, parse_number, parse_pairs};
use crate::transcript::Transcript;
use crate::viewer::ViewerService;

pub const LAUNCHER_ROLE: &str = "launcher";
pub const VALIDATOR_ROLE: &str = "validator";

/// The chat models behind the two agents of the full variant.
#[derive(Clone, Copy)]
pub struct AgentBackends<'a> {
    pub launcher: &'a dyn ChatBackend,
    pub validator: &'a dyn ChatBackend,
}

fn parse_launcher(text: &str) -> Result<LauncherOutput> {
    let f = parse_fields(text, &["decision", "rewritten_query", "instruction"])?;
    let decision = match f.require("decision")?.to_ascii_lowercase().as_str() {
        "proceed" => Decision::Proceed,
        "stop" => Decision::Stop,
        other => return Err(Error::protocol(format!("decision must be proceed or stop, got `{other}`"))),
    };
    let q = f.get("rewritten_query").unwrap_or("").to_string();
    let i = f.get("instruction").unwrap_or("").to_string();
    if decision == Decision::Proceed && (q.is_empty() || i.is_empty()) {
        return Err(Error::protocol("proceed needs both rewritten_query and instruction"));
    }
    Ok(LauncherOutput { decision, rewritten_query: q, instruction: i })
}

/// One single-turn launcher exchange. The prompt is built from the query and
/// the two histories only.
pub fn launcher_step(
    q_prev: &str,
    success: &HistoryTracker,
    failure: &HistoryTracker,
    llm: &dyn ChatBackend,
    prompts: &PromptSet,
    tx: &mut Transcript,
    round: usize,
) -> Result<LauncherOutput> {
    PromptSet::check_role(LAUNCHER_ROLE, &prompts.launcher)?;
    let prompt = prompts.launcher.render(&[
        ("query", q_prev),
        ("success_history", &success.render()),
        ("failure_history", &failure.render()),
    ])?;
    let mut session = ChatSession::open(llm, tx, LAUNCHER_ROLE, round, None, vec![], 2);
    let mut no_tools = |call: &crate::backends::ToolCall, _: &mut Transcript| -> Result<String> {
        Err(Error::protocol(format!("launcher has no tools, called `{}`", call.name)))
    };
    converse(&mut session, tx, &prompt, 0, &mut no_tools, &parse_launcher, LAUNCHER_FORMAT)
}

pub(crate) fn parse_segments(text: &str) -> Result<SegmentSet> {
    let pairs = parse_pairs(text)?;
    let set = SegmentSet::from_pairs(&pairs).map_err(|e| Error::protocol(e.to_string()))?;
    if set.is_empty() {
        return Err(Error::protocol("segments list is empty"));
    }
    Ok(set)
}

fn parse_validator(text: &str) -> Result<ValidatorOutput> {
    let f = parse_fields(text, &["judgement", "request", "start", "end", "text", "segments", "reason"])?;
    let judgement = match f.require("judgement")?.to_ascii_lowercase().as_str() {
        "succeeded" => Judgement::Succeeded,
        "failed" => Judgement::Failed,
        "view" => Judgement::View,
        other => return Err(Error::protocol(format!("judgement must be succeeded, failed or view, got `{other}`"))),
    };
    let mut out = ValidatorOutput { judgement, request: None, result: None, reason: None };
    match judgement {
        Judgement::View => {
            out.request = Some(match f.require("request")?.to_ascii_lowercase().as_str() {
                "scan" => {
                    let (s, e) = (parse_number(f.require("start")?)?, parse_number(f.require("end")?)?);
                    TimeRange::new(s, e).map_err(|err| Error::protocol(err.to_string()))?;
                    ViewRequest::Scan { start: s, end: e }
                }
                "localize" => {
                    let text = f.require("text")?;
                    if text.is_empty() {
                        return Err(Error::protocol("localize request needs text"));
                    }
                    ViewRequest::Localize { text: text.to_string() }
                }
                other => return Err(Error::protocol(format!("request must be scan or localize, got `{other}`"))),
            })
        }
        Judgement::Succeeded => out.result = Some(parse_segments(f.require("segments")?)?),
        Judgement::Failed => {
            let reason = f.require("reason")?;
            if reason.is_empty() {
                return Err(Error::protocol("failed needs a reason"));
            }
            out.reason = Some(reason.to_string());
        }
    }
    Ok(out)
}

/// Runs one validator session, serving its view requests through `viewer`.
///
/// A succeeded result is clamped into `[0, duration]` of the original video.
#[allow(clippy::too_many_arguments)]
pub fn validator_step(
    q_prev: &str,
    q_new: &str,
    instruction: &str,
    current: &SegmentSet,
    viewer: &dyn ViewerService,
    llm: &dyn ChatBackend,
    prompts: &PromptSet,
    cfg: &AgentConfig,
    tx: &mut Transcript,
    round: usize,
) -> Result<Verdict> {
    let duration = viewer.duration();
    let prompt = prompts.validator.render(&[
        ("query_before", q_prev),
        ("query_after", q_new),
        ("instruction", instruction),
        ("extent", &current.to_string()),
        ("duration", &format!("{duration:.1}")),
    ])?;
    let mut session = ChatSession::open(llm, tx, VALIDATOR_ROLE, round, None, vec![], cfg.view_budget + 3);
    let mut reply = session.ask(tx, &prompt)?;
    let mut views = 0;
    let mut repaired = false;
    loop {
        let parsed = match &reply {
            ChatReply::Text { text } => parse_validator(text),
            ChatReply::ToolCall(c) => Err(Error::protocol(format!("validator has no tools, called `{}`", c.name))),
        };
        let out = match parsed {
            Ok(out) => out,
            Err(e) if !repaired => {
                repaired = true;
                let msg = format!(
                    "Your previous reply could not be used: {e}\nReply again using exactly this format:\n{VALIDATOR_FORMAT}"
                );
                reply = session.ask(tx, &msg)?;
                continue;
            }
            Err(e) => return Err(Error::protocol(format!("validator: unusable reply after repair: {e}"))),
        };
        tx.annotate_last(serde_json::to_value(&out)?);
        match out.judgement {
            Judgement::Failed => return Ok(Verdict::Failed(out.reason.unwrap_or_default())),
            Judgement::Succeeded => {
                let raw = out.result.expect("parser guarantees a result");
                let clamped = raw.clamp_to(duration);
                if clamped != raw {
                    tx.event(round, format!("validator result {raw} clamped to {clamped}"), json!({"warning": "clamped"}));
                }
                if clamped.is_empty() {
                    return Ok(Verdict::Failed(format!("result {raw} lies outside the video")));
                }
                return Ok(Verdict::Succeeded(clamped));
            }
            Judgement::View => {
                views += 1;
                if views > cfg.view_budget {
                    let reason = format!("view budget of {} requests exhausted", cfg.view_budget);
                    tx.event(round, reason.clone(), json!({"budget": "view"}));
                    return Ok(Verdict::Failed(reason));
                }
                let served = match out.request.expect("parser guarantees a request") {
                    ViewRequest::Scan { start, end } => {
                        let range = TimeRange::new(start, end.min(duration))?;
                        viewer.scan(tx, round, range).map(|s| format!("Viewer scan of {range}: {s}"))
                    }
                    ViewRequest::Localize { text } => viewer
                        .localize(tx, round, &text)
                        .map(|(r, _)| format!("Viewer localized \"{text}\" to {r}")),
                };
                let msg = match served {
                    Ok(m) => m,
                    Err(Error::Budget(m)) => {
                        let reason = format!("viewer budget exhausted: {m}");
                        tx.event(round, reason.clone(), json!({"budget": "viewer"}));
                        return Ok(Verdict::Failed(reason));
                    }
                    Err(e) => return Err(e),
                };
                reply = session.ask(tx, &msg)?;
            }
        }
    }
}

/// The launcher/validator loop. Each proceed decision counts as one round;
/// after `max_rounds` of them the run ends with the last committed pair.
pub fn run_tvs(
    meta: &VideoMeta,
    query: &str,
    viewer: &dyn ViewerService,
    backends: AgentBackends<'_>,
    prompts: &PromptSet,
    cfg: &AgentConfig,
) -> std::result::Result<ScreeningResult, RunFailure> {
    let mut tx = Transcript::new();
    match run_tvs_inner(meta, query, viewer, backends, prompts, cfg, &mut tx) {
        Ok(mut r) => {
            r.transcript = tx;
            Ok(r)
        }
        Err(error) => Err(RunFailure { error, transcript: tx }),
    }
}

fn run_tvs_inner(
    meta: &VideoMeta,
    query: &str,
    viewer: &dyn ViewerService,
    backends: AgentBackends<'_>,
    prompts: &PromptSet,
    cfg: &AgentConfig,
    tx: &mut Transcript,
) -> Result<ScreeningResult> {
    if cfg.max_rounds == 0 {
        return Err(Error::validation("max_rounds must be at least 1"));
    }
    let original = ScreeningPair::new(meta.full_extent(), query)?;
    let mut v_copy = original.video.clone();
    let mut q_copy = original.query.clone();
    let mut success = HistoryTracker::new(HistoryKind::Success);
    let mut failure = HistoryTracker::new(HistoryKind::Failure);
    let mut non_shrinking = Vec::new();
    let mut warnings = Vec::new();
    let mut rounds = 0;
    let terminated_by = loop {
        if rounds >= cfg.max_rounds {
            tx.event(rounds, format!("round cap {} reached", cfg.max_rounds), json!({"terminated_by": "round_cap"}));
            break TerminatedBy::RoundCap;
        }
        let round = rounds + 1;
        let out = launcher_step(&q_copy, &success, &failure, backends.launcher, prompts, tx, round)?;
        if out.decision == Decision::Stop {
            tx.event(round, "launcher stopped", json!({"terminated_by": "launcher_stop"}));
            break TerminatedBy::LauncherStop;
        }
        rounds = round;
        let verdict = validator_step(
            &q_copy,
            &out.rewritten_query,
            &out.instruction,
            &v_copy,
            viewer,
            backends.validator,
            prompts,
            cfg,
            tx,
            round,
        )?;
        match verdict {
            Verdict::Succeeded(seg) => {
                if seg.total_duration() > v_copy.total_duration() + TIME_EPS {
                    non_shrinking.push(round);
                    warnings.push(format!("round {round}: committed set {seg} is longer than {v_copy}"));
                    tx.event(round, format!("round {round} enlarged the video"), json!({"non_shrinking": true}));
                }
                success.append(&q_copy, &out.rewritten_query, &out.instruction);
                failure.clear();
                tx.event(
                    round,
                    format!("committed {seg}"),
                    json!({"commit": seg, "query": out.rewritten_query}),
                );
                v_copy = seg;
                q_copy = out.rewritten_query;
            }
            Verdict::Failed(reason) => {
                failure.append(&q_copy, &out.rewritten_query, &out.instruction);
                tx.event(round, format!("round failed: {reason}"), json!({"failed": reason}));
            }
        }
    };
    Ok(ScreeningResult {
        pair: ScreeningPair::new(v_copy, q_copy)?,
        rounds,
        terminated_by,
        success_history: success,
        failure_history: failure,
        non_shrinking_rounds: non_shrinking,
        warnings,
        transcript: Transcript::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn launcher_parsing() {
        let out = parse_launcher("decision: proceed\nrewritten_query: What is added?\ninstruction: keep 10s-30s").unwrap();
        assert_eq!(out.decision, Decision::Proceed);
        assert_eq!(parse_launcher("decision: STOP").unwrap().decision, Decision::Stop);
        assert!(parse_launcher("decision: proceed\nrewritten_query: x").is_err());
        assert!(parse_launcher("decision: maybe").is_err());
    }

    #[test]
    fn validator_parsing() {
        let v = parse_validator("judgement: view\nrequest: scan\nstart: 0\nend: 10").unwrap();
        assert_eq!(v.request, Some(ViewRequest::Scan { start: 0.0, end: 10.0 }));
        let v = parse_validator("judgement: succeeded\nsegments: [[30, 40], [10, 20]]").unwrap();
        assert_eq!(v.result.unwrap().to_pairs(), vec![(10.0, 20.0), (30.0, 40.0)]);
        assert!(parse_validator("judgement: succeeded\nsegments: []").is_err());
        assert!(parse_validator("judgement: failed").is_err());
        assert!(parse_validator("judgement: view\nrequest: scan\nstart: 5\nend: 1").is_err());
    }
}
