//! Scripted launcher/validator runs with hand-traced expected outcomes.

use tvs_core::agent::{run_tvs, AgentBackends, AgentConfig, ScreeningResult, TerminatedBy};
use tvs_core::backends::{ChatReply, MockCaptioner, ScriptedChat};
use tvs_core::domain::{SegmentSet, VideoMeta};
use tvs_core::prompts::PromptSet;
use tvs_core::protocol::render_fields;
use tvs_core::transcript::EntryKind;
use tvs_core::viewer::{KeyframeEntry, KeyframeIndex, Viewer};

pub const QUERY: &str = "What is added to the pan after the onions are chopped?";

/// A 100 s, 25 fps video with sentinel captions every 10 s.
pub fn sentinel_index() -> KeyframeIndex {
    let meta = VideoMeta::derived("replay", 100.0, 25.0).unwrap();
    let entries = (0..10)
        .map(|i| {
            let t = 10.0 * i as f64;
            let frame_index = (t * 25.0) as u64;
            KeyframeEntry { timestamp: t, frame_index, caption: MockCaptioner::sentinel(frame_index), embedding_row: i }
        })
        .collect();
    KeyframeIndex::new(meta, entries).unwrap()
}

fn t(fields: &[(&str, &str)]) -> ChatReply {
    ChatReply::text(render_fields(fields))
}

pub fn stop() -> ChatReply {
    t(&[("decision", "stop")])
}

pub fn proceed(q: &str, instruction: &str) -> ChatReply {
    t(&[("decision", "proceed"), ("rewritten_query", q), ("instruction", instruction)])
}

pub fn succeeded(segments: &str) -> ChatReply {
    t(&[("judgement", "succeeded"), ("segments", segments)])
}

pub fn failed(reason: &str) -> ChatReply {
    t(&[("judgement", "failed"), ("reason", reason)])
}

pub fn scan(start: &str, end: &str) -> ChatReply {
    t(&[("judgement", "view"), ("request", "scan"), ("start", start), ("end", end)])
}

pub fn localize(text: &str) -> ChatReply {
    t(&[("judgement", "view"), ("request", "localize"), ("text", text)])
}

pub fn summary(s: &str) -> ChatReply {
    t(&[("summary", s)])
}

pub struct Scenario {
    pub name: &'static str,
    pub launcher: Vec<ChatReply>,
    pub validator: Vec<ChatReply>,
    pub viewer: Vec<ChatReply>,
    pub cfg: AgentConfig,
    pub expect: Expect,
}

/// The hand-traced outcome.
pub struct Expect {
    pub segments: Vec<(f64, f64)>,
    pub query: &'static str,
    pub rounds: usize,
    pub terminated_by: TerminatedBy,
    pub success_len: usize,
    pub failure_len: usize,
    pub non_shrinking: Vec<usize>,
}

pub fn scenarios() -> Vec<Scenario> {
    let cfg = AgentConfig::default();
    vec![
        Scenario {
            name: "immediate_stop",
            launcher: vec![stop()],
            validator: vec![],
            viewer: vec![],
            cfg: cfg.clone(),
            expect: Expect {
                segments: vec![(0.0, 100.0)],
                query: QUERY,
                rounds: 0,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 0,
                failure_len: 0,
                non_shrinking: vec![],
            },
        },
        Scenario {
            name: "single_round_success",
            launcher: vec![proceed("What is added to the pan?", "keep the part after the chopping"), stop()],
            validator: vec![scan("0", "50"), succeeded("[[10, 40]]")],
            viewer: vec![summary("onions are chopped, then oil goes into a pan")],
            cfg: cfg.clone(),
            expect: Expect {
                segments: vec![(10.0, 40.0)],
                query: "What is added to the pan?",
                rounds: 1,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 1,
                failure_len: 0,
                non_shrinking: vec![],
            },
        },
        Scenario {
            name: "fail_then_succeed",
            launcher: vec![
                proceed("What is added?", "keep only the frying"),
                proceed("What is added to the pan?", "keep from the chopping onwards"),
                stop(),
            ],
            validator: vec![failed("REASON-SENTINEL frying is not visible"), succeeded("[[20, 30]]")],
            viewer: vec![],
            cfg: cfg.clone(),
            expect: Expect {
                segments: vec![(20.0, 30.0)],
                query: "What is added to the pan?",
                rounds: 2,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 1,
                failure_len: 0,
                non_shrinking: vec![],
            },
        },
        Scenario {
            name: "view_budget_exhaustion",
            launcher: vec![proceed("What is added?", "keep the frying"), stop()],
            validator: vec![scan("0", "10"), scan("10", "20"), scan("20", "30")],
            viewer: vec![summary("a cutting board"), summary("a knife")],
            cfg: AgentConfig { view_budget: 2, ..cfg.clone() },
            expect: Expect {
                segments: vec![(0.0, 100.0)],
                query: QUERY,
                rounds: 1,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 0,
                failure_len: 1,
                non_shrinking: vec![],
            },
        },
        Scenario {
            name: "round_cap",
            launcher: vec![proceed("What is added?", "drop the ending"), proceed("What is added to it?", "keep the middle")],
            validator: vec![succeeded("[[0, 80]]"), succeeded("[[10, 60]]")],
            viewer: vec![],
            cfg: AgentConfig { max_rounds: 2, ..cfg.clone() },
            expect: Expect {
                segments: vec![(10.0, 60.0)],
                query: "What is added to it?",
                rounds: 2,
                terminated_by: TerminatedBy::RoundCap,
                success_len: 2,
                failure_len: 0,
                non_shrinking: vec![],
            },
        },
        Scenario {
            name: "enlargement_flag",
            launcher: vec![
                proceed("What is added?", "keep 10-30"),
                proceed("What is added to the pan?", "widen to the first half"),
                stop(),
            ],
            validator: vec![succeeded("[[10, 30]]"), succeeded("[[0, 50]]")],
            viewer: vec![],
            cfg: cfg.clone(),
            expect: Expect {
                segments: vec![(0.0, 50.0)],
                query: "What is added to the pan?",
                rounds: 2,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 2,
                failure_len: 0,
                non_shrinking: vec![2],
            },
        },
        Scenario {
            name: "localize_then_clamped_result",
            launcher: vec![proceed("What is poured?", "keep the pouring"), stop()],
            validator: vec![localize("oil poured into the pan"), succeeded("[[90, 130]]")],
            viewer: vec![
                t(&[("timestamps", "[20, 40, 50, 60, 90]")]),
                t(&[("timestamp", "90")]),
                t(&[("start", "85"), ("end", "98")]),
            ],
            cfg: cfg.clone(),
            expect: Expect {
                segments: vec![(90.0, 100.0)],
                query: "What is poured?",
                rounds: 1,
                terminated_by: TerminatedBy::LauncherStop,
                success_len: 1,
                failure_len: 0,
                non_shrinking: vec![],
            },
        },
    ]
}

/// Runs a scenario; every script must be consumed exactly.
pub fn run(s: &Scenario) -> ScreeningResult {
    let index = sentinel_index();
    let prompts = PromptSet::default();
    let launcher = ScriptedChat::replies(s.launcher.clone()).strict();
    let validator = ScriptedChat::replies(s.validator.clone()).strict();
    let viewer_llm = ScriptedChat::replies(s.viewer.clone()).strict();
    let viewer = Viewer::new(&index, &viewer_llm, &prompts);
    run_tvs(
        index.video(),
        QUERY,
        &viewer,
        AgentBackends { launcher: &launcher, validator: &validator },
        &prompts,
        &s.cfg,
    )
    .unwrap_or_else(|f| panic!("{}: {}", s.name, f))
}

/// Compares a result with the hand-traced outcome.
pub fn check(s: &Scenario, r: &ScreeningResult) -> Result<(), String> {
    let e = &s.expect;
    let want = SegmentSet::from_pairs(&e.segments).unwrap();
    let got = (
        &r.pair.video,
        r.pair.query.as_str(),
        r.rounds,
        r.terminated_by,
        r.success_history.len(),
        r.failure_history.len(),
        &r.non_shrinking_rounds,
    );
    let exp = (&want, e.query, e.rounds, e.terminated_by, e.success_len, e.failure_len, &e.non_shrinking);
    if got != exp {
        return Err(format!("{}: got {got:?}, expected {exp:?}", s.name));
    }
    Ok(())
}

/// Launcher prompts in order.
pub fn launcher_prompts(r: &ScreeningResult) -> Vec<String> {
    r.transcript
        .by_role("launcher")
        .filter(|e| e.kind == EntryKind::Prompt)
        .map(|e| e.raw.clone())
        .collect()
}
