use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::index::{format_captions, KeyframeEntry, KeyframeIndex};
use crate::backends::{Captioner, ChatBackend, ChatSession, FrameRef, ToolCall, ToolSpec};
use crate::domain::{TimeRange, TIME_EPS};
use crate::error::{Error, Result};
use crate::prompts::{PromptSet, SCAN_FORMAT, STAGE1_FORMAT, STAGE2_FORMAT, STAGE3_FORMAT};
use crate::protocol::{converse, parse_fields, parse_number, parse_number_list};
use crate::transcript::Transcript;

/// Seconds added on both sides of the stage-3 range.
pub const LOCALIZE_PAD: f64 = 5.0;
pub const STAGE1_CANDIDATES: usize = 5;
/// Half-width of the caption window shown to stage 3 around the chosen time.
pub const STAGE3_WINDOW: f64 = 30.0;
pub const DEFAULT_TOOL_BUDGET: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizeTrace {
    pub stage1_candidates: Vec<f64>,
    pub stage2_choice: f64,
    pub stage3_raw: TimeRange,
    pub padded: TimeRange,
    pub extra_caption_requests: usize,
    /// Off-keyframe requests answered with the nearest keyframe's caption.
    pub nearest_keyframe_fallbacks: usize,
}

pub fn pad_and_clamp(raw: TimeRange, duration: f64) -> Result<TimeRange> {
    TimeRange::new((raw.start() - LOCALIZE_PAD).max(0.0), (raw.end() + LOCALIZE_PAD).min(duration))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionSource {
    Keyframe,
    Live,
    NearestKeyframe,
}

/// Serves `caption_at(timestamp)`: stored caption when the time falls on a
/// keyframe, else the live captioner, else the nearest keyframe's caption.
#[derive(Clone, Copy)]
pub struct CaptionTool<'a> {
    pub index: &'a KeyframeIndex,
    pub live: Option<&'a dyn Captioner>,
}

impl<'a> CaptionTool<'a> {
    pub const NAME: &'static str = "caption_at";

    pub fn spec() -> ToolSpec {
        ToolSpec {
            name: Self::NAME.into(),
            description: "Caption of the video frame at the given time in seconds.".into(),
            parameters: json!({
                "type": "object",
                "properties": {"timestamp": {"type": "number"}},
                "required": ["timestamp"],
            }),
        }
    }

    pub fn caption_at(&self, t: f64) -> Result<(String, CaptionSource)> {
        let meta = self.index.video();
        let t = t.clamp(0.0, meta.duration);
        let nearest = self
            .index
            .nearest(t)
            .ok_or_else(|| Error::validation("caption_at: keyframe index is empty"))?;
        let half_frame = 0.5 / meta.frame_rate;
        if (nearest.timestamp - t).abs() <= half_frame + TIME_EPS {
            return Ok((nearest.caption.clone(), CaptionSource::Keyframe));
        }
        match self.live {
            Some(c) => {
                let frame = FrameRef { frame_index: meta.nearest_frame(t), timestamp: t };
                Ok((c.caption(&meta.vid_name, frame)?, CaptionSource::Live))
            }
            None => Ok((nearest.caption.clone(), CaptionSource::NearestKeyframe)),
        }
    }

    /// Answers a `caption_at` tool call.
    pub fn serve(&self, call: &ToolCall) -> Result<(String, CaptionSource)> {
        let t = call
            .arguments
            .get("timestamp")
            .and_then(Value::as_f64)
            .filter(|t| t.is_finite())
            .ok_or_else(|| Error::protocol(format!("caption_at needs a numeric timestamp, got {}", call.arguments)))?;
        let (caption, source) = self.caption_at(t)?;
        Ok((format!("[{t:.1}s] {caption}"), source))
    }
}

/// Video access for the validator and the single-agent variant.
pub trait ViewerService {
    fn duration(&self) -> f64;
    /// Summary of what happens in `range`.
    fn scan(&self, tx: &mut Transcript, round: usize, range: TimeRange) -> Result<String>;
    /// Time range showing `text`.
    fn localize(&self, tx: &mut Transcript, round: usize, text: &str) -> Result<(TimeRange, LocalizeTrace)>;
}

pub struct Viewer<'a> {
    pub index: &'a KeyframeIndex,
    pub llm: &'a dyn ChatBackend,
    pub live_captioner: Option<&'a dyn Captioner>,
    pub prompts: &'a PromptSet,
    pub tool_budget: usize,
}

#[derive(Default)]
struct ToolTally {
    calls: usize,
    fallbacks: usize,
}

impl<'a> Viewer<'a> {
    pub fn new(index: &'a KeyframeIndex, llm: &'a dyn ChatBackend, prompts: &'a PromptSet) -> Self {
        Viewer { index, llm, live_captioner: None, prompts, tool_budget: DEFAULT_TOOL_BUDGET }
    }

    pub fn caption_tool(&self) -> CaptionTool<'a> {
        CaptionTool { index: self.index, live: self.live_captioner }
    }

    /// One fresh conversation with the `caption_at` tool available.
    fn session<T: Serialize>(
        &self,
        tx: &mut Transcript,
        round: usize,
        role: &str,
        prompt: &str,
        parse: &dyn Fn(&str) -> Result<T>,
        format: &str,
        tally: &mut ToolTally,
    ) -> Result<T> {
        let tool = self.caption_tool();
        let mut session = ChatSession::open(self.llm, tx, role, round, None, vec![CaptionTool::spec()], self.tool_budget + 2);
        let mut on_tool = |call: &ToolCall, tx: &mut Transcript| -> Result<String> {
            if call.name != CaptionTool::NAME {
                return Err(Error::protocol(format!("{role}: unknown tool `{}`", call.name)));
            }
            let (text, source) = tool.serve(call)?;
            tally.calls += 1;
            if source == CaptionSource::NearestKeyframe {
                tally.fallbacks += 1;
            }
            tx.event(round, format!("caption_at served from {source:?}"), json!({"tool": call.name, "source": source}));
            Ok(text)
        };
        converse(&mut session, tx, prompt, self.tool_budget, &mut on_tool, parse, format)
    }

    fn captions(&self, entries: &[KeyframeEntry]) -> String {
        format_captions(entries)
    }
}

fn one_decimal(t: f64) -> String {
    format!("{t:.1}")
}

impl ViewerService for Viewer<'_> {
    fn duration(&self) -> f64 {
        self.index.video().duration
    }

    fn scan(&self, tx: &mut Transcript, round: usize, range: TimeRange) -> Result<String> {
        let entries = self.index.prep(range.start(), range.end())?;
        let prompt = self.prompts.scan.render(&[
            ("captions", &self.captions(entries)),
            ("start", &one_decimal(range.start())),
            ("end", &one_decimal(range.end())),
            ("duration", &one_decimal(self.duration())),
        ])?;
        let parse = |text: &str| -> Result<String> {
            let s = parse_fields(text, &["summary"])?.require("summary")?.to_string();
            if s.is_empty() {
                return Err(Error::protocol("empty summary"));
            }
            Ok(s)
        };
        self.session(tx, round, "viewer.scan", &prompt, &parse, SCAN_FORMAT, &mut ToolTally::default())
    }

    fn localize(&self, tx: &mut Transcript, round: usize, text: &str) -> Result<(TimeRange, LocalizeTrace)> {
        if self.index.is_empty() {
            return Err(Error::validation("localize: keyframe index is empty"));
        }
        let d = self.duration();
        let mut tally = ToolTally::default();

        let all = self.index.prep(0.0, d)?;
        let p1 = self.prompts.stage1.render(&[
            ("captions", &self.captions(all)),
            ("query", text),
            ("duration", &one_decimal(d)),
        ])?;
        let parse1 = |reply: &str| -> Result<Vec<f64>> {
            let ts = parse_number_list(parse_fields(reply, &["timestamps"])?.require("timestamps")?)?;
            if ts.len() != STAGE1_CANDIDATES {
                return Err(Error::protocol(format!("expected {STAGE1_CANDIDATES} timestamps, got {}", ts.len())));
            }
            if let Some(t) = ts.iter().find(|t| !(0.0..=d).contains(*t)) {
                return Err(Error::protocol(format!("timestamp {t} outside [0, {d}]")));
            }
            Ok(ts)
        };
        let candidates = self.session(tx, round, "viewer.stage1", &p1, &parse1, STAGE1_FORMAT, &mut tally)?;

        let mut near: Vec<KeyframeEntry> = candidates.iter().filter_map(|&t| self.index.nearest(t).cloned()).collect();
        near.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        near.dedup_by(|a, b| a.timestamp == b.timestamp);
        let cand_text = format!("[{}]", candidates.iter().map(|t| one_decimal(*t)).collect::<Vec<_>>().join(", "));
        let p2 = self.prompts.stage2.render(&[
            ("candidates", &cand_text),
            ("captions", &self.captions(&near)),
            ("query", text),
            ("duration", &one_decimal(d)),
        ])?;
        let parse2 = |reply: &str| -> Result<f64> {
            let t = parse_number(parse_fields(reply, &["timestamp"])?.require("timestamp")?)?;
            candidates
                .iter()
                .copied()
                .find(|c| (c - t).abs() <= 1e-6)
                .ok_or_else(|| Error::protocol(format!("{t} is not one of the candidates {cand_text}")))
        };
        let choice = self.session(tx, round, "viewer.stage2", &p2, &parse2, STAGE2_FORMAT, &mut tally)?;

        let window = self.index.prep((choice - STAGE3_WINDOW).max(0.0), (choice + STAGE3_WINDOW).min(d))?;
        let p3 = self.prompts.stage3.render(&[
            ("t_best", &one_decimal(choice)),
            ("captions", &self.captions(window)),
            ("query", text),
            ("duration", &one_decimal(d)),
        ])?;
        let parse3 = |reply: &str| -> Result<TimeRange> {
            let f = parse_fields(reply, &["start", "end"])?;
            let (s, e) = (parse_number(f.require("start")?)?, parse_number(f.require("end")?)?);
            if !(s >= 0.0 && e <= d + TIME_EPS) {
                return Err(Error::protocol(format!("range [{s}, {e}] outside [0, {d}]")));
            }
            let r = TimeRange::new(s, e.min(d)).map_err(|err| Error::protocol(err.to_string()))?;
            if !(s <= choice + TIME_EPS && choice <= e + TIME_EPS) {
                return Err(Error::protocol(format!("range [{s}, {e}] does not contain {choice}")));
            }
            Ok(r)
        };
        let raw = self.session(tx, round, "viewer.stage3", &p3, &parse3, STAGE3_FORMAT, &mut tally)?;
        let padded = pad_and_clamp(raw, d)?;
        let trace = LocalizeTrace {
            stage1_candidates: candidates,
            stage2_choice: choice,
            stage3_raw: raw,
            padded,
            extra_caption_requests: tally.calls,
            nearest_keyframe_fallbacks: tally.fallbacks,
        };
        tx.event(round, format!("localized `{text}` to {padded}"), serde_json::to_value(&trace)?);
        Ok((padded, trace))
    }
}
