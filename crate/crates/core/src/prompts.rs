//! Prompt templates with `{name}` placeholders.
//!
//! `{{` and `}}` render as literal braces. Every role has a fixed set of
//! required and permitted placeholders, checked when a template is loaded.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Piece {
    Lit(String),
    Slot(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    source: String,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    pub fn parse(source: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut chars = source.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    lit.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    lit.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(ch) if ch.is_ascii_alphanumeric() || ch == '_' => name.push(ch),
                            _ => {
                                return Err(Error::validation(format!(
                                    "template: malformed placeholder after `{{{name}`"
                                )))
                            }
                        }
                    }
                    if name.is_empty() {
                        return Err(Error::validation("template: empty placeholder `{}`"));
                    }
                    if !lit.is_empty() {
                        pieces.push(Piece::Lit(std::mem::take(&mut lit)));
                    }
                    pieces.push(Piece::Slot(name));
                }
                '}' => return Err(Error::validation("template: unmatched `}`")),
                c => lit.push(c),
            }
        }
        if !lit.is_empty() {
            pieces.push(Piece::Lit(lit));
        }
        Ok(PromptTemplate { source: source.to_string(), pieces })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(s) => Some(s.as_str()),
                Piece::Lit(_) => None,
            })
            .collect()
    }

    pub fn check(&self, required: &[&str], allowed: &[&str]) -> Result<()> {
        let present = self.placeholders();
        if let Some(missing) = required.iter().find(|r| !present.contains(*r)) {
            return Err(Error::validation(format!("template lacks required placeholder {{{missing}}}")));
        }
        if let Some(extra) = present.iter().find(|p| !allowed.contains(p)) {
            return Err(Error::validation(format!("template uses unsupported placeholder {{{extra}}}")));
        }
        Ok(())
    }

    pub fn render(&self, values: &[(&str, &str)]) -> Result<String> {
        let mut out = String::with_capacity(self.source.len());
        for p in &self.pieces {
            match p {
                Piece::Lit(s) => out.push_str(s),
                Piece::Slot(name) => {
                    let v = values
                        .iter()
                        .find(|(k, _)| k == name)
                        .ok_or_else(|| Error::validation(format!("no value for placeholder {{{name}}}")))?;
                    out.push_str(v.1);
                }
            }
        }
        Ok(out)
    }
}

/// Placeholder names that would leak video content into a prompt.
pub const VIDEO_PLACEHOLDERS: &[&str] = &["captions", "caption", "index", "keyframes", "frames", "summary", "segments", "extent"];

/// (role, required, allowed) for every template in a [`PromptSet`].
pub const ROLES: &[(&str, &[&str], &[&str])] = &[
    ("launcher", &["query", "success_history", "failure_history"], &["query", "success_history", "failure_history"]),
    (
        "validator",
        &["query_before", "query_after", "instruction", "extent"],
        &["query_before", "query_after", "instruction", "extent", "duration"],
    ),
    ("scan", &["captions", "start", "end"], &["captions", "start", "end", "duration"]),
    ("stage1", &["captions", "query", "duration"], &["captions", "query", "duration"]),
    ("stage2", &["candidates", "captions", "query"], &["candidates", "captions", "query", "duration"]),
    ("stage3", &["t_best", "captions", "query", "duration"], &["t_best", "captions", "query", "duration"]),
    ("simple", &["query", "duration"], &["query", "duration"]),
    ("blind", &["query", "tools"], &["query", "tools", "duration", "fps", "total_frames", "resolution"]),
    ("judge", &["original", "rewritten", "reference"], &["original", "rewritten", "reference"]),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSet {
    pub launcher: PromptTemplate,
    pub validator: PromptTemplate,
    pub scan: PromptTemplate,
    pub stage1: PromptTemplate,
    pub stage2: PromptTemplate,
    pub stage3: PromptTemplate,
    pub simple: PromptTemplate,
    pub blind: PromptTemplate,
    pub judge: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        let t = |s: &str| PromptTemplate::parse(s).expect("default template parses");
        PromptSet {
            launcher: t(DEFAULT_LAUNCHER),
            validator: t(DEFAULT_VALIDATOR),
            scan: t(DEFAULT_SCAN),
            stage1: t(DEFAULT_STAGE1),
            stage2: t(DEFAULT_STAGE2),
            stage3: t(DEFAULT_STAGE3),
            simple: t(DEFAULT_SIMPLE),
            blind: t(DEFAULT_BLIND),
            judge: t(DEFAULT_JUDGE),
        }
    }
}

impl PromptSet {
    pub fn get(&self, role: &str) -> Option<&PromptTemplate> {
        Some(match role {
            "launcher" => &self.launcher,
            "validator" => &self.validator,
            "scan" => &self.scan,
            "stage1" => &self.stage1,
            "stage2" => &self.stage2,
            "stage3" => &self.stage3,
            "simple" => &self.simple,
            "blind" => &self.blind,
            "judge" => &self.judge,
            _ => return None,
        })
    }

    fn slot(&mut self, role: &str) -> Option<&mut PromptTemplate> {
        Some(match role {
            "launcher" => &mut self.launcher,
            "validator" => &mut self.validator,
            "scan" => &mut self.scan,
            "stage1" => &mut self.stage1,
            "stage2" => &mut self.stage2,
            "stage3" => &mut self.stage3,
            "simple" => &mut self.simple,
            "blind" => &mut self.blind,
            "judge" => &mut self.judge,
            _ => return None,
        })
    }

    /// Validates a template for `role`. The launcher additionally may never
    /// reference video content.
    pub fn check_role(role: &str, template: &PromptTemplate) -> Result<()> {
        let (_, required, allowed) = ROLES
            .iter()
            .find(|(r, _, _)| *r == role)
            .ok_or_else(|| Error::validation(format!("unknown prompt role `{role}`")))?;
        if role == "launcher" {
            if let Some(bad) = template.placeholders().into_iter().find(|p| VIDEO_PLACEHOLDERS.contains(p)) {
                return Err(Error::validation(format!(
                    "launcher template must not reference video content (found {{{bad}}})"
                )));
            }
        }
        template.check(required, allowed).map_err(|e| Error::validation(format!("{role} template: {e}")))
    }

    pub fn set(&mut self, role: &str, template: PromptTemplate) -> Result<()> {
        Self::check_role(role, &template)?;
        *self.slot(role).ok_or_else(|| Error::validation(format!("unknown prompt role `{role}`")))? = template;
        Ok(())
    }

    /// Defaults with the given roles replaced by templates read from files.
    pub fn with_overrides<P: AsRef<Path>>(overrides: &BTreeMap<String, P>) -> Result<Self> {
        let mut set = Self::default();
        for (role, path) in overrides {
            let tpl = PromptTemplate::load(path.as_ref()).map_err(|e| {
                Error::validation(format!("prompt `{role}` ({}): {e}", path.as_ref().display()))
            })?;
            set.set(role, tpl)?;
        }
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        for (role, _, _) in ROLES {
            Self::check_role(role, self.get(role).unwrap())?;
        }
        Ok(())
    }
}

pub const LAUNCHER_FORMAT: &str = "```tvs\ndecision: proceed | stop\nrewritten_query: <question>\ninstruction: <trimming instruction>\n```";
pub const VALIDATOR_FORMAT: &str = "```tvs\njudgement: view | succeeded | failed\nrequest: scan | localize   (view only)\nstart: <seconds>   (scan only)\nend: <seconds>   (scan only)\ntext: <what to find>   (localize only)\nsegments: [[start, end], ...]   (succeeded only)\nreason: <why>   (failed only)\n```";
pub const SCAN_FORMAT: &str = "```tvs\nsummary: <description of the range>\n```";
pub const STAGE1_FORMAT: &str = "```tvs\ntimestamps: [t1, t2, t3, t4, t5]\n```";
pub const STAGE2_FORMAT: &str = "```tvs\ntimestamp: <one of the candidates>\n```";
pub const STAGE3_FORMAT: &str = "```tvs\nstart: <seconds>\nend: <seconds>\n```";
pub const SIMPLE_FORMAT: &str = "```tvs\nsegments: [[start, end], ...]\nrewritten_query: <question>\n```";
pub const BLIND_FORMAT: &str = "```tvs\nrewritten_query: <question>\n```\n```plan\n<one tool call per line>\n```";

const DEFAULT_LAUNCHER: &str = "You plan how to cut a cooking video down to what a question needs. You cannot see the video.

Current question:
{query}

Accepted edits so far (question before -> question after, instruction):
{success_history}

Edits rejected since the last accepted one:
{failure_history}

If the question can be made simpler by cutting the video further, propose one cut and a matching simpler question. Otherwise stop.
Answer with:
```tvs
decision: proceed | stop
rewritten_query: <simpler question>
instruction: <which part of the video to keep>
```";

const DEFAULT_VALIDATOR: &str = "You check whether a proposed video cut can be carried out. You reach the video only through a viewer.

Question before: {query_before}
Question after: {query_after}
Instruction: {instruction}
The working video currently spans {extent} (seconds, total length {duration}).

Each turn, either ask the viewer, or give a verdict.
To read a time range: judgement: view, request: scan, start, end.
To find an event: judgement: view, request: localize, text.
If the cut is possible: judgement: succeeded, segments: [[start, end], ...] in seconds.
If not: judgement: failed, reason.
Use a ```tvs fenced block with one `key: value` per line.";

const DEFAULT_SCAN: &str = "Frame captions between {start}s and {end}s of a {duration}s video:
{captions}

Describe what happens in this range. You may call caption_at(timestamp) for more detail.
Answer with:
```tvs
summary: <description>
```";

const DEFAULT_STAGE1: &str = "Frame captions of a {duration}s video:
{captions}

Target: {query}
List the five timestamps most likely to show the target.
```tvs
timestamps: [t1, t2, t3, t4, t5]
```";

const DEFAULT_STAGE2: &str = "Target: {query}
Candidate timestamps: {candidates}
Captions near the candidates:
{captions}

Pick the single best candidate. You may call caption_at(timestamp).
```tvs
timestamp: <candidate>
```";

const DEFAULT_STAGE3: &str = "Target: {query}
The target is visible near {t_best}s in a {duration}s video.
Captions around that time:
{captions}

Give the start and end of the target event. You may call caption_at(timestamp).
```tvs
start: <seconds>
end: <seconds>
```";

const DEFAULT_SIMPLE: &str = "Question about a {duration}s cooking video: {query}

Cut the video to the parts needed to answer, and rewrite the question so it fits the cut video.
Tools: prep(start, end) lists frame captions, caption_at(timestamp) captions one frame, localize(text) finds an event.
When done, answer with:
```tvs
segments: [[start, end], ...]
rewritten_query: <question>
```";

const DEFAULT_BLIND: &str = "Question about a video ({duration}s, {fps} fps, {total_frames} frames): {query}

You cannot watch the video. Write a plan of tool calls that selects the frames needed to answer, and a rewritten question for the selected frames.
Plan syntax: one `name = tool(args)` per line, `#` comments, strings in double quotes, `None`, index lists like [1,2,3]. The last line's result must be a list of frame indices.

Tools:
{tools}

Answer with:
```tvs
rewritten_query: <question>
```
```plan
<plan>
```";

const DEFAULT_JUDGE: &str = "Original question: {original}
Rewritten question: {rewritten}
Reference rewrite: {reference}

Rate from 0 to 100 how well the rewritten question matches the reference.
```tvs
score: <number>
```";
