use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    GetDuration,
    GetResolution,
    GetTotalFrameNum,
    GroundingSelect,
    IndicesListIntersect,
    IndicesListUnion,
    IndicesConcatAndFill,
    IndicesConcat,
    TimestampToSingleIndex,
    SingleTimestampToIndexRange,
    RangeTimestampToIndexRange,
}

impl Tool {
    pub const ALL: [Tool; 11] = [
        Tool::GetDuration,
        Tool::GetResolution,
        Tool::GetTotalFrameNum,
        Tool::GroundingSelect,
        Tool::IndicesListIntersect,
        Tool::IndicesListUnion,
        Tool::IndicesConcatAndFill,
        Tool::IndicesConcat,
        Tool::TimestampToSingleIndex,
        Tool::SingleTimestampToIndexRange,
        Tool::RangeTimestampToIndexRange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tool::GetDuration => "get_duration",
            Tool::GetResolution => "get_resolution",
            Tool::GetTotalFrameNum => "get_total_frame_num",
            Tool::GroundingSelect => "grounding_select",
            Tool::IndicesListIntersect => "indices_list_intersect",
            Tool::IndicesListUnion => "indices_list_union",
            Tool::IndicesConcatAndFill => "indices_concat_and_fill",
            Tool::IndicesConcat => "indices_concat",
            Tool::TimestampToSingleIndex => "timestamp_to_single_index",
            Tool::SingleTimestampToIndexRange => "single_timestamp_to_index_range",
            Tool::RangeTimestampToIndexRange => "range_timestamp_to_index_range",
        }
    }

    pub fn from_name(name: &str) -> Option<Tool> {
        Tool::ALL.into_iter().find(|t| t.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Tool::GetDuration | Tool::GetResolution | Tool::GetTotalFrameNum => 0,
            Tool::TimestampToSingleIndex | Tool::SingleTimestampToIndexRange => 1,
            _ => 2,
        }
    }

    /// Signature and one-line behaviour, as listed to the blind agent.
    pub fn describe(self) -> &'static str {
        match self {
            Tool::GetDuration => "get_duration() -> length of the video in seconds",
            Tool::GetResolution => "get_resolution() -> (width, height) of the video",
            Tool::GetTotalFrameNum => "get_total_frame_num() -> number of frames in the video",
            Tool::GroundingSelect => {
                "grounding_select(obj_name, concerned_indices) -> frames among concerned_indices that show obj_name; None searches every frame"
            }
            Tool::IndicesListIntersect => "indices_list_intersect(a, b) -> frame indices present in both lists",
            Tool::IndicesListUnion => "indices_list_union(a, b) -> frame indices present in either list",
            Tool::IndicesConcatAndFill => {
                "indices_concat_and_fill(a, b) -> every frame index from the smallest to the largest one in a and b"
            }
            Tool::IndicesConcat => "indices_concat(a, b) -> list a followed by list b",
            Tool::TimestampToSingleIndex => "timestamp_to_single_index(t) -> index of the frame shown at t seconds",
            Tool::SingleTimestampToIndexRange => {
                "single_timestamp_to_index_range(t) -> 60 consecutive frame indices centred on t seconds"
            }
            Tool::RangeTimestampToIndexRange => {
                "range_timestamp_to_index_range(start, end) -> every frame index from start to end seconds"
            }
        }
    }

    /// The full tool list, one per line.
    pub fn catalogue() -> String {
        Tool::ALL.iter().map(|t| format!("- {}", t.describe())).collect::<Vec<_>>().join("\n")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arg {
    Num(f64),
    Str(String),
    None,
    List(Vec<u64>),
    Ref(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub bind: String,
    pub tool: Tool,
    pub args: Vec<Arg>,
    /// 1-based source line.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolPlan {
    pub steps: Vec<Step>,
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Num(x) => write!(f, "{x}"),
            Arg::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Arg::None => f.write_str("None"),
            Arg::List(xs) => {
                let parts: Vec<String> = xs.iter().map(u64::to_string).collect();
                write!(f, "[{}]", parts.join(", "))
            }
            Arg::Ref(r) => f.write_str(r),
        }
    }
}

impl fmt::Display for ToolPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            let args: Vec<String> = s.args.iter().map(Arg::to_string).collect();
            writeln!(f, "{} = {}({})", s.bind, s.tool.name(), args.join(", "))?;
        }
        Ok(())
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Plan { line: self.line, message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}` at `{}`", self.rest())))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let r = self.rest();
        let len = r
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map_or(r.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.err(format!("expected a name at `{r}`")));
        }
        self.pos += len;
        Ok(&r[..len])
    }

    fn number_token(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let r = self.rest();
        let len = r
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || ((c == '-' || c == '+') && (i == 0 || matches!(r.as_bytes()[i - 1], b'e' | b'E'))))
            })
            .map_or(r.len(), |(i, _)| i);
        self.pos += len;
        Ok(&r[..len])
    }

    fn string(&mut self) -> Result<String> {
        self.expect('"')?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    _ => return Err(self.err("bad escape in string")),
                },
                c => out.push(c),
            }
        }
        Err(self.err("unterminated string"))
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        match self.peek() {
            Some('"') => Ok(Arg::Str(self.string()?)),
            Some('[') => {
                self.expect('[')?;
                let mut xs = Vec::new();
                if !self.eat(']') {
                    loop {
                        let tok = self.number_token()?;
                        let v: u64 = tok.parse().map_err(|_| self.err(format!("`{tok}` is not a frame index")))?;
                        xs.push(v);
                        if self.eat(']') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(Arg::List(xs))
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '.' => {
                let tok = self.number_token()?;
                let v: f64 = tok.parse().map_err(|_| self.err(format!("`{tok}` is not a number")))?;
                if !v.is_finite() {
                    return Err(self.err(format!("`{tok}` is not finite")));
                }
                Ok(Arg::Num(v))
            }
            _ => {
                let id = self.ident()?;
                Ok(if id == "None" { Arg::None } else { Arg::Ref(id.to_string()) })
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Parses `name = tool(arg, ...)` lines. Blank lines and `#` comments are
/// ignored; names must be bound before use and only once.
pub fn parse_plan(text: &str) -> Result<ToolPlan> {
    let mut steps = Vec::new();
    let mut bound: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let src = strip_comment(raw);
        if src.trim().is_empty() {
            continue;
        }
        let mut c = Cursor { src, pos: 0, line: i + 1 };
        let bind = c.ident()?.to_string();
        if bind == "None" || Tool::from_name(&bind).is_some() {
            return Err(c.err(format!("`{bind}` cannot be used as a name")));
        }
        c.expect('=')?;
        let tool_name = c.ident()?;
        let tool = Tool::from_name(tool_name).ok_or_else(|| c.err(format!("unknown tool `{tool_name}`")))?;
        c.expect('(')?;
        let mut args = Vec::new();
        if !c.eat(')') {
            loop {
                let a = c.arg()?;
                if let Arg::Ref(r) = &a {
                    if !bound.contains(r) {
                        return Err(c.err(format!("`{r}` is not bound by an earlier step")));
                    }
                }
                args.push(a);
                if c.eat(')') {
                    break;
                }
                c.expect(',')?;
            }
        }
        c.skip_ws();
        if !c.rest().is_empty() {
            return Err(c.err(format!("unexpected trailing text `{}`", c.rest())));
        }
        if args.len() != tool.arity() {
            return Err(c.err(format!("{} takes {} argument(s), got {}", tool.name(), tool.arity(), args.len())));
        }
        if !bound.insert(bind.clone()) {
            return Err(c.err(format!("`{bind}` is already bound")));
        }
        steps.push(Step { bind, tool, args, line: i + 1 });
    }
    if steps.is_empty() {
        return Err(Error::validation("plan has no steps"));
    }
    Ok(ToolPlan { steps })
}
