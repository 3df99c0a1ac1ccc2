use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::plan::{Arg, Step, Tool, ToolPlan};
use super::tools;
use crate::backends::Grounder;
use crate::domain::{SegmentSet, VideoMeta};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Num(f64),
    Count(u64),
    Str(String),
    None,
    Resolution(u32, u32),
    /// Sorted, duplicate-free frame indices.
    Indices(Vec<u64>),
    /// Output of `indices_concat`: order kept, duplicates allowed.
    Sequence(Vec<u64>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Count(_) => "count",
            Value::Str(_) => "string",
            Value::None => "None",
            Value::Resolution(..) => "resolution",
            Value::Indices(_) => "index list",
            Value::Sequence(_) => "index sequence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub bindings: Vec<(String, Value)>,
    pub final_value: Value,
    pub segments: SegmentSet,
    pub warnings: Vec<String>,
    pub grounder_calls: usize,
}

struct Env<'a> {
    meta: &'a VideoMeta,
    grounder: Option<&'a dyn Grounder>,
    vars: BTreeMap<String, Value>,
    grounder_calls: usize,
    warnings: Vec<String>,
}

fn type_err(step: &Step, message: String) -> Error {
    Error::Type(format!("line {} ({}): {message}", step.line, step.tool.name()))
}

impl Env<'_> {
    fn resolve(&self, step: &Step, a: &Arg) -> Result<Value> {
        Ok(match a {
            Arg::Num(x) => Value::Num(*x),
            Arg::Str(s) => Value::Str(s.clone()),
            Arg::None => Value::None,
            Arg::List(xs) => Value::Sequence(xs.clone()),
            Arg::Ref(r) => self
                .vars
                .get(r)
                .cloned()
                .ok_or_else(|| type_err(step, format!("`{r}` is unbound")))?,
        })
    }

    fn number(&self, step: &Step, a: &Arg) -> Result<f64> {
        match self.resolve(step, a)? {
            Value::Num(x) => Ok(x),
            Value::Count(c) => Ok(c as f64),
            v => Err(type_err(step, format!("expected a number, got {}", v.kind()))),
        }
    }

    /// A frame-index list with set semantics; indices must exist in the video.
    fn index_set(&self, step: &Step, a: &Arg) -> Result<Vec<u64>> {
        let xs = self.index_seq(step, a)?;
        Ok(tools::normalize(&xs))
    }

    fn index_seq(&self, step: &Step, a: &Arg) -> Result<Vec<u64>> {
        let xs = match self.resolve(step, a)? {
            Value::Indices(xs) | Value::Sequence(xs) => xs,
            v => return Err(type_err(step, format!("expected an index list, got {}", v.kind()))),
        };
        if let Some(bad) = xs.iter().find(|&&i| i >= self.meta.total_frames) {
            return Err(type_err(step, format!("frame index {bad} outside [0, {})", self.meta.total_frames)));
        }
        Ok(xs)
    }

    fn run(&mut self, step: &Step) -> Result<Value> {
        let m = self.meta;
        let a = &step.args;
        Ok(match step.tool {
            Tool::GetDuration => Value::Num(m.duration),
            Tool::GetResolution => match m.resolution {
                Some(r) => Value::Resolution(r.width, r.height),
                None => return Err(Error::Unavailable(format!("line {}: video resolution is unknown", step.line))),
            },
            Tool::GetTotalFrameNum => Value::Count(m.total_frames),
            Tool::GroundingSelect => {
                let obj = match self.resolve(step, &a[0])? {
                    Value::Str(s) => s,
                    v => return Err(type_err(step, format!("obj_name must be a string, got {}", v.kind()))),
                };
                let cands = match self.resolve(step, &a[1])? {
                    Value::None => None,
                    _ => Some(self.index_set(step, &a[1])?),
                };
                let g = self.grounder.ok_or_else(|| {
                    Error::Unavailable(format!("line {}: grounding_select needs a grounder backend", step.line))
                })?;
                self.grounder_calls += 1;
                if g.low_fidelity() {
                    self.warnings.push(format!("line {}: grounding approximated from keyframe captions", step.line));
                }
                let out = g.select(&obj, cands.as_deref(), m)?;
                Value::Indices(tools::normalize(&out))
            }
            Tool::IndicesListIntersect => {
                Value::Indices(tools::intersect(&self.index_set(step, &a[0])?, &self.index_set(step, &a[1])?))
            }
            Tool::IndicesListUnion => {
                Value::Indices(tools::union(&self.index_set(step, &a[0])?, &self.index_set(step, &a[1])?))
            }
            Tool::IndicesConcatAndFill => {
                Value::Indices(tools::concat_and_fill(&self.index_seq(step, &a[0])?, &self.index_seq(step, &a[1])?))
            }
            Tool::IndicesConcat => {
                Value::Sequence(tools::concat(&self.index_seq(step, &a[0])?, &self.index_seq(step, &a[1])?))
            }
            Tool::TimestampToSingleIndex => Value::Count(tools::timestamp_to_single_index(m, self.number(step, &a[0])?)),
            Tool::SingleTimestampToIndexRange => {
                Value::Indices(tools::single_timestamp_to_index_range(m, self.number(step, &a[0])?))
            }
            Tool::RangeTimestampToIndexRange => {
                let (s, e) = (self.number(step, &a[0])?, self.number(step, &a[1])?);
                Value::Indices(
                    tools::range_timestamp_to_index_range(m, s, e)
                        .map_err(|err| type_err(step, err.to_string()))?,
                )
            }
        })
    }
}

/// Evaluates the steps in order. The last step must yield frame indices,
/// which become the returned segment set.
pub fn execute_plan(plan: &ToolPlan, meta: &VideoMeta, grounder: Option<&dyn Grounder>) -> Result<Execution> {
    let mut env = Env { meta, grounder, vars: BTreeMap::new(), grounder_calls: 0, warnings: Vec::new() };
    let mut bindings = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let v = env.run(step)?;
        env.vars.insert(step.bind.clone(), v.clone());
        bindings.push((step.bind.clone(), v));
    }
    let last = plan.steps.last().ok_or_else(|| Error::validation("plan has no steps"))?;
    let final_value = bindings.last().map(|b| b.1.clone()).expect("non-empty plan");
    let indices = match &final_value {
        Value::Indices(xs) => xs.clone(),
        Value::Sequence(xs) => {
            let n = tools::normalize(xs);
            if n.len() != xs.len() || n != *xs {
                env.warnings.push(format!(
                    "line {}: final index sequence was sorted and de-duplicated",
                    last.line
                ));
            }
            n
        }
        v => {
            return Err(Error::Type(format!(
                "line {}: the final step must produce frame indices, got {}",
                last.line,
                v.kind()
            )))
        }
    };
    if indices.is_empty() {
        env.warnings.push("plan selected no frames".to_string());
    }
    Ok(Execution {
        segments: tools::indices_to_segments(meta, &indices),
        bindings,
        final_value,
        warnings: env.warnings,
        grounder_calls: env.grounder_calls,
    })
}
