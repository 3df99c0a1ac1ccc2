//! Duration-based overlap metrics between predicted and ground-truth segment sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::interval::SegmentSet;
use super::qa_type::{Category, QaType};
use crate::error::{Error, Result};
use crate::exec::ExecMode;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub iou: f64,
    pub precision: f64,
    pub coverage: f64,
    pub f1: f64,
}

pub fn f1_score(precision: f64, coverage: f64) -> f64 {
    if precision + coverage > 0.0 {
        2.0 * precision * coverage / (precision + coverage)
    } else {
        0.0
    }
}

/// Scores one prediction. An empty prediction is legal and scores zero;
/// an empty ground truth is a data error.
pub fn score_pair(pred: &SegmentSet, gt: &SegmentSet) -> Result<PairScore> {
    if gt.is_empty() {
        return Err(Error::validation("ground-truth segment set is empty"));
    }
    let inter = pred.intersect(gt).total_duration();
    let p_len = pred.total_duration();
    let g_len = gt.total_duration();
    let union = p_len + g_len - inter;
    let iou = if union > 0.0 { inter / union } else { 0.0 };
    let precision = if p_len > 0.0 { inter / p_len } else { 0.0 };
    let coverage = inter / g_len;
    Ok(PairScore {
        iou: iou.clamp(0.0, 1.0),
        precision: precision.clamp(0.0, 1.0),
        coverage: coverage.clamp(0.0, 1.0),
        f1: f1_score(precision, coverage).clamp(0.0, 1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub qa_type: QaType,
    pub segments: SegmentSet,
}

/// Mean of the four metrics over `n` items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricQuad {
    pub miou: f64,
    pub precision: f64,
    pub coverage: f64,
    pub f1: f64,
    pub n: usize,
}

impl MetricQuad {
    fn mean_of(scores: &[PairScore]) -> Self {
        let n = scores.len();
        if n == 0 {
            return MetricQuad::default();
        }
        let k = n as f64;
        MetricQuad {
            miou: scores.iter().map(|s| s.iou).sum::<f64>() / k,
            precision: scores.iter().map(|s| s.precision).sum::<f64>() / k,
            coverage: scores.iter().map(|s| s.coverage).sum::<f64>() / k,
            f1: scores.iter().map(|s| s.f1).sum::<f64>() / k,
            n,
        }
    }

    fn mean_of_quads(quads: &[MetricQuad]) -> Self {
        let live: Vec<&MetricQuad> = quads.iter().filter(|q| q.n > 0).collect();
        if live.is_empty() {
            return MetricQuad::default();
        }
        let k = live.len() as f64;
        MetricQuad {
            miou: live.iter().map(|q| q.miou).sum::<f64>() / k,
            precision: live.iter().map(|q| q.precision).sum::<f64>() / k,
            coverage: live.iter().map(|q| q.coverage).sum::<f64>() / k,
            f1: live.iter().map(|q| q.f1).sum::<f64>() / k,
            n: live.iter().map(|q| q.n).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_type: BTreeMap<QaType, MetricQuad>,
    pub per_category: BTreeMap<Category, MetricQuad>,
    /// Item-level mean over every scored item.
    pub average: MetricQuad,
    /// Unweighted mean of the category means, for comparison with `average`.
    pub category_mean: MetricQuad,
}

/// Scores every prediction against the benchmark and aggregates.
///
/// Items are scored in item-id order regardless of input order or
/// execution mode, so the report is bit-for-bit reproducible.
pub fn evaluate(
    preds: &[(String, SegmentSet)],
    gts: &BTreeMap<String, GroundTruth>,
    mode: ExecMode,
) -> Result<MetricsReport> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for (id, _) in preds {
        if !seen.insert(id.as_str()) {
            dups.insert(id.clone());
        }
    }
    if !dups.is_empty() {
        return Err(Error::validation(format!(
            "duplicate prediction ids: {}",
            dups.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let missing: Vec<&str> = seen.iter().copied().filter(|id| !gts.contains_key(*id)).collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!(
            "predictions for unknown item ids: {}",
            missing.join(", ")
        )));
    }

    let mut ordered: Vec<&(String, SegmentSet)> = preds.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));
    let scored = mode.map(&ordered, |(id, pred)| {
        let gt = &gts[id];
        score_pair(pred, &gt.segments).map(|s| (gt.qa_type, s))
    });
    let scored = scored.into_iter().collect::<Result<Vec<_>>>()?;

    let mut by_type: BTreeMap<QaType, Vec<PairScore>> = BTreeMap::new();
    let mut by_cat: BTreeMap<Category, Vec<PairScore>> = BTreeMap::new();
    for (t, s) in &scored {
        by_type.entry(*t).or_default().push(*s);
        by_cat.entry(t.category()).or_default().push(*s);
    }
    let all: Vec<PairScore> = scored.iter().map(|(_, s)| *s).collect();
    let per_category: BTreeMap<Category, MetricQuad> = by_cat
        .iter()
        .map(|(c, v)| (*c, MetricQuad::mean_of(v)))
        .collect();
    let cat_quads: Vec<MetricQuad> = per_category.values().copied().collect();
    Ok(MetricsReport {
        per_type: by_type
            .iter()
            .map(|(t, v)| (*t, MetricQuad::mean_of(v)))
            .collect(),
        category_mean: MetricQuad::mean_of_quads(&cat_quads),
        per_category,
        average: MetricQuad::mean_of(&all),
    })
}

impl MetricsReport {
    /// Plain-text table: one column pair (mIoU, F1) per category plus Average,
    /// followed by the full metric quartet per row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let cell = |q: Option<&MetricQuad>| match q {
            Some(q) if q.n > 0 => format!("{:>6.3} {:>6.3}", q.miou, q.f1),
            _ => format!("{:>6} {:>6}", "-", "-"),
        };
        let _ = write!(out, "{:<26}", "");
        for c in Category::ALL {
            let _ = write!(out, " | {:<13}", short_label(c));
        }
        let _ = writeln!(out, " | {:<13}", "Average");
        let _ = write!(out, "{:<26}", "");
        for _ in 0..4 {
            let _ = write!(out, " | {:>6} {:>6}", "mIoU", "F1");
        }
        out.push('\n');
        let _ = write!(out, "{:<26}", "screened");
        for c in Category::ALL {
            let _ = write!(out, " | {}", cell(self.per_category.get(&c)));
        }
        let _ = writeln!(out, " | {}", cell(Some(&self.average)));
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<26} | {:>6} {:>6} {:>6} {:>6} {:>5}",
            "group", "mIoU", "Pre.", "Cov.", "F1", "n"
        );
        let mut row = |name: &str, q: &MetricQuad| {
            let _ = writeln!(
                out,
                "{:<26} | {:>6.3} {:>6.3} {:>6.3} {:>6.3} {:>5}",
                name, q.miou, q.precision, q.coverage, q.f1, q.n
            );
        };
        for (t, q) in &self.per_type {
            row(t.tag(), q);
        }
        for (c, q) in &self.per_category {
            row(c.label(), q);
        }
        row("Average (item mean)", &self.average);
        row("Average (category mean)", &self.category_mean);
        out
    }
}

fn short_label(c: Category) -> &'static str {
    match c {
        Category::TemporalRelational => "Temp. Rel.",
        Category::TimepointIndexed => "Timept. Idx.",
        Category::MultifacetedIntegrative => "Multi. Int.",
    }
}
