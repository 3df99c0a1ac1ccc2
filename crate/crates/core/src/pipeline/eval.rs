use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::records::read_records;
use crate::backends::{judge_rewrite, Judge};
use crate::benchgen::QAItem;
use crate::domain::io::{read_jsonl, PredictionRecord};
use crate::domain::{evaluate, GroundTruth, MetricsReport, SegmentSet};
use crate::error::Result;
use crate::exec::ExecMode;

/// A prediction, with the rewritten query when the source has one.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub item_id: String,
    pub segments: SegmentSet,
    pub rewritten_query: Option<String>,
}

/// Reads a records directory written by screening, or a predictions JSONL file.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    if path.is_dir() {
        Ok(read_records(path)?
            .into_iter()
            .map(|r| Prediction { item_id: r.item_id, segments: r.segments, rewritten_query: Some(r.rewritten_query) })
            .collect())
    } else {
        let recs: Vec<PredictionRecord> = read_jsonl(path)?;
        Ok(recs
            .into_iter()
            .map(|r| Prediction { item_id: r.item_id, segments: r.segments, rewritten_query: None })
            .collect())
    }
}

/// The machine-readable evaluation file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tool_version: String,
    pub config_hash: String,
    pub items: usize,
    pub scored: usize,
    /// Dataset items with no prediction; excluded from the metrics.
    pub missing_predictions: Vec<String>,
    /// Predictions for ids outside the dataset; ignored.
    pub unknown_predictions: Vec<String>,
    pub metrics: MetricsReport,
    /// Mean judge score of the rewritten queries, when a judge was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewrite_score: Option<f64>,
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut out = self.metrics.render_table();
        out.push_str(&format!("\nscored {} of {} items\n", self.scored, self.items));
        if let Some(s) = self.rewrite_score {
            out.push_str(&format!("rewrite score {s:.3}\n"));
        }
        if !self.missing_predictions.is_empty() {
            out.push_str(&format!(
                "missing predictions ({}): {}\n",
                self.missing_predictions.len(),
                self.missing_predictions.join(", ")
            ));
        }
        if !self.unknown_predictions.is_empty() {
            out.push_str(&format!("ignored {} predictions for items outside the scored set: {}\n", self.unknown_predictions.len(), self.unknown_predictions.join(", ")));
        }
        out
    }
}

/// Joins predictions to the dataset and scores them.
pub fn cmd_eval(
    predictions: &[Prediction],
    items: &[QAItem],
    config_hash: &str,
    judge: Option<&dyn Judge>,
    mode: ExecMode,
) -> Result<EvalReport> {
    let gts: BTreeMap<String, GroundTruth> = items
        .iter()
        .map(|i| (i.item_id.clone(), GroundTruth { qa_type: i.qa_type, segments: i.gt_timestamp.clone() }))
        .collect();
    let mut unknown = BTreeSet::new();
    let mut kept = Vec::new();
    for p in predictions {
        if gts.contains_key(&p.item_id) {
            kept.push(p);
        } else {
            unknown.insert(p.item_id.clone());
        }
    }
    let have: BTreeSet<&str> = kept.iter().map(|p| p.item_id.as_str()).collect();
    let missing: Vec<String> = gts.keys().filter(|id| !have.contains(id.as_str())).cloned().collect();
    let pairs: Vec<(String, SegmentSet)> = kept.iter().map(|p| (p.item_id.clone(), p.segments.clone())).collect();
    let metrics = evaluate(&pairs, &gts, mode)?;

    let rewrite_score = match judge {
        None => None,
        Some(j) => {
            let by_id: BTreeMap<&str, &QAItem> = items.iter().map(|i| (i.item_id.as_str(), i)).collect();
            let mut ordered: Vec<&&Prediction> = kept.iter().filter(|p| p.rewritten_query.is_some()).collect();
            ordered.sort_by(|a, b| a.item_id.cmp(&b.item_id));
            let scores = mode.map(&ordered, |p| {
                let item = by_id[p.item_id.as_str()];
                judge_rewrite(
                    Some(j),
                    &item.question,
                    p.rewritten_query.as_deref().unwrap_or(""),
                    &item.gt_rewritten_query,
                )
            });
            let scores = scores.into_iter().collect::<Result<Vec<f64>>>()?;
            (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
        }
    };

    Ok(EvalReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash.to_string(),
        items: gts.len(),
        scored: pairs.len(),
        missing_predictions: missing,
        unknown_predictions: unknown.into_iter().collect(),
        metrics,
        rewrite_score,
    })
}
