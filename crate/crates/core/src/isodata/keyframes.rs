use serde::{Deserialize, Serialize};

use super::cluster::{dot, isodata_cluster_with, unit, Clustering, IsodataParams};
use super::matrix::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::exec::ExecMode;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedFrame {
    pub timestamp: f64,
    pub row: usize,
}

/// One representative frame per final cluster: the member most similar to
/// the cluster center, earliest timestamp on ties. Sorted by time.
pub fn select_keyframes(
    x: &EmbeddingMatrix,
    timestamps: &[f64],
    p: &IsodataParams,
) -> Result<Vec<SelectedFrame>> {
    select_keyframes_with(x, timestamps, p, ExecMode::default()).map(|(k, _)| k)
}

pub fn select_keyframes_with(
    x: &EmbeddingMatrix,
    timestamps: &[f64],
    p: &IsodataParams,
    mode: ExecMode,
) -> Result<(Vec<SelectedFrame>, Clustering)> {
    if timestamps.len() != x.rows() {
        return Err(Error::validation(format!(
            "{} timestamps for {} embedding rows",
            timestamps.len(),
            x.rows()
        )));
    }
    if let Some(w) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::validation(format!(
            "timestamps must be strictly increasing (row {} -> {})",
            w,
            w + 1
        )));
    }
    let clustering = isodata_cluster_with(x, p, mode)?;
    let mut picks: Vec<SelectedFrame> = (0..clustering.k())
        .filter_map(|c| {
            let center = unit(&clustering.centers[c]);
            let mut best: Option<(f64, usize)> = None;
            for row in clustering.members(c) {
                let v: Vec<f64> = x.row(row).iter().map(|&f| f as f64).collect();
                let s = dot(&unit(&v), &center);
                // members arrive in row (= time) order, so strict > keeps the earliest tie
                if best.map_or(true, |b| s > b.0) {
                    best = Some((s, row));
                }
            }
            best.map(|(_, row)| SelectedFrame {
                timestamp: timestamps[row],
                row,
            })
        })
        .collect();
    picks.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok((picks, clustering))
}
