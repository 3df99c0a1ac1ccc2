//! Batch commands behind the CLI: dataset synthesis, index building,
//! screening and evaluation. Every command reads and writes plain files so
//! stages can be rerun independently.

mod config;
mod eval;
mod records;
mod screen;

use std::path::Path;

pub use config::{BackendConfig, BackendMode, Paths, RunConfig, Variant};
pub use eval::{cmd_eval, load_predictions, EvalReport, Prediction};
pub use records::{error_path, read_records, record_path, safe_id, write_atomic, ItemError, RunRecord};
pub use screen::{
    cmd_screen, load_items, provider_for, screen_item, BackendProvider, FailedItem, ItemBackends, ItemScript,
    LiveProvider, ScreenSummary, ScriptedProvider,
};

use crate::backends::Captioner;
use crate::benchgen::{build_dataset, load_annotations, BenchgenConfig, Dataset, Split};
use crate::domain::io::{read_jsonl, write_jsonl};
use crate::domain::VideoMeta;
use crate::error::Result;
use crate::exec::ExecMode;
use crate::isodata::{Clustering, EmbeddingMatrix, IsodataParams};
use crate::viewer::{CandidateFrame, KeyframeIndex};

/// Builds the benchmark and writes `items.jsonl`, one file per split and
/// `report.json` into `out_dir`.
pub fn cmd_benchgen(annotations: &Path, cfg: &BenchgenConfig, out_dir: &Path, mode: ExecMode) -> Result<Dataset> {
    let videos = load_annotations(annotations, cfg.default_fps)?;
    let mut dataset = build_dataset(&videos, cfg, mode)?;
    if videos.is_empty() {
        dataset.report.warnings.insert(0, format!("{} holds no videos", annotations.display()));
    }
    std::fs::create_dir_all(out_dir)?;
    write_jsonl(&out_dir.join("items.jsonl"), &dataset.items)?;
    for s in Split::ALL {
        let part: Vec<_> = dataset.items.iter().filter(|i| i.split == Some(s)).collect();
        write_jsonl(&out_dir.join(format!("{}.jsonl", s.name())), &part)?;
    }
    write_atomic(&out_dir.join("report.json"), &records::to_pretty(&dataset.report)?)?;
    Ok(dataset)
}

/// Clusters one video's candidate frames and captions the keyframes.
/// The index is written to `out` when given.
pub fn cmd_index(
    meta: &VideoMeta,
    manifest: &Path,
    embeddings: &Path,
    params: &IsodataParams,
    captioner: &dyn Captioner,
    out: Option<&Path>,
    mode: ExecMode,
) -> Result<(KeyframeIndex, Clustering)> {
    let frames: Vec<CandidateFrame> = read_jsonl(manifest)?;
    let x = EmbeddingMatrix::read_tvse(embeddings)?;
    let (index, clustering) = KeyframeIndex::build(meta, &frames, &x, params, captioner, mode)?;
    if let Some(out) = out {
        write_atomic(out, &index.to_json())?;
    }
    Ok((index, clustering))
}
