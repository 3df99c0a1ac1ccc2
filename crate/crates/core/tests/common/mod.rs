#![allow(dead_code)]

pub mod scenarios;

use std::path::{Path, PathBuf};

use tvs_core::backends::SidecarCaptioner;
use tvs_core::benchgen::{BenchgenConfig, Dataset};
use tvs_core::domain::VideoMeta;
use tvs_core::isodata::IsodataParams;
use tvs_core::pipeline::{cmd_benchgen, cmd_index, RunConfig, Variant};
use tvs_core::ExecMode;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn pipeline_fixture(name: &str) -> PathBuf {
    fixtures().join("pipeline").join(name)
}

/// Dataset and keyframe indexes for the pipeline fixture, under `root`.
pub struct Workspace {
    pub dataset: Dataset,
    pub dataset_dir: PathBuf,
    pub index_dir: PathBuf,
}

pub fn prepare(root: &Path, mode: ExecMode) -> Workspace {
    let dataset_dir = root.join("dataset");
    let dataset = cmd_benchgen(&pipeline_fixture("annotations.json"), &BenchgenConfig::default(), &dataset_dir, mode)
        .expect("benchgen");
    let index_dir = root.join("indexes");
    let captioner = SidecarCaptioner::load(&pipeline_fixture("captions.jsonl")).unwrap();
    let mut vids: Vec<&str> = dataset.items.iter().map(|i| i.vid_name.as_str()).collect();
    vids.dedup();
    for v in vids {
        let meta = VideoMeta::derived(v, 100.0, 25.0).unwrap();
        cmd_index(
            &meta,
            &pipeline_fixture("manifest.jsonl"),
            &pipeline_fixture("embeddings.tvse"),
            &IsodataParams::default(),
            &captioner,
            Some(&index_dir.join(format!("{v}.json"))),
            mode,
        )
        .expect("index");
    }
    Workspace { dataset, dataset_dir, index_dir }
}

pub fn config(variant: Variant) -> RunConfig {
    RunConfig { variant, ..RunConfig::default() }
}
