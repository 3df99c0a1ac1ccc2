//! `tvs`: benchmark generation, keyframe indexing, screening and evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvs_core::backends::{
    Captioner, ExactMatchJudge, HttpCaptioner, HttpChatClient, Judge, LlmJudge, MockCaptioner, ScriptEntry,
    ScriptedChat, SidecarCaptioner,
};
use tvs_core::domain::io::{write_jsonl, PredictionRecord};
use tvs_core::domain::VideoMeta;
use tvs_core::isodata::{isodata_cluster_with, EmbeddingMatrix};
use tvs_core::pipeline::{
    cmd_benchgen, cmd_eval, cmd_index, cmd_screen, load_items, load_predictions, provider_for, read_records,
    write_atomic, BackendMode, RunConfig, ScreenSummary, Variant,
};
use tvs_core::transcript::Transcript;
use tvs_core::viewer::{KeyframeIndex, Viewer, ViewerService};
use tvs_core::{Error, ExecMode};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_BACKEND: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "tvs", version, about = "Temporal visual screening toolkit")]
struct Cli {
    /// TOML run configuration. Flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-item work.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the benchmark from step annotations.
    Benchgen(BenchgenArgs),
    /// Build a keyframe index for one video.
    Index(IndexArgs),
    /// Screen every dataset item with one variant.
    Screen(ScreenArgs),
    /// Score predictions against the dataset.
    Eval(EvalArgs),
    /// Run ISODATA on an embedding file and print the clustering.
    Cluster(ClusterArgs),
    /// Localize a text description in one indexed video.
    Localize(LocalizeArgs),
}

#[derive(Args, Debug)]
struct BenchgenArgs {
    /// Annotation JSON (with or without the `database` wrapper).
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Output directory for items, splits and report.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overlap ratio threshold for connecting steps.
    #[arg(long)]
    theta: Option<f64>,
    /// Frame rate for videos whose annotations carry none.
    #[arg(long)]
    default_fps: Option<f64>,
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// Candidate-frame manifest (JSON Lines).
    #[arg(long)]
    manifest: PathBuf,
    /// TVSE embedding file aligned with the manifest.
    #[arg(long)]
    embeddings: PathBuf,
    /// Video metadata JSON; alternative to --vid-name/--duration/--fps.
    #[arg(long, conflicts_with_all = ["vid_name", "duration", "fps"])]
    meta: Option<PathBuf>,
    /// Video name, when --meta is not given.
    #[arg(long, requires_all = ["duration", "fps"])]
    vid_name: Option<String>,
    /// Video duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Video frame rate.
    #[arg(long)]
    fps: Option<f64>,
    /// Caption sidecar (JSON Lines frame_index, caption).
    #[arg(long, conflicts_with = "mock_captions")]
    captions: Option<PathBuf>,
    /// Use "CAP[i]" sentinel captions.
    #[arg(long)]
    mock_captions: bool,
    /// Output index file; defaults to `{index_dir}/{vid_name}.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial cluster count for ISODATA.
    #[arg(long)]
    k_init: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Full,
    Simple,
    Blind,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::Simple => Variant::Simple,
            VariantArg::Blind => Variant::Blind,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Scripted,
    Live,
}

#[derive(Args, Debug)]
struct ScreenArgs {
    /// Dataset JSON Lines.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Directory holding `{vid_name}.json` indexes.
    #[arg(long)]
    index_dir: Option<PathBuf>,
    /// Output directory; records go to `{out}/records`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Screening variant.
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Scripted replay or live HTTP backends.
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Per-item scripts JSON for the scripted backend.
    #[arg(long)]
    scripts: Option<PathBuf>,
    /// Only items of this split.
    #[arg(long)]
    split: Option<String>,
    /// Round cap for the launcher/validator loop.
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Viewer requests allowed per validator turn.
    #[arg(long)]
    view_budget: Option<usize>,
    /// Tool calls allowed per conversation.
    #[arg(long)]
    tool_budget: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum JudgeArg {
    Exact,
    Llm,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Records directory or predictions JSON Lines.
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset JSON Lines to score against.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Machine-readable report output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Only items of this split.
    #[arg(long)]
    split: Option<String>,
    /// Score rewritten queries as well.
    #[arg(long, value_enum)]
    judge: Option<JudgeArg>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// TVSE embedding file.
    #[arg(long)]
    embeddings: PathBuf,
    /// Initial cluster count.
    #[arg(long)]
    k_init: Option<usize>,
    /// Split clusters whose mean similarity falls below this.
    #[arg(long)]
    theta_split: Option<f64>,
    /// Merge centers more similar than this.
    #[arg(long)]
    theta_merge: Option<f64>,
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    /// Keyframe index JSON.
    #[arg(long)]
    index: PathBuf,
    /// Description of the moment to find.
    #[arg(long)]
    text: String,
    /// JSON array of script entries; uses the live endpoint when omitted.
    #[arg(long)]
    script: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_backend() {
        EXIT_BACKEND
    } else {
        EXIT_DATA
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.apply_seed(s);
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Error> {
    p.as_deref().ok_or_else(|| Error::validation(format!("missing {what} (flag or config)")))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json<T: serde::Serialize + ?Sized>(v: &T) -> Result<(), Error> {
    emit(&(serde_json::to_string_pretty(v)? + "\n"));
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut cfg = load_config(&cli)?;
    let mode = if cli.sequential { ExecMode::Sequential } else { ExecMode::Parallel };
    match &cli.command {
        Command::Benchgen(a) => {
            set_path(&mut cfg.paths.annotations, &a.annotations);
            set_path(&mut cfg.paths.out_dir, &a.out);
            set(&mut cfg.benchgen.theta, a.theta);
            if a.default_fps.is_some() {
                cfg.benchgen.default_fps = a.default_fps;
            }
            cfg.require_paths(&["annotations", "out_dir"])?;
            let out = required(&cfg.paths.out_dir, "output directory")?;
            let ds = mode.with_jobs(cfg.jobs, || {
                cmd_benchgen(required(&cfg.paths.annotations, "annotations")?, &cfg.benchgen, out, mode)
            })?;
            for w in &ds.report.warnings {
                log::warn!("{w}");
            }
            print_json(&ds.report)?;
            Ok(0)
        }
        Command::Index(a) => {
            set(&mut cfg.isodata.k_init, a.k_init);
            let meta = match (&a.meta, &a.vid_name) {
                (Some(p), _) => {
                    let m: VideoMeta = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    m.validate()?;
                    m
                }
                (None, Some(name)) => VideoMeta::derived(name, a.duration.unwrap_or(0.0), a.fps.unwrap_or(0.0))?,
                (None, None) => return Err(Error::validation("give --meta or --vid-name/--duration/--fps")),
            };
            let captioner: Box<dyn Captioner> = if let Some(p) = &a.captions {
                Box::new(SidecarCaptioner::load(p)?)
            } else if a.mock_captions {
                Box::new(MockCaptioner::new())
            } else if cfg.backend.mode == BackendMode::Live {
                Box::new(HttpCaptioner::from_env(cfg.backend.http.clone())?)
            } else {
                return Err(Error::validation("give --captions or --mock-captions, or use the live backend"));
            };
            let out = match (&a.out, &cfg.paths.index_dir) {
                (Some(o), _) => o.clone(),
                (None, Some(d)) => d.join(format!("{}.json", meta.vid_name)),
                (None, None) => return Err(Error::validation("give --out or paths.index_dir")),
            };
            let (index, clustering) =
                cmd_index(&meta, &a.manifest, &a.embeddings, &cfg.isodata, &*captioner, Some(&out), mode)?;
            for w in &clustering.warnings {
                log::warn!("{w}");
            }
            emit(&format!(
                "{}: {} keyframes from {} clusters after {} iterations -> {}\n",
                meta.vid_name,
                index.len(),
                clustering.k(),
                clustering.iterations_run,
                out.display()
            ));
            Ok(0)
        }
        Command::Screen(a) => {
            set_path(&mut cfg.paths.dataset, &a.dataset);
            set_path(&mut cfg.paths.index_dir, &a.index_dir);
            set_path(&mut cfg.paths.out_dir, &a.out);
            set_path(&mut cfg.paths.scripts, &a.scripts);
            set(&mut cfg.variant, a.variant.map(Variant::from));
            set(
                &mut cfg.backend.mode,
                a.backend.map(|b| match b {
                    BackendArg::Scripted => BackendMode::Scripted,
                    BackendArg::Live => BackendMode::Live,
                }),
            );
            if a.split.is_some() {
                cfg.split.clone_from(&a.split);
            }
            set(&mut cfg.agent.max_rounds, a.max_rounds);
            set(&mut cfg.agent.view_budget, a.view_budget);
            set(&mut cfg.agent.tool_budget, a.tool_budget);
            let mut needed = vec!["dataset", "index_dir", "out_dir"];
            if cfg.backend.mode == BackendMode::Scripted {
                needed.push("scripts");
            }
            cfg.require_paths(&needed)?;
            if cfg.jobs.is_none() && cfg.backend.mode == BackendMode::Live {
                let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
                cfg.jobs = Some(cores.min(cfg.backend.http.pool_size.max(1)));
            }
            let items = load_items(required(&cfg.paths.dataset, "dataset")?, cfg.split.as_deref())?;
            let out = required(&cfg.paths.out_dir, "output directory")?;
            let provider = provider_for(&cfg)?;
            let summary = cmd_screen(
                &items,
                required(&cfg.paths.index_dir, "index directory")?,
                out,
                &cfg,
                &*provider,
                mode,
            )?;
            write_predictions(out)?;
            write_atomic(&out.join("summary.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
            report_summary(&summary);
            Ok(screen_exit(&summary))
        }
        Command::Eval(a) => {
            set_path(&mut cfg.paths.dataset, &a.dataset);
            if a.split.is_some() {
                cfg.split.clone_from(&a.split);
            }
            cfg.require_paths(&["dataset"])?;
            let items = load_items(required(&cfg.paths.dataset, "dataset")?, cfg.split.as_deref())?;
            let preds = load_predictions(&a.predictions)?;
            let judge: Option<Box<dyn Judge>> = match a.judge {
                None => None,
                Some(JudgeArg::Exact) => Some(Box::new(ExactMatchJudge)),
                Some(JudgeArg::Llm) => {
                    let client = HttpChatClient::from_env(cfg.backend.http.clone())?;
                    Some(Box::new(LlmJudge::new(client, cfg.prompt_set()?.judge)?))
                }
            };
            let report = mode.with_jobs(cfg.jobs, || cmd_eval(&preds, &items, &cfg.hash(), judge.as_deref(), mode))?;
            emit(&report.render());
            if let Some(p) = &a.report {
                write_atomic(p, &(serde_json::to_string_pretty(&report)? + "\n"))?;
            }
            Ok(if report.missing_predictions.is_empty() { 0 } else { EXIT_DATA })
        }
        Command::Cluster(a) => {
            set(&mut cfg.isodata.k_init, a.k_init);
            set(&mut cfg.isodata.theta_split, a.theta_split);
            set(&mut cfg.isodata.theta_merge, a.theta_merge);
            let x = EmbeddingMatrix::read_tvse(&a.embeddings)?;
            let params = cfg.isodata.fitted_to(x.rows());
            let c = isodata_cluster_with(&x, &params, mode)?;
            print_json(&c)?;
            Ok(0)
        }
        Command::Localize(a) => {
            let index = KeyframeIndex::load(&a.index)?;
            let prompts = cfg.prompt_set()?;
            let llm: Box<dyn tvs_core::backends::ChatBackend> = match &a.script {
                Some(p) => {
                    let entries: Vec<ScriptEntry> = serde_json::from_str(&std::fs::read_to_string(p)?)?;
                    Box::new(ScriptedChat::new(entries))
                }
                None => Box::new(HttpChatClient::from_env(cfg.backend.http.clone())?),
            };
            let mut viewer = Viewer::new(&index, &*llm, &prompts);
            viewer.tool_budget = cfg.agent.tool_budget;
            let mut tx = Transcript::new();
            let (range, trace) = viewer.localize(&mut tx, 1, &a.text)?;
            print_json(&serde_json::json!({
                "range": [range.start(), range.end()],
                "trace": trace,
            }))?;
            Ok(0)
        }
    }
}

/// Collects every record into `predictions.jsonl`, sorted by item id.
fn write_predictions(out: &Path) -> Result<(), Error> {
    let recs: Vec<PredictionRecord> = read_records(&out.join("records"))?
        .into_iter()
        .map(|r| PredictionRecord { item_id: r.item_id, segments: r.segments })
        .collect();
    write_jsonl(&out.join("predictions.jsonl"), &recs)
}

fn report_summary(s: &ScreenSummary) {
    emit(&format!(
        "screened {} of {} items ({} already done, {} failed, {} not run)\n",
        s.completed.len(),
        s.total,
        s.skipped.len(),
        s.failed.len(),
        s.not_run.len()
    ));
    for f in &s.failed {
        eprintln!("failed {}: {}", f.item_id, f.error);
    }
    if let Some(r) = &s.aborted {
        eprintln!("stopped early, backend unavailable: {r}; rerun to resume");
    }
}

fn screen_exit(s: &ScreenSummary) -> u8 {
    if s.aborted.is_some() || s.failed.iter().any(|f| f.backend) {
        EXIT_BACKEND
    } else if !s.failed.is_empty() {
        EXIT_DATA
    } else {
        0
    }
}
