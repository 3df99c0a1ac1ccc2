use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::config::{BackendMode, RunConfig, Variant};
use super::records::{error_path, record_path, to_pretty, write_atomic, ItemError, RunRecord};
use crate::agent::{run_tvs, run_tvs_simple, AgentBackends, RunFailure, ScreeningResult};
use crate::backends::{
    CaptionGrounder, Captioner, ChatBackend, Grounder, HttpCaptioner, HttpChatClient, ScriptEntry, ScriptedChat,
    ScriptedGrounder,
};
use crate::benchgen::QAItem;
use crate::domain::io::read_jsonl;
use crate::dsl::run_tvs_blind;
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::prompts::PromptSet;
use crate::transcript::Transcript;
use crate::viewer::{KeyframeIndex, Viewer};

/// Canned replies for one item, keyed by the model role that consumes them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItemScript {
    pub launcher: Vec<ScriptEntry>,
    pub validator: Vec<ScriptEntry>,
    pub viewer: Vec<ScriptEntry>,
    /// The single-agent session.
    pub agent: Vec<ScriptEntry>,
    /// The plan-writing session of the video-blind variant.
    pub blind: Vec<ScriptEntry>,
    /// Object name to frame indices.
    pub grounder: BTreeMap<String, Vec<u64>>,
}

/// Model backends for one item.
pub struct ItemBackends {
    pub launcher: Arc<dyn ChatBackend>,
    pub validator: Arc<dyn ChatBackend>,
    pub viewer: Arc<dyn ChatBackend>,
    pub agent: Arc<dyn ChatBackend>,
    pub blind: Arc<dyn ChatBackend>,
    /// `None` falls back to caption matching over the keyframe index.
    pub grounder: Option<Arc<dyn Grounder>>,
    pub live_captioner: Option<Arc<dyn Captioner>>,
    scripted: Vec<(&'static str, Arc<ScriptedChat>)>,
}

impl ItemBackends {
    /// One chat backend for every role, no grounder and no live captioner.
    pub fn uniform(chat: Arc<dyn ChatBackend>) -> Self {
        ItemBackends {
            launcher: chat.clone(),
            validator: chat.clone(),
            viewer: chat.clone(),
            agent: chat.clone(),
            blind: chat,
            grounder: None,
            live_captioner: None,
            scripted: Vec::new(),
        }
    }

    /// Roles used by `variant` whose script still had replies after the run.
    fn leftovers(&self, variant: Variant) -> Vec<String> {
        let used: &[&str] = match variant {
            Variant::Full => &["launcher", "validator", "viewer"],
            Variant::Simple => &["agent", "viewer"],
            Variant::Blind => &["blind"],
        };
        self.scripted
            .iter()
            .filter(|(role, s)| used.contains(role) && s.remaining() > 0)
            .map(|(role, s)| format!("{} scripted {role} replies were not used", s.remaining()))
            .collect()
    }
}

pub trait BackendProvider: Send + Sync {
    fn for_item(&self, item_id: &str) -> Result<ItemBackends>;
}

/// Replays a scripts file: `{item_id: ItemScript}`, with `"*"` as the entry
/// for items that have none of their own.
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    scripts: BTreeMap<String, ItemScript>,
}

impl ScriptedProvider {
    pub fn new(scripts: BTreeMap<String, ItemScript>) -> Self {
        ScriptedProvider { scripts }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let scripts = serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("scripts {}: {e}", path.display())))?;
        Ok(Self::new(scripts))
    }
}

impl BackendProvider for ScriptedProvider {
    fn for_item(&self, item_id: &str) -> Result<ItemBackends> {
        let script = self.scripts.get(item_id).or_else(|| self.scripts.get("*")).cloned().unwrap_or_default();
        let chat = |entries: Vec<ScriptEntry>| Arc::new(ScriptedChat::new(entries));
        let (l, v, w) = (chat(script.launcher), chat(script.validator), chat(script.viewer));
        let (a, bl) = (chat(script.agent), chat(script.blind));
        let grounder: Option<Arc<dyn Grounder>> = if script.grounder.is_empty() {
            None
        } else {
            Some(Arc::new(ScriptedGrounder::new(script.grounder)))
        };
        Ok(ItemBackends {
            launcher: l.clone(),
            validator: v.clone(),
            viewer: w.clone(),
            agent: a.clone(),
            blind: bl.clone(),
            grounder,
            live_captioner: None,
            scripted: vec![("launcher", l), ("validator", v), ("viewer", w), ("agent", a), ("blind", bl)],
        })
    }
}

/// One shared HTTP client for every role.
pub struct LiveProvider {
    chat: Arc<HttpChatClient>,
    captioner: Option<Arc<HttpCaptioner>>,
}

impl LiveProvider {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let chat = Arc::new(HttpChatClient::from_env(cfg.backend.http.clone())?);
        let captioner = if cfg.backend.live_captions {
            Some(Arc::new(HttpCaptioner::from_env(cfg.backend.http.clone())?))
        } else {
            None
        };
        Ok(LiveProvider { chat, captioner })
    }
}

impl BackendProvider for LiveProvider {
    fn for_item(&self, _item_id: &str) -> Result<ItemBackends> {
        let mut b = ItemBackends::uniform(self.chat.clone());
        b.live_captioner = self.captioner.clone().map(|c| c as Arc<dyn Captioner>);
        Ok(b)
    }
}

/// The provider selected by `backend.mode`.
pub fn provider_for(cfg: &RunConfig) -> Result<Box<dyn BackendProvider>> {
    match cfg.backend.mode {
        BackendMode::Scripted => {
            let path = cfg
                .paths
                .scripts
                .as_ref()
                .ok_or_else(|| Error::validation("scripted backends need `paths.scripts`"))?;
            Ok(Box::new(ScriptedProvider::load(path)?))
        }
        BackendMode::Live => Ok(Box::new(LiveProvider::from_config(cfg)?)),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FailedItem {
    pub item_id: String,
    pub error: String,
    pub backend: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScreenSummary {
    pub total: usize,
    /// Items that already had a record.
    pub skipped: Vec<String>,
    pub completed: Vec<String>,
    pub failed: Vec<FailedItem>,
    /// Items never started because the backend went down.
    pub not_run: Vec<String>,
    pub aborted: Option<String>,
}

impl ScreenSummary {
    pub fn is_clean(&self) -> bool {
        self.failed.is_empty() && self.aborted.is_none()
    }
}

/// Runs one variant on one item.
pub fn screen_item(
    item: &QAItem,
    index: &KeyframeIndex,
    b: &ItemBackends,
    variant: Variant,
    prompts: &PromptSet,
    cfg: &RunConfig,
) -> std::result::Result<ScreeningResult, RunFailure> {
    if index.video().vid_name != item.vid_name {
        return Err(RunFailure {
            error: Error::validation(format!(
                "index is for `{}`, item `{}` is on `{}`",
                index.video().vid_name,
                item.item_id,
                item.vid_name
            )),
            transcript: Transcript::new(),
        });
    }
    let meta = index.video();
    let viewer = Viewer {
        index,
        llm: &*b.viewer,
        live_captioner: b.live_captioner.as_deref(),
        prompts,
        tool_budget: cfg.agent.tool_budget,
    };
    match variant {
        Variant::Full => run_tvs(
            meta,
            &item.question,
            &viewer,
            AgentBackends { launcher: &*b.launcher, validator: &*b.validator },
            prompts,
            &cfg.agent,
        ),
        Variant::Simple => {
            run_tvs_simple(&item.question, viewer.caption_tool(), &viewer, &*b.agent, prompts, &cfg.agent)
        }
        Variant::Blind => {
            let fallback = CaptionGrounder::new(index);
            let grounder: &dyn Grounder = match &b.grounder {
                Some(g) => &**g,
                None => &fallback,
            };
            run_tvs_blind(meta, &item.question, &*b.blind, Some(grounder), prompts, &cfg.agent)
        }
    }
}

fn is_outage(e: &Error) -> bool {
    matches!(e, Error::Backend { .. } | Error::Unavailable(_))
}

/// Loads the dataset, keeping only `split` when given.
pub fn load_items(path: &Path, split: Option<&str>) -> Result<Vec<QAItem>> {
    let items: Vec<QAItem> = read_jsonl(path)?;
    Ok(match split {
        None => items,
        Some(s) => items.into_iter().filter(|i| i.split.map(|x| x.name()) == Some(s)).collect(),
    })
}

/// Screens every item without a record under `out_dir/records`.
///
/// Each finished item is written as soon as it completes, so an interrupted
/// run resumes where it stopped. Failed items get an `.error.json` sidecar
/// and are retried next time. A backend outage stops new items from
/// starting.
pub fn cmd_screen(
    items: &[QAItem],
    index_dir: &Path,
    out_dir: &Path,
    cfg: &RunConfig,
    provider: &dyn BackendProvider,
    mode: ExecMode,
) -> Result<ScreenSummary> {
    let prompts = cfg.prompt_set()?;
    let records = out_dir.join("records");
    std::fs::create_dir_all(&records)?;

    let mut summary = ScreenSummary { total: items.len(), ..ScreenSummary::default() };
    let mut pending = Vec::new();
    for item in items {
        if record_path(&records, &item.item_id).exists() {
            summary.skipped.push(item.item_id.clone());
        } else {
            pending.push(item);
        }
    }

    let mut indexes: BTreeMap<&str, std::result::Result<KeyframeIndex, String>> = BTreeMap::new();
    for item in &pending {
        indexes.entry(item.vid_name.as_str()).or_insert_with(|| {
            let path = index_dir.join(format!("{}.json", item.vid_name));
            KeyframeIndex::load(&path).map_err(|e| format!("index {}: {e}", path.display()))
        });
    }

    enum Outcome {
        Done,
        Failed(FailedItem),
        NotRun,
    }
    let stop = AtomicBool::new(false);
    let abort_reason: Mutex<Option<String>> = Mutex::new(None);
    let run_one = |item: &&QAItem| -> Result<Outcome> {
        if stop.load(Ordering::SeqCst) {
            return Ok(Outcome::NotRun);
        }
        let id = &item.item_id;
        let result = match &indexes[item.vid_name.as_str()] {
            Err(msg) => Err(RunFailure { error: Error::validation(msg.clone()), transcript: Transcript::new() }),
            Ok(index) => match provider.for_item(id) {
                Err(error) => Err(RunFailure { error, transcript: Transcript::new() }),
                Ok(b) => screen_item(item, index, &b, cfg.variant, &prompts, cfg).map(|mut r| {
                    r.warnings.extend(b.leftovers(cfg.variant));
                    r
                }),
            },
        };
        match result {
            Ok(r) => {
                let rec = RunRecord::from_result(id, cfg.variant, r);
                write_atomic(&record_path(&records, id), &to_pretty(&rec)?)?;
                let err = error_path(&records, id);
                if err.exists() {
                    std::fs::remove_file(err)?;
                }
                Ok(Outcome::Done)
            }
            Err(f) => {
                if is_outage(&f.error) {
                    stop.store(true, Ordering::SeqCst);
                    abort_reason.lock().unwrap().get_or_insert_with(|| f.error.to_string());
                }
                let e = ItemError::from_failure(id, cfg.variant, &f);
                write_atomic(&error_path(&records, id), &to_pretty(&e)?)?;
                log::warn!("{id}: {}", f.error);
                Ok(Outcome::Failed(FailedItem { item_id: id.clone(), error: e.error, backend: e.backend }))
            }
        }
    };
    let outcomes = mode.with_jobs(cfg.jobs, || mode.map(&pending, run_one));
    for (item, o) in pending.iter().zip(outcomes) {
        match o? {
            Outcome::Done => summary.completed.push(item.item_id.clone()),
            Outcome::Failed(f) => summary.failed.push(f),
            Outcome::NotRun => summary.not_run.push(item.item_id.clone()),
        }
    }
    summary.aborted = abort_reason.into_inner().unwrap();
    Ok(summary)
}
