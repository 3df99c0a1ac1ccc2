//! Frame captioning backends.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::http::{HttpSettings, Transport, ENV_CAPTION_ENDPOINT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub frame_index: u64,
    pub timestamp: f64,
}

pub trait Captioner: Send + Sync {
    fn caption(&self, video: &str, frame: FrameRef) -> Result<String>;

    /// True when arbitrary frames can be captioned on demand.
    fn is_live(&self) -> bool {
        false
    }
}

/// Returns `CAP[{frame_index}]` and counts invocations.
#[derive(Debug, Default)]
pub struct MockCaptioner {
    calls: AtomicUsize,
}

impl MockCaptioner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sentinel(frame_index: u64) -> String {
        format!("CAP[{frame_index}]")
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Captioner for MockCaptioner {
    fn caption(&self, _video: &str, frame: FrameRef) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(Self::sentinel(frame.frame_index))
    }

    fn is_live(&self) -> bool {
        true
    }
}

#[derive(Deserialize)]
struct SidecarRow {
    #[serde(default)]
    frame_index: Option<u64>,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    header: Option<Value>,
}

/// Precomputed captions from a sidecar JSONL file
/// (`{"frame_index": i, "caption": "..."}` per line).
///
/// Header lines and per-row error entries are skipped; lookups that miss
/// fail with [`Error::MissingCaption`].
#[derive(Clone, Debug, Default)]
pub struct SidecarCaptioner {
    captions: BTreeMap<u64, String>,
    header: Option<Value>,
    failed: Vec<u64>,
}

impl SidecarCaptioner {
    pub fn from_map(captions: BTreeMap<u64, String>) -> Self {
        SidecarCaptioner { captions, ..Self::default() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut out = SidecarCaptioner::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: SidecarRow = serde_json::from_str(line).map_err(|e| {
                Error::validation(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            if let Some(h) = row.header {
                out.header = Some(h);
                continue;
            }
            let idx = row.frame_index.ok_or_else(|| {
                Error::validation(format!("{}:{}: missing frame_index", path.display(), i + 1))
            })?;
            match (row.caption, row.error) {
                (Some(c), None) => {
                    if out.captions.insert(idx, c).is_some() {
                        return Err(Error::validation(format!(
                            "{}:{}: duplicate caption for frame {idx}",
                            path.display(),
                            i + 1
                        )));
                    }
                }
                _ => out.failed.push(idx),
            }
        }
        Ok(out)
    }

    pub fn header(&self) -> Option<&Value> {
        self.header.as_ref()
    }

    /// Frames the extractor reported as failed.
    pub fn failed_frames(&self) -> &[u64] {
        &self.failed
    }

    pub fn len(&self) -> usize {
        self.captions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }
}

impl Captioner for SidecarCaptioner {
    fn caption(&self, _video: &str, frame: FrameRef) -> Result<String> {
        self.captions
            .get(&frame.frame_index)
            .cloned()
            .ok_or(Error::MissingCaption { frame_index: frame.frame_index })
    }
}

/// Proxies to a caption service: POST `{video, frame_index, timestamp}`,
/// expects `{"caption": "..."}`.
pub struct HttpCaptioner {
    endpoint: String,
    transport: Transport,
}

impl HttpCaptioner {
    pub fn new(endpoint: &str, settings: HttpSettings) -> Self {
        HttpCaptioner { endpoint: endpoint.to_string(), transport: Transport::new(settings) }
    }

    pub fn from_env(settings: HttpSettings) -> Result<Self> {
        let endpoint = std::env::var(ENV_CAPTION_ENDPOINT)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::Unavailable(format!("{ENV_CAPTION_ENDPOINT} is not set")))?;
        Ok(Self::new(&endpoint, settings))
    }
}

impl Captioner for HttpCaptioner {
    fn caption(&self, video: &str, frame: FrameRef) -> Result<String> {
        let body = json!({"video": video, "frame_index": frame.frame_index, "timestamp": frame.timestamp});
        let to_caption_err = |message: String| Error::Caption { frame_index: frame.frame_index, message };
        let resp = self
            .transport
            .post_json(&self.endpoint, None, &body)
            .map_err(|e| to_caption_err(e.to_string()))?;
        resp.get("caption")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| to_caption_err(format!("response without caption: {resp}")))
    }

    fn is_live(&self) -> bool {
        true
    }
}
