use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::AgentConfig;
use crate::backends::HttpSettings;
use crate::benchgen::BenchgenConfig;
use crate::error::{Error, Result};
use crate::isodata::IsodataParams;
use crate::prompts::PromptSet;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Full,
    Simple,
    Blind,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Simple => "simple",
            Variant::Blind => "blind",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "simple" => Ok(Variant::Simple),
            "blind" => Ok(Variant::Blind),
            other => Err(Error::validation(format!("unknown variant `{other}` (full, simple, blind)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    /// Replay per-item scripts from `paths.scripts`.
    #[default]
    Scripted,
    /// Chat-completions endpoint configured through the environment.
    Live,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub annotations: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    /// Directory of `{vid_name}.json` keyframe indexes.
    pub index_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub scripts: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub mode: BackendMode,
    pub http: HttpSettings,
    /// Serve off-keyframe caption requests from the live caption service.
    pub live_captions: bool,
}

/// Everything a batch command needs. Loaded from TOML; command-line flags
/// are applied on top by the caller.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    /// When set, overrides the benchgen, isodata and backend seeds.
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// Restrict screening and evaluation to one split.
    pub split: Option<String>,
    pub paths: Paths,
    pub agent: AgentConfig,
    pub isodata: IsodataParams,
    pub benchgen: BenchgenConfig,
    pub backend: BackendConfig,
    /// Role name to template file.
    pub prompts: BTreeMap<String, PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        if let Some(s) = cfg.seed {
            cfg.apply_seed(s);
        }
        Ok(cfg)
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.benchgen.seed = seed;
        self.isodata.rng_seed = seed;
        self.backend.http.seed = seed;
    }

    /// Reads a TOML config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        Ok(cfg)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.paths.annotations);
        fix(&mut self.paths.dataset);
        fix(&mut self.paths.index_dir);
        fix(&mut self.paths.out_dir);
        fix(&mut self.paths.scripts);
        for p in self.prompts.values_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn prompt_set(&self) -> Result<PromptSet> {
        PromptSet::with_overrides(&self.prompts)
    }

    /// Checks that every path the command relies on exists.
    pub fn require_paths(&self, names: &[&str]) -> Result<()> {
        for &n in names {
            let p = match n {
                "annotations" => &self.paths.annotations,
                "dataset" => &self.paths.dataset,
                "index_dir" => &self.paths.index_dir,
                "scripts" => &self.paths.scripts,
                "out_dir" => &self.paths.out_dir,
                _ => return Err(Error::validation(format!("unknown path `{n}`"))),
            };
            match p {
                None => return Err(Error::validation(format!("missing required path `{n}`"))),
                Some(p) if n != "out_dir" && !p.exists() => {
                    return Err(Error::validation(format!("{n} path {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        if self.agent.max_rounds == 0 {
            return Err(Error::validation("agent.max_rounds must be at least 1"));
        }
        Ok(())
    }

    /// sha256 over the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
