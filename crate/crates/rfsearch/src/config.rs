//! Run configuration: a JSON document whose top-level keys are the
//! [`SearchConfig`] fields plus `designer` and `evaluator` backend selectors.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rfsearch_core::designer::{MockDesigner, MockMode, ScriptEntry};
use rfsearch_core::eval::{LandscapeConfig, ReachTask};
use rfsearch_core::search::{ConfigError, SearchConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::http::HttpConfig;

/// Keys accepted besides the serialized `SearchConfig` field names.
const EXTRA_KEYS: [&str; 4] = ["designer", "evaluator", "budget_N", "init_count_N_I"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum DesignerBackend {
    Mock {
        #[serde(flatten)]
        mode: MockMode,
        #[serde(default)]
        fail_rate: f64,
        #[serde(default)]
        script: Vec<ScriptEntry>,
        /// JSON array of script entries, resolved relative to the config
        /// file and appended to `script` at load time.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        script_file: Option<PathBuf>,
    },
    Http(HttpConfig),
}

impl Default for DesignerBackend {
    fn default() -> Self {
        DesignerBackend::Mock {
            mode: MockMode::genome(LandscapeConfig::default().dim),
            fail_rate: 0.0,
            script: Vec::new(),
            script_file: None,
        }
    }
}

impl DesignerBackend {
    pub fn mock_designer(&self) -> Option<MockDesigner> {
        match self {
            DesignerBackend::Mock {
                mode, fail_rate, script, ..
            } => Some(MockDesigner::new(mode.clone()).with_fail_rate(*fail_rate).with_script(script.clone())),
            DesignerBackend::Http(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum EvaluatorBackend {
    Synthetic {
        #[serde(default)]
        landscape: LandscapeConfig,
    },
    Toy {
        #[serde(default)]
        task: ReachTask,
    },
    Subprocess(SubprocessConfig),
}

impl Default for EvaluatorBackend {
    fn default() -> Self {
        EvaluatorBackend::Synthetic {
            landscape: LandscapeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubprocessConfig {
    /// Program and leading arguments; the request path is appended.
    pub cmd: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_train_steps")]
    pub train_steps: u32,
    #[serde(default = "default_extension")]
    pub extension: String,
}

fn default_timeout() -> u64 {
    600
}

fn default_train_steps() -> u32 {
    200
}

fn default_extension() -> String {
    "rfn".into()
}

/// Backend choice, stored alongside the search state in checkpoints so a
/// run can be resumed without its original config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Backends {
    #[serde(default)]
    pub designer: DesignerBackend,
    #[serde(default)]
    pub evaluator: EvaluatorBackend,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub search: SearchConfig,
    #[serde(flatten)]
    pub backends: Backends,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config {path}: {source}")]
    Invalid { path: PathBuf, source: ConfigError },
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let obj = value.as_object().ok_or("top level must be an object")?;
        let known = known_keys();
        if let Some(k) = obj.keys().find(|k| !known.contains(k.as_str())) {
            return Err(format!("unknown key `{k}`"));
        }
        serde_json::from_value(value).map_err(|e| e.to_string())
    }

    /// Read, parse and validate a config file; `script_file` paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_owned(),
            source,
        })?;
        let parse_err = |message: String| LoadError::Parse {
            path: path.to_owned(),
            message,
        };
        let mut cfg = Self::from_json(&text).map_err(parse_err)?;
        if let DesignerBackend::Mock {
            script,
            script_file: Some(file),
            ..
        } = &mut cfg.backends.designer
        {
            let file = path.parent().unwrap_or(Path::new(".")).join(&*file);
            let extra = fs::read_to_string(&file)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Vec<ScriptEntry>>(&t).map_err(|e| e.to_string()))
                .map_err(|e| parse_err(format!("script file {}: {e}", file.display())))?;
            script.extend(extra);
        }
        cfg.search.validate().map_err(|source| LoadError::Invalid {
            path: path.to_owned(),
            source,
        })?;
        Ok(cfg)
    }
}

fn known_keys() -> BTreeSet<String> {
    let defaults = serde_json::to_value(SearchConfig::default()).expect("config serializes");
    let mut keys: BTreeSet<String> = defaults.as_object().into_iter().flat_map(|o| o.keys().cloned()).collect();
    keys.extend(EXTRA_KEYS.iter().map(|k| k.to_string()));
    keys
}
