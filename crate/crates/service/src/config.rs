//! Service configuration, read from TOML or JSON.
//!
//! Credentials are never part of the file: remote providers name the
//! environment variable that holds their key.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use screener_core::gateway::{RemoteChatConfig, RemoteSpeechConfig, ScriptEntry};
use screener_core::retrieval::{RemoteEmbedderConfig, DEFAULT_K_PER_STORE};
use screener_core::gateway::DEFAULT_TRANSCRIPT_WINDOW;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Replays `script` (or the JSON array in `script_file`) in order.
    Scripted {
        #[serde(default)]
        script: Vec<ScriptEntry>,
        #[serde(default)]
        script_file: Option<PathBuf>,
        #[serde(default)]
        delay_ms: u64,
        #[serde(default = "default_chunk_chars")]
        chunk_chars: usize,
    },
    Remote(RemoteChatConfig),
}

fn default_chunk_chars() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeechConfig {
    #[default]
    Null,
    Echo {
        #[serde(default)]
        delay_ms: u64,
    },
    Remote(RemoteSpeechConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbedderConfig {
    Hash {
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Remote(RemoteEmbedderConfig),
}

fn default_dim() -> usize {
    256
}

fn default_seed() -> u64 {
    0x5eed_0f1a
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Hash { dim: default_dim(), seed: default_seed() }
    }
}

/// How the rapport phase decides the user is ready for the questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Token {
        #[serde(default = "default_token")]
        token: String,
    },
    Llm {
        #[serde(default = "default_policy_window")]
        window: usize,
    },
}

fn default_token() -> String {
    "ready".into()
}

fn default_policy_window() -> usize {
    6
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig::Token { token: default_token() }
    }
}

/// Optional replacements for the built-in data files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub instrument: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub helplines: Option<PathBuf>,
    pub messages: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Session logs, one JSONL file per session.
    pub session_dir: PathBuf,
    /// Vector store snapshots written by `ingest`.
    pub store_dir: PathBuf,
    #[serde(default = "default_k")]
    pub k_per_store: usize,
    #[serde(default = "default_window")]
    pub transcript_window: usize,
    #[serde(default = "default_idle_hours")]
    pub idle_timeout_hours: u64,
    #[serde(default = "default_lang")]
    pub default_lang: String,
    #[serde(default = "default_country")]
    pub default_country: String,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub files: DataFiles,
    pub backend: BackendConfig,
    #[serde(default)]
    pub speech: SpeechConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub policy: PolicyConfig,
}

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

fn default_k() -> usize {
    DEFAULT_K_PER_STORE
}

fn default_window() -> usize {
    DEFAULT_TRANSCRIPT_WINDOW
}

fn default_idle_hours() -> u64 {
    24
}

fn default_lang() -> String {
    "en".into()
}

fn default_country() -> String {
    "UK".into()
}

fn default_max_in_flight() -> usize {
    16
}

/// Keys that would put a secret into the file.
const SECRET_KEYS: [&str; 5] = ["api_key", "apikey", "secret", "password", "token_value"];

fn find_secret(v: &serde_json::Value, path: &str) -> Option<String> {
    match v {
        serde_json::Value::Object(map) => map.iter().find_map(|(k, v)| {
            let here = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            let lower = k.to_lowercase();
            if SECRET_KEYS.iter().any(|s| lower == *s || lower.ends_with(&format!("_{s}"))) {
                Some(here)
            } else {
                find_secret(v, &here)
            }
        }),
        serde_json::Value::Array(items) => items.iter().find_map(|v| find_secret(v, path)),
        _ => None,
    }
}

impl ServiceConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn parse(text: &str, name: &str) -> Result<Self, ConfigError> {
        let perr = |message: String| ConfigError::Parse { path: name.to_string(), message };
        let raw: serde_json::Value = if name.ends_with(".json") {
            serde_json::from_str(text).map_err(|e| perr(e.to_string()))?
        } else {
            let t: toml::Value = toml::from_str(text).map_err(|e| perr(e.to_string()))?;
            serde_json::to_value(t).map_err(|e| perr(e.to_string()))?
        };
        if let Some(key) = find_secret(&raw, "") {
            return Err(ConfigError::Invalid(format!(
                "{key}: credentials must come from the environment, not the config file"
            )));
        }
        serde_json::from_value(raw).map_err(|e| perr(e.to_string()))
    }

    /// Reads, resolves relative paths against the file's directory and
    /// validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        if let Some(base) = path.parent() {
            cfg.resolve_relative(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.session_dir);
        fix(&mut self.store_dir);
        for p in [&mut self.files.instrument, &mut self.files.lexicon, &mut self.files.helplines, &mut self.files.messages]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        if let BackendConfig::Scripted { script_file: Some(p), .. } = &mut self.backend {
            fix(p);
        }
    }

    pub fn bind_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.bind.parse().map_err(|_| ConfigError::Invalid(format!("bind {:?} is not host:port", self.bind)))
    }

    pub fn idle_timeout(&self) -> Duration {
        Duration::from_secs(self.idle_timeout_hours * 3600)
    }

    /// Every referenced file must exist; numeric settings must be usable.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bind_addr()?;
        if self.k_per_store == 0 {
            return Err(ConfigError::Invalid("k_per_store must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ConfigError::Invalid("max_in_flight must be at least 1".into()));
        }
        if self.idle_timeout_hours == 0 {
            return Err(ConfigError::Invalid("idle_timeout_hours must be at least 1".into()));
        }
        self.default_lang
            .parse::<screener_core::Language>()
            .map_err(|e| ConfigError::Invalid(format!("default_lang: {e}")))?;
        let files = [
            ("files.instrument", &self.files.instrument),
            ("files.lexicon", &self.files.lexicon),
            ("files.helplines", &self.files.helplines),
            ("files.messages", &self.files.messages),
        ];
        let script = match &self.backend {
            BackendConfig::Scripted { script_file, .. } => script_file.clone(),
            BackendConfig::Remote(_) => None,
        };
        for (name, path) in files.into_iter().chain([("backend.script_file", &script)]) {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ConfigError::Invalid(format!("{name}: {} does not exist", p.display())));
                }
            }
        }
        if let BackendConfig::Scripted { script, script_file: Some(_), .. } = &self.backend {
            if !script.is_empty() {
                return Err(ConfigError::Invalid("backend: give either script or script_file, not both".into()));
            }
        }
        Ok(())
    }
}
