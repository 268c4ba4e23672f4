use std::collections::VecDeque;
use std::io::{BufRead, BufReader};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: ChatRole, content: impl Into<String>) -> Self {
        ChatMessage { role, content: content.into() }
    }
}

/// Returned by a chunk callback to keep streaming or stop early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend misconfigured: {0}")]
    Config(String),
    #[error("backend request failed after {retries} retr{}: {message}", if *retries == 1 { "y" } else { "ies" })]
    Remote { message: String, retries: u32 },
    #[error("scripted backend exhausted after {served} repl{}", if *served == 1 { "y" } else { "ies" })]
    ScriptExhausted { served: usize },
    #[error("scripted failure: {0}")]
    Injected(String),
}

/// A streaming chat-completion backend.
pub trait ChatBackend: Send + Sync {
    /// Streams the reply to `on_chunk`. Returning [`Flow::Stop`] ends the
    /// stream early without error.
    fn stream_chat(
        &self,
        messages: &[ChatMessage],
        on_chunk: &mut dyn FnMut(&str) -> Flow,
    ) -> Result<(), BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    Reply(String),
    Fail { fail: String },
}

/// Replays a fixed script of replies in order; errors once exhausted.
#[derive(Debug)]
pub struct ScriptedMock {
    script: Mutex<VecDeque<ScriptEntry>>,
    served: Mutex<usize>,
    delay: Duration,
    chunk_chars: usize,
    prompts: Mutex<Vec<Vec<ChatMessage>>>,
}

impl ScriptedMock {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::from_entries(replies.into_iter().map(|r| ScriptEntry::Reply(r.into())))
    }

    pub fn from_entries(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        ScriptedMock {
            script: Mutex::new(entries.into_iter().collect()),
            served: Mutex::new(0),
            delay: Duration::ZERO,
            chunk_chars: 4,
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Sleeps this long before the first chunk of every reply.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_chunk_chars(mut self, n: usize) -> Self {
        self.chunk_chars = n.max(1);
        self
    }

    pub fn remaining(&self) -> usize {
        self.script.lock().unwrap().len()
    }

    /// Every message list received so far.
    pub fn received(&self) -> Vec<Vec<ChatMessage>> {
        self.prompts.lock().unwrap().clone()
    }
}

impl ChatBackend for ScriptedMock {
    fn stream_chat(
        &self,
        messages: &[ChatMessage],
        on_chunk: &mut dyn FnMut(&str) -> Flow,
    ) -> Result<(), BackendError> {
        self.prompts.lock().unwrap().push(messages.to_vec());
        let entry = self.script.lock().unwrap().pop_front();
        let mut served = self.served.lock().unwrap();
        let reply = match entry {
            None => return Err(BackendError::ScriptExhausted { served: *served }),
            Some(ScriptEntry::Fail { fail }) => {
                *served += 1;
                return Err(BackendError::Injected(fail));
            }
            Some(ScriptEntry::Reply(r)) => r,
        };
        *served += 1;
        drop(served);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let chars: Vec<char> = reply.chars().collect();
        for piece in chars.chunks(self.chunk_chars) {
            let piece: String = piece.iter().collect();
            if on_chunk(&piece) == Flow::Stop {
                break;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteChatConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key. Keys never live in config files.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_retries() -> u32 {
    2
}

fn default_timeout_ms() -> u64 {
    30_000
}

/// Streaming `POST {endpoint}/chat/completions` client (server-sent events).
pub struct RemoteChat {
    config: RemoteChatConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteChat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteChat").field("config", &self.config).finish_non_exhaustive()
    }
}

#[derive(Deserialize)]
struct StreamFrame {
    choices: Vec<StreamChoice>,
}

#[derive(Deserialize)]
struct StreamChoice {
    #[serde(default)]
    delta: StreamDelta,
}

#[derive(Deserialize, Default)]
struct StreamDelta {
    #[serde(default)]
    content: Option<String>,
}

impl RemoteChat {
    /// Reads the key from the environment; fails before any network call
    /// when it is missing.
    pub fn new(config: RemoteChatConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteChat { config, api_key, client })
    }

    fn open(&self, messages: &[ChatMessage]) -> Result<reqwest::blocking::Response, (String, bool)> {
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let mut body = serde_json::json!({
            "model": self.config.model,
            "messages": messages,
            "stream": true,
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = t.into();
        }
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| (e.to_string(), e.is_timeout() || e.is_connect()))?;
        let status = resp.status();
        if status.is_success() {
            Ok(resp)
        } else {
            Err((format!("HTTP {status}"), status.is_server_error() || status.as_u16() == 429))
        }
    }
}

/// Parses one SSE line; `Ok(None)` for keep-alives and non-content frames,
/// `Err(())` on the `[DONE]` sentinel.
pub(crate) fn parse_sse_line(line: &str) -> Result<Option<String>, ()> {
    let Some(data) = line.strip_prefix("data:") else {
        return Ok(None);
    };
    let data = data.trim();
    if data == "[DONE]" {
        return Err(());
    }
    let frame: StreamFrame = match serde_json::from_str(data) {
        Ok(f) => f,
        Err(_) => return Ok(None),
    };
    Ok(frame.choices.into_iter().next().and_then(|c| c.delta.content).filter(|c| !c.is_empty()))
}

impl ChatBackend for RemoteChat {
    fn stream_chat(
        &self,
        messages: &[ChatMessage],
        on_chunk: &mut dyn FnMut(&str) -> Flow,
    ) -> Result<(), BackendError> {
        let mut retries = 0;
        // Retries only happen before the first chunk reaches the caller.
        let resp = loop {
            match self.open(messages) {
                Ok(r) => break r,
                Err((message, retryable)) if !retryable || retries >= self.config.max_retries => {
                    return Err(BackendError::Remote { message, retries });
                }
                Err((message, _)) => {
                    retries += 1;
                    tracing::warn!(retries, %message, "chat request failed, retrying");
                    std::thread::sleep(Duration::from_millis(250 * u64::from(retries)));
                }
            }
        };
        for line in BufReader::new(resp).lines() {
            let line = line.map_err(|e| BackendError::Remote { message: e.to_string(), retries })?;
            match parse_sse_line(&line) {
                Err(()) => break,
                Ok(Some(content)) => {
                    if on_chunk(&content) == Flow::Stop {
                        break;
                    }
                }
                Ok(None) => {}
            }
        }
        Ok(())
    }
}
