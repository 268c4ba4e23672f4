use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Language;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBlob {
    pub mime: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TtsError {
    #[error("speech provider misconfigured: {0}")]
    Config(String),
    #[error("speech synthesis failed: {0}")]
    Provider(String),
}

pub trait SpeechSynth: Send + Sync {
    /// `Ok(None)` means this provider produces no audio.
    fn synthesize(&self, text: &str, lang: Language) -> Result<Option<AudioBlob>, TtsError>;
}

/// No audio, ever.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullSpeech;

impl SpeechSynth for NullSpeech {
    fn synthesize(&self, _text: &str, _lang: Language) -> Result<Option<AudioBlob>, TtsError> {
        Ok(None)
    }
}

/// Stub provider: returns the UTF-8 text as the "audio" after a delay.
#[derive(Debug, Clone, Copy)]
pub struct EchoSpeech {
    pub delay: Duration,
}

impl SpeechSynth for EchoSpeech {
    fn synthesize(&self, text: &str, _lang: Language) -> Result<Option<AudioBlob>, TtsError> {
        std::thread::sleep(self.delay);
        Ok(Some(AudioBlob { mime: "application/x-echo".into(), bytes: text.as_bytes().to_vec() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteSpeechConfig {
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_voice")]
    pub voice: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_model() -> String {
    "tts-1".into()
}

fn default_voice() -> String {
    "sage".into()
}

fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_timeout_ms() -> u64 {
    30_000
}

/// `POST {endpoint}/audio/speech` client returning MP3 bytes.
pub struct RemoteSpeech {
    config: RemoteSpeechConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl RemoteSpeech {
    pub fn new(config: RemoteSpeechConfig) -> Result<Self, TtsError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| TtsError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| TtsError::Config(e.to_string()))?;
        Ok(RemoteSpeech { config, api_key, client })
    }
}

impl SpeechSynth for RemoteSpeech {
    fn synthesize(&self, text: &str, _lang: Language) -> Result<Option<AudioBlob>, TtsError> {
        let url = format!("{}/audio/speech", self.config.endpoint.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "voice": self.config.voice,
            "input": text,
            "response_format": "mp3",
        });
        let resp = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| TtsError::Provider(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(TtsError::Provider(format!("HTTP {}", resp.status())));
        }
        let bytes = resp.bytes().map_err(|e| TtsError::Provider(e.to_string()))?;
        Ok(Some(AudioBlob { mime: "audio/mpeg".into(), bytes: bytes.to_vec() }))
    }
}
