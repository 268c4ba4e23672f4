use std::hash::Hasher;
use std::time::Duration;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::tokenize::is_cjk;
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("nothing to embed")]
    EmptyInput,
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("embedding provider not configured: {0}")]
    Config(String),
    #[error("embedding provider failed after {attempts} attempt(s): {message}")]
    Provider { message: String, attempts: u32, retryable: bool },
}

/// A finite, L2-normalized vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Normalizes `values` to unit length.
    pub fn from_raw(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(EmbedError::EmptyInput);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::from_raw(v)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

/// Cosine similarity clamped to [-1, 1]. Mismatched dimensions compare as 0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    if a.dim() != b.dim() {
        return 0.0;
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let na = a.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[String], exec: Execution) -> Vec<Result<EmbeddingVector, EmbedError>> {
        exec.map(texts, |t| self.embed(t))
    }
}

/// Deterministic feature-hashing embedder for tests and offline use.
///
/// Word unigrams and bigrams (lower-cased alphanumeric runs; each CJK
/// character is a word) are hashed with seeded FNV-1a into `dim` signed
/// buckets, then L2-normalized.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder { dim: 256, seed: 0x5eed_0f1a }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim, seed }
    }

    fn words(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        for c in text.chars().flat_map(char::to_lowercase) {
            if is_cjk(c) && c.is_alphanumeric() {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            } else if c.is_alphanumeric() {
                cur.push(c);
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    fn bucket(&self, tag: u8, feature: &str) -> (usize, f64) {
        let mut h = FnvHasher::default();
        h.write_u64(self.seed);
        h.write_u8(tag);
        h.write(feature.as_bytes());
        let v = h.finish();
        let sign = if v >> 63 == 0 { 1.0 } else { -1.0 };
        ((v % self.dim as u64) as usize, sign)
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let words = Self::words(text);
        if words.is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        let mut values = vec![0.0; self.dim];
        for w in &words {
            let (i, s) = self.bucket(1, w);
            values[i] += s;
        }
        for pair in words.windows(2) {
            let (i, s) = self.bucket(2, &format!("{} {}", pair[0], pair[1]));
            values[i] += s;
        }
        // Colliding features can cancel to an all-zero vector; fall back to an
        // unsigned count in that case so the text still embeds.
        EmbeddingVector::from_raw(values).or_else(|_| {
            let mut values = vec![0.0; self.dim];
            for w in &words {
                values[self.bucket(1, w).0] += 1.0;
            }
            EmbeddingVector::from_raw(values)
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteEmbedderConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub model: String,
    pub dim: usize,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_retries() -> u32 {
    2
}

fn default_timeout_ms() -> u64 {
    20_000
}

/// Embeddings endpoint client (`POST {endpoint}/embeddings`).
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    /// Fails before any network traffic when the key variable is unset.
    pub fn new(config: RemoteEmbedderConfig) -> Result<Self, EmbedError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| EmbedError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| EmbedError::Config(e.to_string()))?;
        Ok(RemoteEmbedder { config, api_key, client })
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        let url = format!("{}/embeddings", self.config.endpoint.trim_end_matches('/'));
        let body = serde_json::json!({ "model": self.config.model, "input": text });
        let mut attempts = 0;
        loop {
            attempts += 1;
            let outcome = self
                .client
                .post(&url)
                .bearer_auth(&self.api_key)
                .json(&body)
                .send()
                .map_err(|e| (e.to_string(), e.is_timeout() || e.is_connect()))
                .and_then(|resp| {
                    let status = resp.status();
                    if status.is_success() {
                        resp.json::<EmbeddingResponse>().map_err(|e| (e.to_string(), false))
                    } else {
                        let retryable = status.is_server_error() || status.as_u16() == 429;
                        Err((format!("HTTP {status}"), retryable))
                    }
                });
            match outcome {
                Ok(mut parsed) => {
                    let values = parsed
                        .data
                        .pop()
                        .ok_or(EmbedError::Provider { message: "empty data".into(), attempts, retryable: false })?
                        .embedding;
                    return EmbeddingVector::from_raw(values);
                }
                Err((message, retryable)) if !retryable || attempts > self.config.max_retries => {
                    return Err(EmbedError::Provider { message, attempts, retryable });
                }
                Err((message, _)) => {
                    tracing::warn!(attempts, %message, "embedding request failed, retrying");
                    std::thread::sleep(Duration::from_millis(200 * u64::from(attempts)));
                }
            }
        }
    }
}
