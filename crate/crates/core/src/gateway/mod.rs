//! Generative backend abstraction: prompt assembly, streamed generation with
//! latency accounting, and optional speech synthesis.

mod backend;
mod latency;
mod prompt;
mod tts;

pub use backend::{BackendError, ChatBackend, ChatMessage, ChatRole, Flow, RemoteChat, RemoteChatConfig, ScriptEntry, ScriptedMock};
pub use latency::{LatencySummary, TurnLatency};
pub use prompt::{assemble_prompt, language_directive, PromptBundle, PromptTurn, DEFAULT_TRANSCRIPT_WINDOW};
pub use tts::{AudioBlob, EchoSpeech, NullSpeech, RemoteSpeech, RemoteSpeechConfig, SpeechSynth, TtsError};

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::lang::Language;
use crate::retrieval::{MixedTokenizer, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("generation cancelled after {} chars", partial.len())]
    Cancelled { partial: String },
}

/// Cooperative cancellation flag shared with a running generation.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationResult {
    pub text: String,
    pub token_count: usize,
    /// `gen_ms` measured; `tts_ms` is 0 and `total_ms` equals `gen_ms`.
    pub latency: TurnLatency,
    pub chunks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpeechOutcome {
    pub audio: Option<AudioBlob>,
    pub tts_ms: u64,
    /// Provider failed; the turn continues text-only.
    pub degraded: bool,
}

#[derive(Debug)]
struct InFlightLimiter {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a InFlightLimiter);

impl InFlightLimiter {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.current.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.current.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    speech: Arc<dyn SpeechSynth>,
    clock: Arc<dyn Clock>,
    limiter: InFlightLimiter,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>) -> Self {
        Gateway {
            backend,
            speech: Arc::new(NullSpeech),
            clock: Arc::new(SystemClock::default()),
            limiter: InFlightLimiter { max: 16, current: Mutex::new(0), freed: Condvar::new() },
        }
    }

    pub fn with_speech(mut self, speech: Arc<dyn SpeechSynth>) -> Self {
        self.speech = speech;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Caps concurrent backend requests across all sessions.
    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.limiter.max = max.max(1);
        self
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// Streams a reply; `gen_ms` runs from request to final chunk.
    pub fn generate(
        &self,
        prompt: &PromptBundle,
        on_chunk: &mut dyn FnMut(&str),
        cancel: &CancelToken,
    ) -> Result<GenerationResult, GatewayError> {
        let messages = prompt.to_messages();
        let _permit = self.limiter.acquire();
        let started = self.clock.monotonic_ms();
        let mut chunks = Vec::new();
        let mut cancelled = false;
        self.backend.stream_chat(&messages, &mut |c| {
            if cancel.is_cancelled() {
                cancelled = true;
                return Flow::Stop;
            }
            chunks.push(c.to_string());
            on_chunk(c);
            Flow::Continue
        })?;
        let gen_ms = (self.clock.monotonic_ms() - started).max(0.0).round() as u64;
        let text: String = chunks.concat();
        if cancelled || cancel.is_cancelled() {
            return Err(GatewayError::Cancelled { partial: text });
        }
        Ok(GenerationResult {
            token_count: MixedTokenizer.count(&text),
            text,
            latency: TurnLatency { gen_ms, tts_ms: 0, total_ms: gen_ms },
            chunks,
        })
    }

    /// Synthesizes speech for `text`. Empty text never reaches the provider
    /// and a provider failure degrades to text-only.
    pub fn synthesize_speech(&self, text: &str, lang: Language) -> SpeechOutcome {
        if text.trim().is_empty() {
            return SpeechOutcome { audio: None, tts_ms: 0, degraded: false };
        }
        let started = self.clock.monotonic_ms();
        let result = self.speech.synthesize(text, lang);
        let elapsed = (self.clock.monotonic_ms() - started).max(0.0).round() as u64;
        match result {
            Ok(None) => SpeechOutcome { audio: None, tts_ms: 0, degraded: false },
            Ok(Some(blob)) => SpeechOutcome { audio: Some(blob), tts_ms: elapsed.max(1), degraded: false },
            Err(e) => {
                tracing::warn!(error = %e, "speech synthesis failed; continuing text-only");
                SpeechOutcome { audio: None, tts_ms: elapsed, degraded: true }
            }
        }
    }
}
