use std::sync::Arc;
use std::time::Duration;

use screener_core::engine::{Conversation, ConversationDeps, JsonlSessionLog, LlmReadinessPolicy, TokenPolicy};
use screener_core::gateway::{
    ChatBackend, EchoSpeech, Gateway, NullSpeech, RemoteChat, RemoteSpeech, ScriptEntry, ScriptedMock, SpeechSynth,
};
use screener_core::messages::Messages;
use screener_core::protocol::Instrument;
use screener_core::retrieval::{Embedder, HashEmbedder, RemoteEmbedder, StoreSet};
use screener_core::safety::SafetyGuard;
use thiserror::Error;

use crate::config::{BackendConfig, EmbedderConfig, PolicyConfig, ServiceConfig, SpeechConfig};

#[derive(Debug, Error)]
#[error("{0}")]
pub struct BuildError(pub String);

fn err(context: &str) -> impl Fn(&dyn std::fmt::Display) -> BuildError + '_ {
    move |e| BuildError(format!("{context}: {e}"))
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn ChatBackend>, BuildError> {
    Ok(match cfg {
        BackendConfig::Scripted { script, script_file, delay_ms, chunk_chars } => {
            let entries: Vec<ScriptEntry> = match script_file {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| err("backend.script_file")(&e))?;
                    serde_json::from_str(&text).map_err(|e| err("backend.script_file")(&e))?
                }
                None => script.clone(),
            };
            Arc::new(
                ScriptedMock::from_entries(entries)
                    .with_delay(Duration::from_millis(*delay_ms))
                    .with_chunk_chars(*chunk_chars),
            )
        }
        BackendConfig::Remote(rc) => Arc::new(RemoteChat::new(rc.clone()).map_err(|e| err("backend")(&e))?),
    })
}

pub fn build_speech(cfg: &SpeechConfig) -> Result<Arc<dyn SpeechSynth>, BuildError> {
    Ok(match cfg {
        SpeechConfig::Null => Arc::new(NullSpeech),
        SpeechConfig::Echo { delay_ms } => Arc::new(EchoSpeech { delay: Duration::from_millis(*delay_ms) }),
        SpeechConfig::Remote(rc) => Arc::new(RemoteSpeech::new(rc.clone()).map_err(|e| err("speech")(&e))?),
    })
}

pub fn build_embedder(cfg: &EmbedderConfig) -> Result<Arc<dyn Embedder>, BuildError> {
    Ok(match cfg {
        EmbedderConfig::Hash { dim, seed } => {
            if *dim == 0 {
                return Err(BuildError("embedder.dim must be positive".into()));
            }
            Arc::new(HashEmbedder::new(*dim, *seed))
        }
        EmbedderConfig::Remote(rc) => Arc::new(RemoteEmbedder::new(rc.clone()).map_err(|e| err("embedder")(&e))?),
    })
}

pub fn load_safety(cfg: &ServiceConfig) -> Result<SafetyGuard, BuildError> {
    SafetyGuard::load(cfg.files.lexicon.as_deref(), cfg.files.helplines.as_deref()).map_err(|e| err("safety")(&e))
}

/// Wires every dependency named by the config into a conversation.
pub fn build_conversation(cfg: &ServiceConfig) -> Result<Conversation, BuildError> {
    let gateway = Arc::new(
        Gateway::new(build_backend(&cfg.backend)?)
            .with_speech(build_speech(&cfg.speech)?)
            .with_max_in_flight(cfg.max_in_flight),
    );
    let log = JsonlSessionLog::open(&cfg.session_dir).map_err(|e| err("session_dir")(&e))?;
    let mut deps = ConversationDeps::new(gateway.clone(), log);
    if let Some(p) = &cfg.files.instrument {
        deps.instrument = Instrument::load(p).map_err(|e| err("files.instrument")(&e))?;
    }
    if let Some(p) = &cfg.files.messages {
        deps.messages = Messages::load(p).map_err(|e| err("files.messages")(&e))?;
    }
    deps.safety = load_safety(cfg)?;
    deps.stores = Arc::new(
        StoreSet::load_dir(build_embedder(&cfg.embedder)?, &cfg.store_dir).map_err(|e| err("store_dir")(&e))?,
    );
    deps.policy = match &cfg.policy {
        PolicyConfig::Token { token } => Arc::new(TokenPolicy::new(token)),
        PolicyConfig::Llm { window } => Arc::new(LlmReadinessPolicy::new(gateway, *window)),
    };
    deps.window = cfg.transcript_window;
    deps.k_per_store = cfg.k_per_store;
    Ok(Conversation::new(deps))
}
