//! JSON bodies exchanged with clients.

use chrono::{DateTime, Utc};
use screener_core::engine::{EngineEvent, Phase, PhaseTag, Role, SessionState, TurnRecord};
use screener_core::gateway::TurnLatency;
use screener_core::safety::HelplineEntry;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    #[serde(default)]
    pub lang: Option<String>,
    #[serde(default)]
    pub country: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub greeting: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRequest {
    pub text: String,
}

/// One transcript turn; mirrors the stored record field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTurn {
    pub session_id: String,
    pub turn_index: u64,
    pub role: Role,
    pub content: String,
    pub phase: PhaseTag,
    pub timestamp: DateTime<Utc>,
    pub events: Vec<EngineEvent>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub latency: Option<TurnLatency>,
}

impl WireTurn {
    pub fn new(session_id: &str, r: &TurnRecord) -> Self {
        WireTurn {
            session_id: session_id.to_string(),
            turn_index: r.turn_index,
            role: r.role,
            content: r.text.clone(),
            phase: r.phase_at_turn,
            timestamp: r.timestamp,
            events: r.events.clone(),
            latency: r.latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub lang: String,
    pub country: String,
    pub phase: Phase,
    pub closed: bool,
    pub rapport_turns: u32,
    pub answered_items: usize,
    pub transcript: Vec<WireTurn>,
    /// SHA-256 of the full session state; equal digests mean equal state.
    pub digest: String,
}

impl SessionView {
    pub fn new(s: &SessionState) -> Self {
        SessionView {
            session_id: s.session_id.clone(),
            lang: s.lang.code().to_string(),
            country: s.country.as_str().to_string(),
            phase: s.phase.clone(),
            closed: s.closed,
            rapport_turns: s.rapport_turns,
            answered_items: s.partial_scores.len(),
            transcript: s.transcript.iter().map(|t| WireTurn::new(&s.session_id, t)).collect(),
            digest: s.digest(),
        }
    }
}

/// Payload of the `event` stream entry sent after a crisis turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelplinePayload {
    #[serde(rename = "type")]
    pub kind: String,
    pub entries: Vec<HelplineEntry>,
}

/// Payload of the final `done` stream entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnDone {
    pub user: WireTurn,
    pub bot: WireTurn,
    pub latency: TurnLatency,
    pub phase: Phase,
    pub closed: bool,
    /// One-time URL for this reply's audio.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub audio_url: Option<String>,
    pub speech_degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub remaining: Option<usize>,
}
