use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gateway::TurnLatency;
use crate::lang::{Country, Language};
use crate::protocol::{ItemScore, Phq9Result, SeverityBand, ITEM_COUNT};
use crate::safety::MatchInfo;

/// Rapport turns after which screening starts regardless of policy.
pub const RAPPORT_TURN_LIMIT: u32 = 20;

/// Soft clarifications per item before only the options are re-presented.
pub const SOFT_CLARIFICATIONS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Rapport,
    Screening { current_item: u8, clarification_attempts: u32 },
    Feedback,
    /// Interrupted by a crisis; `resume` is where the session continues.
    CrisisHold { resume: Box<Phase> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    Rapport,
    Screening,
    Feedback,
    CrisisHold,
}

impl PhaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseTag::Rapport => "rapport",
            PhaseTag::Screening => "screening",
            PhaseTag::Feedback => "feedback",
            PhaseTag::CrisisHold => "crisis_hold",
        }
    }
}

impl fmt::Display for PhaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Phase {
    pub fn screening(item: u8) -> Phase {
        Phase::Screening { current_item: item, clarification_attempts: 0 }
    }

    pub fn tag(&self) -> PhaseTag {
        match self {
            Phase::Rapport => PhaseTag::Rapport,
            Phase::Screening { .. } => PhaseTag::Screening,
            Phase::Feedback => PhaseTag::Feedback,
            Phase::CrisisHold { .. } => PhaseTag::CrisisHold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Bot,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    UserEnded,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EngineEvent {
    PhaseTransition { from: Phase, to: Phase },
    ClarificationIssued { item: u8, attempt: u32 },
    CrisisTriggered { matched: MatchInfo },
    ItemAnswered { item: u8, score: ItemScore },
    ResultReady { total: u8, band: SeverityBand },
    SessionClosed { reason: CloseReason },
}

/// Carried by the first log line so a session can be rebuilt from its log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub lang: Language,
    pub country: Country,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn_index: u64,
    pub role: Role,
    pub text: String,
    pub phase_at_turn: PhaseTag,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<TurnLatency>,
    #[serde(default)]
    pub events: Vec<EngineEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<SessionMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub lang: Language,
    pub country: Country,
    pub phase: Phase,
    pub rapport_turns: u32,
    pub transcript: Vec<TurnRecord>,
    pub partial_scores: BTreeMap<u8, ItemScore>,
    pub result: Option<Phq9Result>,
    pub closed: bool,
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, lang: Language, country: Country) -> Self {
        SessionState {
            session_id: session_id.into(),
            lang,
            country,
            phase: Phase::Rapport,
            rapport_turns: 0,
            transcript: Vec::new(),
            partial_scores: BTreeMap::new(),
            result: None,
            closed: false,
        }
    }

    pub fn meta(&self) -> SessionMeta {
        SessionMeta { lang: self.lang, country: self.country.clone() }
    }

    pub fn next_turn_index(&self) -> u64 {
        self.transcript.last().map_or(0, |t| t.turn_index + 1)
    }

    /// Items still unanswered.
    pub fn remaining_items(&self) -> usize {
        ITEM_COUNT - self.partial_scores.len()
    }

    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("session state serializes");
        crate::protocol::hex(&Sha256::digest(&bytes))
    }
}
