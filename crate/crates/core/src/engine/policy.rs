use std::sync::Arc;

use super::machine::Decisions;
use super::state::SessionState;
use crate::gateway::{language_directive, CancelToken, Gateway, PromptBundle, PromptTurn};
use crate::lang::Language;
use crate::protocol::normalize_answer;
use crate::safety::{MatchInfo, SafetyGuard};

/// Decides when open conversation has gone on long enough. The turn limit
/// is enforced by the engine regardless.
pub trait TransitionPolicy: Send + Sync {
    fn fires(&self, state: &SessionState, last_user: &str) -> bool;
}

/// Fires when the user's message equals a configured token.
#[derive(Debug, Clone)]
pub struct TokenPolicy {
    token: String,
}

impl TokenPolicy {
    pub fn new(token: &str) -> Self {
        TokenPolicy { token: normalize_answer(token) }
    }
}

impl Default for TokenPolicy {
    fn default() -> Self {
        TokenPolicy::new("ready")
    }
}

impl TransitionPolicy for TokenPolicy {
    fn fires(&self, _state: &SessionState, last_user: &str) -> bool {
        normalize_answer(last_user) == self.token
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NeverPolicy;

impl TransitionPolicy for NeverPolicy {
    fn fires(&self, _: &SessionState, _: &str) -> bool {
        false
    }
}

pub const READINESS_MARKER: &str = "READY";

const READINESS_INSTRUCTION: &str = "Decide whether the user now seems comfortable enough to begin the \
questionnaire. Answer with the single word READY or WAIT and nothing else.";

/// Asks the model for a readiness marker. Backend errors count as "not yet".
pub struct LlmReadinessPolicy {
    gateway: Arc<Gateway>,
    window: usize,
}

impl LlmReadinessPolicy {
    pub fn new(gateway: Arc<Gateway>, window: usize) -> Self {
        LlmReadinessPolicy { gateway, window }
    }
}

impl TransitionPolicy for LlmReadinessPolicy {
    fn fires(&self, state: &SessionState, last_user: &str) -> bool {
        let history: Vec<PromptTurn> = state
            .transcript
            .iter()
            .filter(|t| t.role != super::Role::System)
            .map(|t| PromptTurn { role: t.role, text: t.text.clone() })
            .collect();
        let skip = history.len().saturating_sub(self.window);
        let prompt = PromptBundle {
            system_prompt: READINESS_INSTRUCTION.to_string(),
            phase: state.phase.tag(),
            language_directive: language_directive(Language::En),
            instruction: String::new(),
            context: String::new(),
            transcript_window: history.into_iter().skip(skip).collect(),
            user_turn: last_user.to_string(),
        };
        match self.gateway.generate(&prompt, &mut |_| {}, &CancelToken::default()) {
            Ok(r) => r.text.trim().to_uppercase().starts_with(READINESS_MARKER),
            Err(e) => {
                tracing::warn!(error = %e, "readiness check failed");
                false
            }
        }
    }
}

/// Decisions for a live turn.
pub struct LiveDecisions<'a> {
    pub guard: &'a SafetyGuard,
    pub policy: &'a dyn TransitionPolicy,
}

impl Decisions for LiveDecisions<'_> {
    fn crisis(&self, text: &str, lang: Language) -> Option<MatchInfo> {
        self.guard.detect_crisis(text, lang)
    }

    fn ready_for_screening(&self, state: &SessionState, text: &str) -> bool {
        self.policy.fires(state, text)
    }
}
