use serde::{Deserialize, Serialize};

use super::backend::{ChatMessage, ChatRole};
use crate::engine::{PhaseTag, Role, SessionState};
use crate::lang::Language;
use crate::retrieval::RetrievalBundle;

/// Turns of history included in a prompt.
pub const DEFAULT_TRANSCRIPT_WINDOW: usize = 12;

const SYSTEM_PROMPT: &str = "\
You are a warm, supportive conversational assistant that helps adults complete the PHQ-9 depression screening questionnaire. \
The conversation has three phases.
1. Rapport: open, empathetic conversation. Listen, reflect feelings, and do not diagnose.
2. Screening: the nine PHQ-9 items are asked one at a time, in order. The application records the answer; \
you only phrase the question kindly. Never guess or assign a score yourself. When an answer is ambiguous, \
explain the question in plain words and ask the user to pick the option that fits best. \
Never skip an item, and never move on before the current item has a clear answer.
3. Feedback: discuss the results supportively, explain what they may mean, and suggest appropriate resources. \
Remind the user that this is a screening tool, not a diagnosis.
Keep replies brief (two to four sentences). Use the reference material when it is relevant. \
If the user mentions self-harm or suicide, respond with care and encourage them to contact the support services listed.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTurn {
    pub role: Role,
    pub text: String,
}

/// Everything sent to the model for one reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub phase: PhaseTag,
    pub language_directive: String,
    /// Task for this reply, set by the dialogue engine.
    pub instruction: String,
    pub context: String,
    pub transcript_window: Vec<PromptTurn>,
    pub user_turn: String,
}

pub fn language_directive(lang: Language) -> String {
    match lang {
        Language::En => "Respond in English.".to_string(),
        Language::Zh => "Respond only in Mandarin Chinese (简体中文), directly in the user's language.".to_string(),
    }
}

/// Deterministic prompt for the next reply: system rules, retrieved context
/// in store order, the last `window` user/bot turns, then the user turn.
pub fn assemble_prompt(
    state: &SessionState,
    bundle: &RetrievalBundle,
    user_turn: &str,
    instruction: &str,
    window: usize,
) -> PromptBundle {
    let history: Vec<PromptTurn> = state
        .transcript
        .iter()
        .filter(|t| t.role != Role::System)
        .map(|t| PromptTurn { role: t.role, text: t.text.clone() })
        .collect();
    let skip = history.len().saturating_sub(window);
    PromptBundle {
        system_prompt: SYSTEM_PROMPT.to_string(),
        phase: state.phase.tag(),
        language_directive: language_directive(state.lang),
        instruction: instruction.to_string(),
        context: bundle.render(),
        transcript_window: history.into_iter().skip(skip).collect(),
        user_turn: user_turn.to_string(),
    }
}

impl PromptBundle {
    pub fn system_message(&self) -> String {
        let mut s = format!(
            "{}\n\n{}\nCurrent phase: {}.",
            self.system_prompt,
            self.language_directive,
            self.phase.as_str()
        );
        if !self.instruction.is_empty() {
            s.push_str(&format!("\nTask for this reply: {}", self.instruction));
        }
        s.push_str("\n\nReference material:\n");
        s.push_str(if self.context.is_empty() { "(none)" } else { &self.context });
        s
    }

    pub fn to_messages(&self) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage::new(ChatRole::System, self.system_message())];
        for turn in &self.transcript_window {
            let role = match turn.role {
                Role::User => ChatRole::User,
                _ => ChatRole::Assistant,
            };
            out.push(ChatMessage::new(role, turn.text.clone()));
        }
        out.push(ChatMessage::new(ChatRole::User, self.user_turn.clone()));
        out
    }

    /// Flat text rendering, stable across runs.
    pub fn render(&self) -> String {
        self.to_messages()
            .iter()
            .map(|m| format!("<{:?}>\n{}", m.role, m.content))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
