//! Three-phase dialogue: rapport, PHQ-9 administration with clarification,
//! feedback, with a crisis interlock over all of them.

mod conversation;
mod log;
mod machine;
mod policy;
mod state;

pub use conversation::{Conversation, ConversationDeps, ConversationError, OpenedSession, TurnOutcome};
pub use log::{parse_log, replay, resume, valid_session_id, JsonlSessionLog, LogContents, LogError, Replayed};
pub use machine::{advance, Decisions, EngineError, ReplyPlan, Step};
pub use policy::{LiveDecisions, LlmReadinessPolicy, NeverPolicy, TokenPolicy, TransitionPolicy, READINESS_MARKER};
pub use state::{
    CloseReason, EngineEvent, Phase, PhaseTag, Role, SessionMeta, SessionState, TurnRecord, RAPPORT_TURN_LIMIT,
    SOFT_CLARIFICATIONS,
};
