use thiserror::Error;

use super::state::{CloseReason, EngineEvent, Phase, SessionState, RAPPORT_TURN_LIMIT, SOFT_CLARIFICATIONS};
use crate::lang::Language;
use crate::protocol::{normalize_answer, AnswerParse, Instrument, ItemScore, Phq9Result, ITEM_COUNT};
use crate::safety::MatchInfo;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("session {0} is closed")]
    Closed(String),
    #[error("session {0} already has a turn in flight")]
    Busy(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Outside judgements the state machine depends on. Live sessions consult
/// the safety guard and transition policy; replay answers from the log.
pub trait Decisions {
    fn crisis(&self, text: &str, lang: Language) -> Option<MatchInfo>;
    /// Asked only in Rapport, after the turn has been counted.
    fn ready_for_screening(&self, state: &SessionState, text: &str) -> bool;
}

/// What the reply to this turn must contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplyPlan {
    /// Free conversation in Rapport or Feedback.
    Converse,
    IntroduceScreening { item: u8 },
    AskItem { item: u8 },
    Clarify { item: u8, attempt: u32, soft: bool },
    Summary { result: Phq9Result },
    Crisis { matched: MatchInfo },
    CrisisReminder,
    Resume { to: Phase },
    Goodbye,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: SessionState,
    pub plan: ReplyPlan,
    pub events: Vec<EngineEvent>,
}

const RESUME_WORDS: [&str; 3] = ["continue", "resume", "继续"];
const END_WORDS: [&str; 3] = ["end", "stop", "结束"];

/// Applies one user turn. The transcript is left untouched; the caller
/// appends the turn records once the reply exists.
pub fn advance(
    state: &SessionState,
    input: &str,
    decisions: &dyn Decisions,
    instrument: &Instrument,
) -> Result<Step, EngineError> {
    if state.closed {
        return Err(EngineError::Closed(state.session_id.clone()));
    }
    let mut next = state.clone();
    let mut events = Vec::new();

    if let Some(matched) = decisions.crisis(input, state.lang) {
        let resume = match &state.phase {
            Phase::CrisisHold { resume } => resume.clone(),
            other => {
                let hold = Phase::CrisisHold { resume: Box::new(other.clone()) };
                events.push(EngineEvent::PhaseTransition { from: other.clone(), to: hold });
                Box::new(other.clone())
            }
        };
        next.phase = Phase::CrisisHold { resume };
        events.push(EngineEvent::CrisisTriggered { matched: matched.clone() });
        return Ok(Step { state: next, plan: ReplyPlan::Crisis { matched }, events });
    }

    let plan = match &state.phase {
        Phase::Rapport => {
            next.rapport_turns += 1;
            if next.rapport_turns >= RAPPORT_TURN_LIMIT || decisions.ready_for_screening(&next, input) {
                next.phase = Phase::screening(1);
                events.push(EngineEvent::PhaseTransition { from: Phase::Rapport, to: next.phase.clone() });
                ReplyPlan::IntroduceScreening { item: 1 }
            } else {
                ReplyPlan::Converse
            }
        }
        Phase::Screening { current_item, clarification_attempts } => {
            let item = *current_item;
            match instrument.parse_answer(input, state.lang) {
                AnswerParse::Categorical(score) => record_answer(&mut next, &mut events, item, score)?,
                AnswerParse::Ambiguous(_) => {
                    let attempt = clarification_attempts + 1;
                    next.phase = Phase::Screening { current_item: item, clarification_attempts: attempt };
                    events.push(EngineEvent::ClarificationIssued { item, attempt });
                    ReplyPlan::Clarify { item, attempt, soft: attempt <= SOFT_CLARIFICATIONS }
                }
            }
        }
        Phase::Feedback => ReplyPlan::Converse,
        Phase::CrisisHold { resume } => {
            let word = normalize_answer(input);
            if RESUME_WORDS.contains(&word.as_str()) {
                next.phase = (**resume).clone();
                events.push(EngineEvent::PhaseTransition { from: state.phase.clone(), to: next.phase.clone() });
                ReplyPlan::Resume { to: next.phase.clone() }
            } else if END_WORDS.contains(&word.as_str()) {
                next.closed = true;
                events.push(EngineEvent::SessionClosed { reason: CloseReason::UserEnded });
                ReplyPlan::Goodbye
            } else {
                ReplyPlan::CrisisReminder
            }
        }
    };
    Ok(Step { state: next, plan, events })
}

fn record_answer(
    next: &mut SessionState,
    events: &mut Vec<EngineEvent>,
    item: u8,
    score: ItemScore,
) -> Result<ReplyPlan, EngineError> {
    if next.partial_scores.insert(item, score).is_some() {
        return Err(EngineError::InvalidState(format!("item {item} answered twice")));
    }
    events.push(EngineEvent::ItemAnswered { item, score });
    if usize::from(item) < ITEM_COUNT {
        next.phase = Phase::screening(item + 1);
        return Ok(ReplyPlan::AskItem { item: item + 1 });
    }
    let scores: Vec<ItemScore> = next.partial_scores.values().copied().collect();
    let result = Phq9Result::from_scores(&scores).map_err(|e| EngineError::InvalidState(e.to_string()))?;
    events.push(EngineEvent::ResultReady { total: result.total(), band: result.severity() });
    events.push(EngineEvent::PhaseTransition { from: next.phase.clone(), to: Phase::Feedback });
    next.phase = Phase::Feedback;
    next.result = Some(result.clone());
    Ok(ReplyPlan::Summary { result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Country;
    use crate::safety::SafetyGuard;

    struct Fixed(bool);
    impl Decisions for Fixed {
        fn crisis(&self, text: &str, lang: Language) -> Option<MatchInfo> {
            SafetyGuard::builtin().detect_crisis(text, lang)
        }
        fn ready_for_screening(&self, _: &SessionState, _: &str) -> bool {
            self.0
        }
    }

    fn fresh() -> SessionState {
        SessionState::new("t", Language::En, Country::new("UK"))
    }

    fn step(s: &SessionState, input: &str, ready: bool) -> Step {
        advance(s, input, &Fixed(ready), Instrument::builtin()).unwrap()
    }

    #[test]
    fn nineteenth_turn_then_forced_transition() {
        let mut s = fresh();
        s.rapport_turns = 19;
        let out = step(&s, "tell me about sleep", false);
        assert_eq!(out.state.phase, Phase::screening(1));
        assert_eq!(out.plan, ReplyPlan::IntroduceScreening { item: 1 });
        assert_eq!(
            out.events,
            vec![EngineEvent::PhaseTransition { from: Phase::Rapport, to: Phase::screening(1) }]
        );
    }

    #[test]
    fn answer_advances_item() {
        let mut s = fresh();
        s.phase = Phase::screening(5);
        for i in 1..5 {
            s.partial_scores.insert(i, ItemScore::new(0).unwrap());
        }
        let out = step(&s, "D", false);
        assert_eq!(out.state.partial_scores[&5], ItemScore::new(3).unwrap());
        assert_eq!(out.plan, ReplyPlan::AskItem { item: 6 });
    }

    #[test]
    fn ambiguous_answer_never_scores() {
        let mut s = fresh();
        s.phase = Phase::screening(2);
        s.partial_scores.insert(1, ItemScore::new(1).unwrap());
        let out = step(&s, "maybe sometimes?", false);
        assert_eq!(out.events, vec![EngineEvent::ClarificationIssued { item: 2, attempt: 1 }]);
        assert_eq!(out.state.partial_scores.len(), 1);
        assert_eq!(out.state.phase, Phase::Screening { current_item: 2, clarification_attempts: 1 });
        let out = step(&out.state, "hmm", false);
        let out = step(&out.state, "dunno", false);
        assert_eq!(out.plan, ReplyPlan::Clarify { item: 2, attempt: 3, soft: false });
        let out = step(&out.state, "b", false);
        assert_eq!(out.plan, ReplyPlan::AskItem { item: 3 });
        assert_eq!(out.state.phase, Phase::screening(3));
    }

    #[test]
    fn crisis_hold_resume_and_end() {
        let mut s = fresh();
        s.phase = Phase::screening(3);
        let held = step(&s, "I want to end my life", false);
        assert!(matches!(held.plan, ReplyPlan::Crisis { .. }));
        assert_eq!(held.state.phase.tag(), super::super::PhaseTag::CrisisHold);
        let again = step(&held.state, "I don't know", false);
        assert_eq!(again.plan, ReplyPlan::CrisisReminder);
        assert_eq!(again.state.phase, held.state.phase);
        let resumed = step(&again.state, "Continue.", false);
        assert_eq!(resumed.state.phase, Phase::screening(3));
        let ended = step(&held.state, "end", false);
        assert!(ended.state.closed);
        assert_eq!(ended.plan, ReplyPlan::Goodbye);
        assert_eq!(
            advance(&ended.state, "hi", &Fixed(false), Instrument::builtin()),
            Err(EngineError::Closed("t".into()))
        );
    }

    #[test]
    fn feedback_has_no_limit() {
        let mut s = fresh();
        s.phase = Phase::Feedback;
        for _ in 0..50 {
            let out = step(&s, "thanks, what else can I do?", false);
            assert_eq!(out.plan, ReplyPlan::Converse);
            s = out.state;
        }
    }
}
