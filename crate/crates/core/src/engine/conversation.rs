use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use thiserror::Error;

use super::log::{resume, JsonlSessionLog, LogError};
use super::machine::{advance, EngineError, ReplyPlan};
use super::policy::{LiveDecisions, TokenPolicy, TransitionPolicy};
use super::state::{CloseReason, EngineEvent, Phase, PhaseTag, Role, SessionState, TurnRecord};
use crate::clock::{Clock, SystemClock};
use crate::gateway::{
    assemble_prompt, AudioBlob, CancelToken, Gateway, GatewayError, TurnLatency, DEFAULT_TRANSCRIPT_WINDOW,
};
use crate::lang::{Country, Language};
use crate::messages::{LocaleMessages, Messages};
use crate::protocol::{Instrument, ProtocolError, SummaryBuilder, SummaryDocument};
use crate::retrieval::{HashEmbedder, StoreSet, DEFAULT_K_PER_STORE};
use crate::safety::{HelplineEntry, SafetyGuard};

#[derive(Debug, Error)]
pub enum ConversationError {
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("session {0} is closed")]
    Closed(String),
    #[error("session {0} already has a turn in flight")]
    Busy(String),
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("screening incomplete: {remaining} item(s) remaining")]
    Incomplete { remaining: usize },
    #[error(transparent)]
    Generation(#[from] GatewayError),
    #[error(transparent)]
    Log(LogError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(EngineError),
}

impl From<LogError> for ConversationError {
    fn from(e: LogError) -> Self {
        match e {
            LogError::NotFound(id) | LogError::InvalidId(id) => ConversationError::NotFound(id),
            other => ConversationError::Log(other),
        }
    }
}

impl From<EngineError> for ConversationError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Closed(id) => ConversationError::Closed(id),
            EngineError::Busy(id) => ConversationError::Busy(id),
            other => ConversationError::Engine(other),
        }
    }
}

/// Everything a conversation needs. Fields default to the built-in data,
/// empty stores, the token transition policy and the system clock.
pub struct ConversationDeps {
    pub instrument: Instrument,
    pub messages: Messages,
    pub safety: SafetyGuard,
    pub stores: Arc<StoreSet>,
    pub gateway: Arc<Gateway>,
    pub policy: Arc<dyn TransitionPolicy>,
    pub clock: Arc<dyn Clock>,
    pub log: JsonlSessionLog,
    pub window: usize,
    pub k_per_store: usize,
}

impl ConversationDeps {
    pub fn new(gateway: Arc<Gateway>, log: JsonlSessionLog) -> Self {
        ConversationDeps {
            instrument: Instrument::builtin().clone(),
            messages: Messages::builtin().clone(),
            safety: SafetyGuard::builtin().clone(),
            stores: Arc::new(StoreSet::new(Arc::new(HashEmbedder::default()))),
            gateway,
            policy: Arc::new(TokenPolicy::default()),
            clock: Arc::new(SystemClock::default()),
            log,
            window: DEFAULT_TRANSCRIPT_WINDOW,
            k_per_store: DEFAULT_K_PER_STORE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenedSession {
    pub session_id: String,
    pub greeting: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome {
    pub user: TurnRecord,
    pub bot: TurnRecord,
    /// Set on crisis turns.
    pub helplines: Option<Vec<HelplineEntry>>,
    pub audio: Option<AudioBlob>,
    pub speech_degraded: bool,
    pub phase: Phase,
    pub closed: bool,
}

impl TurnOutcome {
    pub fn events(&self) -> &[EngineEvent] {
        &self.user.events
    }

    pub fn latency(&self) -> TurnLatency {
        self.bot.latency.unwrap_or_default()
    }
}

struct Slot {
    state: Mutex<SessionState>,
    busy: AtomicBool,
}

struct BusyGuard<'a>(&'a AtomicBool);

impl Drop for BusyGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl Slot {
    fn try_claim(&self) -> Option<BusyGuard<'_>> {
        self.busy
            .compare_exchange(false, true, Ordering::Acquire, Ordering::Relaxed)
            .ok()
            .map(|_| BusyGuard(&self.busy))
    }

    fn snapshot(&self) -> SessionState {
        self.state.lock().unwrap().clone()
    }
}

enum Part {
    Fixed(String),
    Generated(String),
}

/// Drives sessions: one turn at a time per session, persisted before it is
/// acknowledged. Distinct sessions run independently.
pub struct Conversation {
    instrument: Instrument,
    messages: Messages,
    safety: RwLock<Arc<SafetyGuard>>,
    stores: Arc<StoreSet>,
    gateway: Arc<Gateway>,
    policy: Arc<dyn TransitionPolicy>,
    clock: Arc<dyn Clock>,
    log: JsonlSessionLog,
    window: usize,
    k_per_store: usize,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl Conversation {
    pub fn new(deps: ConversationDeps) -> Self {
        Conversation {
            instrument: deps.instrument,
            messages: deps.messages,
            safety: RwLock::new(Arc::new(deps.safety)),
            stores: deps.stores,
            gateway: deps.gateway,
            policy: deps.policy,
            clock: deps.clock,
            log: deps.log,
            window: deps.window,
            k_per_store: deps.k_per_store,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    pub fn instrument(&self) -> &Instrument {
        &self.instrument
    }

    pub fn messages(&self) -> &Messages {
        &self.messages
    }

    pub fn log(&self) -> &JsonlSessionLog {
        &self.log
    }

    pub fn safety(&self) -> Arc<SafetyGuard> {
        self.safety.read().unwrap().clone()
    }

    /// Swaps the lexicon and helplines; turns already running keep the old set.
    pub fn reload_safety(&self, guard: SafetyGuard) {
        *self.safety.write().unwrap() = Arc::new(guard);
    }

    pub fn open_session(&self, lang: &str, country: &str) -> Result<OpenedSession, ConversationError> {
        self.open_session_with_id(&uuid::Uuid::new_v4().simple().to_string(), lang, country)
    }

    pub fn open_session_with_id(
        &self,
        id: &str,
        lang: &str,
        country: &str,
    ) -> Result<OpenedSession, ConversationError> {
        let lang: Language = lang.parse().map_err(|_| ConversationError::UnsupportedLanguage(lang.to_string()))?;
        let state = SessionState::new(id, lang, Country::new(country));
        let first = TurnRecord {
            turn_index: 0,
            role: Role::System,
            text: "session opened".into(),
            phase_at_turn: PhaseTag::Rapport,
            timestamp: self.clock.now(),
            latency: None,
            events: Vec::new(),
            meta: Some(state.meta()),
        };
        self.log.create(id, &first)?;
        let mut state = state;
        state.transcript.push(first);
        let slot = Arc::new(Slot { state: Mutex::new(state), busy: AtomicBool::new(false) });
        self.sessions.write().unwrap().insert(id.to_string(), slot);
        Ok(OpenedSession { session_id: id.to_string(), greeting: self.messages.get(lang).greeting.clone() })
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ConversationError> {
        if let Some(slot) = self.sessions.read().unwrap().get(id) {
            return Ok(slot.clone());
        }
        let mut sessions = self.sessions.write().unwrap();
        if let Some(slot) = sessions.get(id) {
            return Ok(slot.clone());
        }
        let state = resume(&self.log, id, &self.instrument)?;
        let slot = Arc::new(Slot { state: Mutex::new(state), busy: AtomicBool::new(false) });
        sessions.insert(id.to_string(), slot.clone());
        Ok(slot)
    }

    /// Current state, loading it from the log if it is not in memory.
    pub fn state(&self, id: &str) -> Result<SessionState, ConversationError> {
        Ok(self.slot(id)?.snapshot())
    }

    pub fn summary(&self, id: &str) -> Result<SummaryDocument, ConversationError> {
        let state = self.state(id)?;
        let Some(result) = &state.result else {
            return Err(ConversationError::Incomplete { remaining: state.remaining_items() });
        };
        let helplines = self.safety().helplines_for(&state.country, state.lang);
        let builder = SummaryBuilder { instrument: &self.instrument, messages: &self.messages };
        Ok(builder.build(result, state.lang, &helplines)?)
    }

    pub fn take_turn(
        &self,
        id: &str,
        text: &str,
        on_token: &mut dyn FnMut(&str),
    ) -> Result<TurnOutcome, ConversationError> {
        self.take_turn_cancellable(id, text, on_token, &CancelToken::default())
    }

    /// Runs one user turn. Reply text streams to `on_token`; both turn
    /// records are on disk before this returns. On error the session is
    /// unchanged.
    pub fn take_turn_cancellable(
        &self,
        id: &str,
        text: &str,
        on_token: &mut dyn FnMut(&str),
        cancel: &CancelToken,
    ) -> Result<TurnOutcome, ConversationError> {
        let slot = self.slot(id)?;
        let _claim = slot.try_claim().ok_or_else(|| ConversationError::Busy(id.to_string()))?;
        let before = slot.snapshot();
        let started = self.clock.monotonic_ms();
        let guard = self.safety();
        let decisions = LiveDecisions { guard: &guard, policy: self.policy.as_ref() };
        let step = advance(&before, text, &decisions, &self.instrument)?;
        let lang = before.lang;
        let m = self.messages.get(lang);

        let helplines = matches!(step.plan, ReplyPlan::Crisis { .. } | ReplyPlan::CrisisReminder)
            .then(|| guard.helplines_for(&before.country, lang));
        let parts = self.reply_parts(&step.plan, &step.state, m, helplines.as_deref())?;

        let mut reply = String::new();
        let mut gen_ms = 0;
        for part in parts {
            let sep = if reply.is_empty() { "" } else { "\n\n" };
            match part {
                Part::Fixed(t) => {
                    let chunk = format!("{sep}{t}");
                    on_token(&chunk);
                    reply.push_str(&chunk);
                }
                Part::Generated(instruction) => {
                    let bundle = self.stores.query_stores(text, self.k_per_store);
                    let prompt = assemble_prompt(&step.state, &bundle, text, &instruction, self.window);
                    let mut first = true;
                    let generated = self.gateway.generate(
                        &prompt,
                        &mut |c| {
                            if first && !sep.is_empty() {
                                on_token(sep);
                            }
                            first = false;
                            on_token(c);
                        },
                        cancel,
                    )?;
                    gen_ms += generated.latency.gen_ms;
                    if !generated.text.is_empty() {
                        reply.push_str(sep);
                        reply.push_str(&generated.text);
                    }
                }
            }
        }

        let speech = self.gateway.synthesize_speech(&reply, lang);
        let total_ms = (self.clock.monotonic_ms() - started).max(0.0).round() as u64;
        let latency = TurnLatency { gen_ms, tts_ms: speech.tts_ms, total_ms: total_ms.max(gen_ms + speech.tts_ms) };

        let index = before.next_turn_index();
        let user = TurnRecord {
            turn_index: index,
            role: Role::User,
            text: text.to_string(),
            phase_at_turn: before.phase.tag(),
            timestamp: self.clock.now(),
            latency: None,
            events: step.events,
            meta: None,
        };
        let bot = TurnRecord {
            turn_index: index + 1,
            role: Role::Bot,
            text: reply,
            phase_at_turn: step.state.phase.tag(),
            timestamp: self.clock.now(),
            latency: Some(latency),
            events: Vec::new(),
            meta: None,
        };
        self.log.append(id, &[user.clone(), bot.clone()])?;

        let mut next = step.state;
        next.transcript.push(user.clone());
        next.transcript.push(bot.clone());
        let outcome = TurnOutcome {
            user,
            bot,
            helplines,
            audio: speech.audio,
            speech_degraded: speech.degraded,
            phase: next.phase.clone(),
            closed: next.closed,
        };
        *slot.state.lock().unwrap() = next;
        Ok(outcome)
    }

    fn reply_parts(
        &self,
        plan: &ReplyPlan,
        state: &SessionState,
        m: &LocaleMessages,
        helplines: Option<&[HelplineEntry]>,
    ) -> Result<Vec<Part>, ConversationError> {
        let lang = state.lang;
        Ok(match plan {
            ReplyPlan::Converse if state.phase == Phase::Feedback => vec![Part::Generated(
                "The questionnaire is finished. Talk through the results and how the user feels, \
                 and point to relevant support. Do not re-score anything."
                    .into(),
            )],
            ReplyPlan::Converse => vec![Part::Generated(
                "Continue the open, supportive conversation. Listen and reflect; do not diagnose \
                 and do not start the questionnaire yet."
                    .into(),
            )],
            ReplyPlan::IntroduceScreening { item } => {
                vec![Part::Fixed(format!("{}\n\n{}", m.screening_intro, self.item_block(*item, lang, m)))]
            }
            ReplyPlan::AskItem { item } => vec![Part::Fixed(self.item_block(*item, lang, m))],
            ReplyPlan::Clarify { item, soft: true, .. } => vec![
                Part::Generated(format!(
                    "The user's reply to question {item} could not be matched to one of the four options. \
                     Explain the question in plain words with a short everyday example. Do not suggest \
                     which option they should choose."
                )),
                Part::Fixed(format!("{}\n{}", m.clarify_soft, self.options_block(*item, lang, m))),
            ],
            ReplyPlan::Clarify { item, soft: false, .. } => {
                vec![Part::Fixed(format!("{}\n{}", m.clarify_hard, self.options_block(*item, lang, m)))]
            }
            ReplyPlan::Summary { result } => {
                let helplines = self.safety().helplines_for(&state.country, lang);
                let builder = SummaryBuilder { instrument: &self.instrument, messages: &self.messages };
                let doc = builder.build(result, lang, &helplines)?;
                vec![
                    Part::Fixed(doc.render_text(&self.messages)),
                    Part::Generated(
                        "The questionnaire is complete and its summary is shown above. Offer brief, warm \
                         feedback and remind the user that this is a screening, not a diagnosis."
                            .into(),
                    ),
                ]
            }
            ReplyPlan::Crisis { .. } | ReplyPlan::CrisisReminder => {
                let mut text = format!("{}\n", m.crisis_message);
                for h in helplines.unwrap_or_default() {
                    text.push_str(&format!("- {}: {}\n", h.name, h.contact));
                }
                text.push('\n');
                text.push_str(&m.crisis_choice);
                vec![Part::Fixed(text)]
            }
            ReplyPlan::Resume { to: Phase::Screening { current_item, .. } } => vec![Part::Fixed(format!(
                "{}\n\n{}",
                m.resume_message,
                self.item_block(*current_item, lang, m)
            ))],
            ReplyPlan::Resume { .. } => vec![Part::Fixed(m.resume_message.clone())],
            ReplyPlan::Goodbye => vec![Part::Fixed(m.goodbye.clone())],
        })
    }

    fn options_block(&self, item: u8, lang: Language, m: &LocaleMessages) -> String {
        let labels = self.instrument.item(item).map(|i| i.option_labels(lang)).unwrap_or_default();
        let mut out = m.options_header.clone();
        for (i, label) in labels.iter().enumerate() {
            out.push_str(&format!("\n{}. {label}", char::from(b'A' + i as u8)));
        }
        out
    }

    fn item_block(&self, item: u8, lang: Language, m: &LocaleMessages) -> String {
        let prompt = self.instrument.item(item).map(|i| i.prompt(lang)).unwrap_or_default();
        let header = m.item_header.replace("{n}", &item.to_string()).replace("{text}", prompt);
        format!("{header}\n{}", self.options_block(item, lang, m))
    }

    /// Closes open sessions whose last record is older than `max_idle`.
    /// Returns the ids closed.
    pub fn close_idle(&self, now: DateTime<Utc>, max_idle: chrono::Duration) -> Vec<String> {
        let slots: Vec<(String, Arc<Slot>)> =
            self.sessions.read().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut closed = Vec::new();
        for (id, slot) in slots {
            let Some(_claim) = slot.try_claim() else { continue };
            let state = slot.snapshot();
            let last = state.transcript.last().map(|t| t.timestamp);
            if state.closed || last.is_none_or(|t| now - t <= max_idle) {
                continue;
            }
            let record = TurnRecord {
                turn_index: state.next_turn_index(),
                role: Role::System,
                text: "session closed: idle".into(),
                phase_at_turn: state.phase.tag(),
                timestamp: now,
                latency: None,
                events: vec![EngineEvent::SessionClosed { reason: CloseReason::Idle }],
                meta: None,
            };
            if let Err(e) = self.log.append(&id, std::slice::from_ref(&record)) {
                tracing::warn!(session = %id, error = %e, "failed to close idle session");
                continue;
            }
            let mut guard = slot.state.lock().unwrap();
            guard.closed = true;
            guard.transcript.push(record);
            closed.push(id);
        }
        closed.sort();
        closed
    }

    /// True while any session has a turn in flight.
    pub fn has_turn_in_flight(&self) -> bool {
        self.sessions.read().unwrap().values().any(|s| s.busy.load(Ordering::Acquire))
    }
}
