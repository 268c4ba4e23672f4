mod support;

use std::sync::Arc;
use std::time::Duration;

use screener_core::clock::ManualClock;
use screener_core::engine::{Conversation, ConversationDeps, ConversationError, EngineEvent, JsonlSessionLog};
use screener_core::gateway::{
    AudioBlob, EchoSpeech, Gateway, ScriptEntry, ScriptedMock, SpeechSynth, TtsError,
};
use screener_core::protocol::build_summary;
use screener_core::Language;
use support::latency;

fn deps(dir: &std::path::Path, gateway: Gateway) -> ConversationDeps {
    ConversationDeps::new(Arc::new(gateway), JsonlSessionLog::open(dir).unwrap())
}

fn replies(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("reply {i}")).collect()
}

#[test]
fn concurrent_turn_on_same_session_is_busy() {
    let dir = tempfile::tempdir().unwrap();
    let mock = ScriptedMock::new(replies(4)).with_delay(Duration::from_millis(300));
    let conv = Arc::new(Conversation::new(deps(dir.path(), Gateway::new(Arc::new(mock)))));
    let id = conv.open_session("en", "UK").unwrap().session_id;
    let other = conv.open_session("en", "UK").unwrap().session_id;

    let (c, i) = (conv.clone(), id.clone());
    let slow = std::thread::spawn(move || c.take_turn(&i, "hello", &mut |_| {}));
    std::thread::sleep(Duration::from_millis(100));
    assert!(conv.has_turn_in_flight());
    assert!(matches!(conv.take_turn(&id, "again", &mut |_| {}), Err(ConversationError::Busy(_))));
    // Other sessions are unaffected.
    conv.take_turn(&other, "hi there", &mut |_| {}).unwrap();
    slow.join().unwrap().unwrap();
    conv.take_turn(&id, "and now", &mut |_| {}).unwrap();
    assert_eq!(conv.state(&id).unwrap().rapport_turns, 2);
}

#[test]
fn generation_latency_over_twenty_turns() {
    let dir = tempfile::tempdir().unwrap();
    let run = latency::run(dir.path());
    assert!(run.templated.iter().all(|g| *g == 0), "templated turns do not generate");
    assert_eq!(run.samples.len(), latency::TURNS);
    for (i, g) in run.samples.iter().enumerate() {
        assert!((100..=150).contains(g), "turn {i}: {g}");
    }
    let (mean, sd) = latency::oracle(&run.samples);
    assert_eq!(run.summary.mean_ms, mean);
    assert_eq!(run.summary.sd_ms, sd);
}

struct Broken;
impl SpeechSynth for Broken {
    fn synthesize(&self, _: &str, _: Language) -> Result<Option<AudioBlob>, TtsError> {
        Err(TtsError::Provider("injected".into()))
    }
}

#[test]
fn speech_failure_never_changes_the_text() {
    let run = |speech: Arc<dyn SpeechSynth>| {
        let dir = tempfile::tempdir().unwrap();
        let mut d = deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(2)))).with_speech(speech));
        d.clock = Arc::new(ManualClock::default());
        let conv = Conversation::new(d);
        conv.open_session_with_id("s", "en", "UK").unwrap();
        conv.take_turn("s", "hello", &mut |_| {}).unwrap()
    };
    let ok = run(Arc::new(EchoSpeech { delay: Duration::from_millis(2) }));
    let broken = run(Arc::new(Broken));
    assert!(ok.audio.is_some() && !ok.speech_degraded);
    assert!(broken.audio.is_none() && broken.speech_degraded);
    assert_eq!(ok.bot.text, broken.bot.text);
}

#[test]
fn failed_generation_leaves_session_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let mock = ScriptedMock::from_entries([
        ScriptEntry::Fail { fail: "timeout".into() },
        ScriptEntry::Reply("back again".into()),
    ]);
    let conv = Conversation::new(deps(dir.path(), Gateway::new(Arc::new(mock))));
    let id = conv.open_session("en", "UK").unwrap().session_id;
    let before = conv.state(&id).unwrap();
    let log_before = std::fs::read(conv.log().path(&id).unwrap()).unwrap();
    assert!(matches!(conv.take_turn(&id, "hello", &mut |_| {}), Err(ConversationError::Generation(_))));
    assert_eq!(conv.state(&id).unwrap(), before);
    assert_eq!(std::fs::read(conv.log().path(&id).unwrap()).unwrap(), log_before);
    let out = conv.take_turn(&id, "hello", &mut |_| {}).unwrap();
    assert_eq!(out.bot.text, "back again");
}

#[test]
fn crisis_needs_no_backend() {
    let dir = tempfile::tempdir().unwrap();
    let conv = Conversation::new(deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(0))))));
    let id = conv.open_session("zh", "CN").unwrap().session_id;
    let out = conv.take_turn(&id, "我有时候想死", &mut |_| {}).unwrap();
    assert!(out.events().iter().any(|e| matches!(e, EngineEvent::CrisisTriggered { .. })));
    let helplines = out.helplines.unwrap();
    assert!(!helplines.is_empty());
    assert!(helplines.iter().all(|h| out.bot.text.contains(&h.contact)));
    let end = conv.take_turn(&id, "结束", &mut |_| {}).unwrap();
    assert!(end.closed);
    assert!(matches!(conv.take_turn(&id, "你好", &mut |_| {}), Err(ConversationError::Closed(_))));
}

#[test]
fn summary_requires_completion_and_matches_builder() {
    let dir = tempfile::tempdir().unwrap();
    let conv = Conversation::new(deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(2))))));
    let id = conv.open_session("en", "UK").unwrap().session_id;
    assert!(matches!(conv.summary(&id), Err(ConversationError::Incomplete { remaining: 9 })));
    for input in ["ready", "a", "b", "c"] {
        conv.take_turn(&id, input, &mut |_| {}).unwrap();
    }
    assert!(matches!(conv.summary(&id), Err(ConversationError::Incomplete { remaining: 6 })));
    for input in ["d", "0", "1", "2", "3", "1"] {
        conv.take_turn(&id, input, &mut |_| {}).unwrap();
    }
    let doc = conv.summary(&id).unwrap();
    let state = conv.state(&id).unwrap();
    let helplines = conv.safety().helplines_for(&state.country, state.lang);
    assert_eq!(doc, build_summary(state.result.as_ref().unwrap(), "en", &helplines).unwrap());
    assert_eq!(doc.total, 13);
    assert!(doc.helplines.is_some());
}

#[test]
fn idle_sessions_close() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::default());
    let mut d = deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(1)))));
    d.clock = clock;
    let conv = Conversation::new(d);
    conv.open_session_with_id("idle", "en", "UK").unwrap();
    let opened = conv.state("idle").unwrap().transcript[0].timestamp;
    let day = chrono::Duration::hours(24);
    assert!(conv.close_idle(opened + day, day).is_empty());
    assert_eq!(conv.close_idle(opened + day + chrono::Duration::seconds(1), day), vec!["idle".to_string()]);
    assert!(matches!(conv.take_turn("idle", "hi", &mut |_| {}), Err(ConversationError::Closed(_))));
    // Closure survives a restart.
    let again = Conversation::new(deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(0))))));
    assert!(again.state("idle").unwrap().closed);
}

#[test]
fn unsupported_language_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let conv = Conversation::new(deps(dir.path(), Gateway::new(Arc::new(ScriptedMock::new(replies(0))))));
    assert!(matches!(conv.open_session("fr", "FR"), Err(ConversationError::UnsupportedLanguage(_))));
}

#[test]
fn latency_oracle_small_cases() {
    assert_eq!(latency::oracle(&[100, 102, 104]), (102.0, Some(2.0)));
    assert_eq!(latency::oracle(&[7]), (7.0, None));
}
