//! Scripted golden session shared by the engine tests and the acceptance
//! suite.

#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use screener_core::clock::ManualClock;
use screener_core::engine::{Conversation, ConversationDeps, JsonlSessionLog, TokenPolicy};
use screener_core::gateway::{Gateway, ScriptedMock};

pub const SESSION: &str = "golden-0001";

pub const BOT_SCRIPT: [&str; 6] = [
    "Hi, it's good to hear from you. How has your week been?",
    "I'm sorry you've been feeling low. What has been weighing on you most?",
    "Work stress can really wear you down. Thank you for telling me.",
    "This question is about feeling down or hopeless, for example feeling flat most of the day.",
    "Thank you for completing the questionnaire. These results are a screening, not a diagnosis.",
    "That sounds like a good plan. Be gentle with yourself this week.",
];

pub const INPUTS: [&str; 16] = [
    "hi",
    "I've been feeling a bit low lately",
    "work has been stressful",
    "ready",
    "B",
    "maybe sometimes?",
    "C",
    "honestly sometimes I want to end my life",
    "continue",
    "A",
    "1",
    "D",
    "not at all",
    "b",
    "0",
    "a",
];

pub fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden_session.jsonl")
}

pub fn run_session(dir: &std::path::Path) -> (Conversation, Vec<String>) {
    let gateway = Gateway::new(Arc::new(ScriptedMock::new(BOT_SCRIPT).with_chunk_chars(7)))
        .with_clock(Arc::new(ManualClock::default()));
    let mut deps = ConversationDeps::new(Arc::new(gateway), JsonlSessionLog::open(dir).unwrap());
    deps.clock = Arc::new(ManualClock::default());
    deps.policy = Arc::new(TokenPolicy::new("ready"));
    let conv = Conversation::new(deps);
    conv.open_session_with_id(SESSION, "en", "UK").unwrap();
    let mut replies = Vec::new();
    for input in INPUTS.iter().copied().chain(["thanks, I'll try to sleep more regularly"]) {
        let mut streamed = String::new();
        let out = conv.take_turn(SESSION, input, &mut |c| streamed.push_str(c)).unwrap();
        assert_eq!(streamed, out.bot.text, "stream must concatenate to the reply");
        replies.push(out.bot.text);
    }
    (conv, replies)
}
