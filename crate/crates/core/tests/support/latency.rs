//! Generation latency over 20 generating turns against a mock that waits
//! 100 ms before replying.

#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use screener_core::engine::{Conversation, ConversationDeps, JsonlSessionLog};
use screener_core::gateway::{Gateway, LatencySummary, ScriptedMock};

pub const DELAY_MS: u64 = 100;
pub const TURNS: usize = 20;

pub struct LatencyRun {
    pub samples: Vec<u64>,
    /// Turns answered from templates, which must report gen_ms = 0.
    pub templated: Vec<u64>,
    pub summary: LatencySummary,
}

/// Mean and sample sd as exact rationals, rounded once to f64 (the sd via
/// a single square root of the correctly rounded variance).
pub fn oracle(samples: &[u64]) -> (f64, Option<f64>) {
    let n = samples.len() as i128;
    let s: i128 = samples.iter().map(|&x| x as i128).sum();
    let mean = s as f64 / n as f64;
    if n < 2 {
        return (mean, None);
    }
    // Σ(n·x − S)² / (n²(n − 1)) equals the n − 1 variance exactly.
    let num: i128 = samples.iter().map(|&x| (n * x as i128 - s).pow(2)).sum();
    let den = n * n * (n - 1);
    let g = gcd(num, den);
    (mean, Some(((num / g) as f64 / (den / g) as f64).sqrt()))
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs().max(1)
    } else {
        gcd(b, a % b)
    }
}

pub fn run(dir: &std::path::Path) -> LatencyRun {
    let mock = ScriptedMock::new((0..TURNS).map(|i| format!("reply {i}"))).with_delay(Duration::from_millis(DELAY_MS));
    let gateway = Gateway::new(Arc::new(mock));
    let conv = Conversation::new(ConversationDeps::new(Arc::new(gateway), JsonlSessionLog::open(dir).unwrap()));
    let id = conv.open_session("en", "UK").unwrap().session_id;
    let mut templated = Vec::new();
    for input in ["ready", "a", "b", "c", "d", "a", "b", "c", "d"] {
        templated.push(conv.take_turn(&id, input, &mut |_| {}).unwrap().latency().gen_ms);
    }
    // The final answer's summary turn plus 19 feedback turns all generate.
    let mut inputs = vec!["a".to_string()];
    inputs.extend((1..TURNS).map(|i| format!("feedback question {i}")));
    let mut samples = Vec::new();
    for input in &inputs {
        let l = conv.take_turn(&id, input, &mut |_| {}).unwrap().latency();
        assert!(l.total_ms >= l.gen_ms);
        samples.push(l.gen_ms);
    }
    let summary = LatencySummary::from_samples(&samples).unwrap();
    LatencyRun { samples, templated, summary }
}
