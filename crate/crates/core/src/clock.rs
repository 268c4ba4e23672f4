//! Wall and monotonic time, injectable so transcripts can be reproduced.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
    /// Milliseconds on a monotonic timeline with an arbitrary origin.
    fn monotonic_ms(&self) -> f64;
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn monotonic_ms(&self) -> f64 {
        self.origin.elapsed().as_secs_f64() * 1000.0
    }
}

/// Deterministic clock: every `now()` read advances one second from a fixed
/// start, every `monotonic_ms()` read advances `step_ms`.
#[derive(Debug)]
pub struct ManualClock {
    start: DateTime<Utc>,
    wall_reads: AtomicU64,
    mono_reads: AtomicU64,
    step_ms: u64,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>, step_ms: u64) -> Self {
        ManualClock { start, wall_reads: AtomicU64::new(0), mono_reads: AtomicU64::new(0), step_ms }
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        ManualClock::new(Utc.with_ymd_and_hms(2025, 1, 1, 9, 0, 0).unwrap(), 0)
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        let n = self.wall_reads.fetch_add(1, Ordering::SeqCst);
        self.start + chrono::Duration::seconds(n as i64)
    }

    fn monotonic_ms(&self) -> f64 {
        let n = self.mono_reads.fetch_add(1, Ordering::SeqCst);
        (n * self.step_ms) as f64
    }
}
