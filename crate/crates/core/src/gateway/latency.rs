use serde::{Deserialize, Serialize};

/// Per-turn timing in whole milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnLatency {
    /// Request to final generated chunk.
    pub gen_ms: u64,
    /// Speech synthesis; 0 with the null provider.
    pub tts_ms: u64,
    /// Whole turn, input received to reply ready.
    pub total_ms: u64,
}

/// Mean and sample standard deviation (n - 1) of a batch of durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub n: usize,
    pub mean_ms: f64,
    /// `None` for fewer than two samples.
    pub sd_ms: Option<f64>,
}

impl LatencySummary {
    /// Computed from exact integer power sums, so the only rounding is the
    /// final division and square root.
    pub fn from_samples(samples: &[u64]) -> Option<LatencySummary> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as u128;
        let sum: u128 = samples.iter().map(|&x| u128::from(x)).sum();
        let sum_sq: u128 = samples.iter().map(|&x| u128::from(x) * u128::from(x)).sum();
        let mean_ms = sum as f64 / n as f64;
        let sd_ms = (n >= 2).then(|| {
            let numerator = n * sum_sq - sum * sum;
            (numerator as f64 / (n * (n - 1)) as f64).sqrt()
        });
        Some(LatencySummary { n: samples.len(), mean_ms, sd_ms })
    }

    pub fn of_generation(latencies: &[TurnLatency]) -> Option<LatencySummary> {
        Self::from_samples(&latencies.iter().map(|l| l.gen_ms).collect::<Vec<_>>())
    }
}
