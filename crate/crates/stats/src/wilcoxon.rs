use serde::{Deserialize, Serialize};

use crate::dist::normal_two_sided;
use crate::rank::{average_ranks, tie_sizes};
use crate::Outcome;

/// Largest non-zero-difference count for which the exact distribution is used.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wilcoxon {
    /// min(W+, W−).
    #[serde(rename = "W")]
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Differences left after dropping zeros.
    pub n_used: usize,
    pub p: f64,
    pub method: WilcoxonMethod,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<f64>,
}

/// Two-sided signed-rank test on paired differences. Zero differences are
/// dropped and tied magnitudes get average ranks.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Outcome<Wilcoxon> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Outcome::na("all differences are zero");
    }
    let mags: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&mags);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p, method, z) = if n <= EXACT_WILCOXON_MAX_N {
        (exact_p(&ranks, w_plus), WilcoxonMethod::Exact, None)
    } else {
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_sizes(&mags).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let dev = ((w_plus - mu).abs() - 0.5).max(0.0);
        let z = dev / var.sqrt();
        (normal_two_sided(z), WilcoxonMethod::Normal, Some(z))
    };
    Outcome::Computed(Wilcoxon { w: w_plus.min(w_minus), w_plus, w_minus, n_used: n, p, method, z })
}

/// Exact null distribution of W+ over all 2^n sign assignments, built by
/// dynamic programming on doubled ranks (always integers).
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let obs = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: u64 = counts[..=obs].iter().sum();
    let upper: u64 = counts[obs..].iter().sum();
    (2.0 * lower.min(upper) as f64 / all).min(1.0)
}
