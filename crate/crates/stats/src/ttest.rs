use serde::{Deserialize, Serialize};

use crate::descriptive::mean;
use crate::dist::t_two_sided;
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_diff: f64,
}

/// Paired t on differences, n − 1 degrees of freedom.
pub fn paired_t(diffs: &[f64]) -> Outcome<TTest> {
    let n = diffs.len();
    if n < 2 {
        return Outcome::na("fewer than two pairs");
    }
    let m = mean(diffs);
    let ss: f64 = diffs.iter().map(|d| (d - m) * (d - m)).sum();
    if ss == 0.0 {
        return Outcome::na("differences have zero variance");
    }
    let se = (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt();
    let t = m / se;
    let df = (n - 1) as f64;
    Outcome::Computed(TTest { t, df, p: t_two_sided(t, df), mean_diff: m })
}

/// Student's independent-samples t with pooled variance; `mean_diff` is
/// mean(a) − mean(b).
pub fn two_group_t(a: &[f64], b: &[f64]) -> Outcome<TTest> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return Outcome::na("too few observations");
    }
    let (m1, m2) = (mean(a), mean(b));
    let ss = a.iter().map(|x| (x - m1) * (x - m1)).sum::<f64>() + b.iter().map(|x| (x - m2) * (x - m2)).sum::<f64>();
    if ss == 0.0 {
        return Outcome::na("zero pooled variance");
    }
    let df = (n1 + n2 - 2) as f64;
    let pooled = ss / df;
    let se = (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let t = (m1 - m2) / se;
    Outcome::Computed(TTest { t, df, p: t_two_sided(t, df), mean_diff: m1 - m2 })
}
