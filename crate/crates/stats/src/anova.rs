use serde::{Deserialize, Serialize};

use crate::dist::f_sf;
use crate::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    #[serde(rename = "F", with = "crate::extended_f64")]
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p: f64,
}

/// One-way ANOVA. Zero within-group variance with distinct means gives
/// F = ∞ and p = 0.
pub fn oneway_anova(groups: &[Vec<f64>]) -> Outcome<Anova> {
    let groups: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if k < 2 {
        return Outcome::na("fewer than two non-empty groups");
    }
    if n <= k {
        return Outcome::na("no within-group degrees of freedom");
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in &groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let df_between = (k - 1) as f64;
    let df_within = (n - k) as f64;
    if ssw == 0.0 {
        if ssb == 0.0 {
            return Outcome::na("zero variance and equal means");
        }
        return Outcome::Computed(Anova { f: f64::INFINITY, df_between, df_within, p: 0.0 });
    }
    let f = (ssb / df_between) / (ssw / df_within);
    Outcome::Computed(Anova { f, df_between, df_within, p: f_sf(f, df_between, df_within) })
}
