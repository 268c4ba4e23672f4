use serde::{Deserialize, Serialize};

use crate::dist::{chi2_sf, normal_quantile};
use crate::{Outcome, ALPHA};

/// 2×2 counts laid out `[[a, b], [c, d]]`: rows are factor levels (true
/// first), columns endpoint values (true first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table2x2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Table2x2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Table2x2 { a, b, c, d }
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    fn has_empty_margin(&self) -> bool {
        self.a + self.b == 0 || self.c + self.d == 0 || self.a + self.c == 0 || self.b + self.d == 0
    }

    /// Expected counts under independence, `[[a, b], [c, d]]` order.
    pub fn expected(&self) -> [f64; 4] {
        let n = self.total() as f64;
        let (r1, r2) = ((self.a + self.b) as f64, (self.c + self.d) as f64);
        let (c1, c2) = ((self.a + self.c) as f64, (self.b + self.d) as f64);
        [r1 * c1 / n, r1 * c2 / n, r2 * c1 / n, r2 * c2 / n]
    }

    fn cells(&self) -> [f64; 4] {
        [self.a as f64, self.b as f64, self.c as f64, self.d as f64]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub chi2: f64,
    pub p: f64,
}

/// Pearson chi-square with Yates' continuity correction, 1 df.
pub fn chi2_yates(t: &Table2x2) -> Outcome<ChiSquare> {
    if t.has_empty_margin() {
        return Outcome::na("a row or column total is zero");
    }
    let chi2: f64 = t
        .cells()
        .iter()
        .zip(t.expected())
        .map(|(o, e)| {
            let dev = ((o - e).abs() - 0.5).max(0.0);
            dev * dev / e
        })
        .sum();
    Outcome::Computed(ChiSquare { chi2, p: chi2_sf(chi2, 1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub odds_ratio: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub p: f64,
    /// 0.5 was added to every cell for the odds ratio and its interval.
    pub haldane: bool,
}

/// Tables whose probability is within this relative distance of the
/// observed one count as "as extreme".
const FISHER_REL_TOL: f64 = 1e-7;

/// Two-sided Fisher exact test: total probability of the tables with the
/// observed margins that are no more likely than the observed table.
pub fn fisher_exact(t: &Table2x2) -> Outcome<FisherResult> {
    if t.has_empty_margin() {
        return Outcome::na("a row or column total is zero");
    }
    let (r1, r2, c1) = (t.a + t.b, t.c + t.d, t.a + t.c);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    // log-weights by the ratio recurrence, relative to the lowest table
    let mut logw = Vec::with_capacity((hi - lo + 1) as usize);
    logw.push(0.0f64);
    for x in lo..hi {
        let num = ((r1 - x) * (c1 - x)) as f64;
        let den = ((x + 1) * (r2 + x + 1 - c1)) as f64;
        logw.push(logw.last().unwrap() + (num / den).ln());
    }
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let obs = w[(t.a - lo) as usize];
    let total: f64 = w.iter().sum();
    let extreme: f64 = w.iter().filter(|&&x| x <= obs * (1.0 + FISHER_REL_TOL)).sum();
    let p = (extreme / total).min(1.0);

    let haldane = [t.a, t.b, t.c, t.d].contains(&0);
    let k = if haldane { 0.5 } else { 0.0 };
    let [a, b, c, d] = t.cells().map(|x| x + k);
    let or = a * d / (b * c);
    let se = (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d).sqrt();
    let z = normal_quantile(1.0 - ALPHA / 2.0);
    Outcome::Computed(FisherResult {
        odds_ratio: or,
        ci95_low: (or.ln() - z * se).exp(),
        ci95_high: (or.ln() + z * se).exp(),
        p,
        haldane,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContingencyMethod {
    Chi2Yates,
    Fisher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyResult {
    pub table: Table2x2,
    pub method: ContingencyMethod,
    /// Chi-square for the Yates test; absent for Fisher.
    pub statistic: Option<f64>,
    pub odds_ratio: f64,
    pub ci95: [f64; 2],
    pub p: f64,
    pub p_adjusted: Option<f64>,
}

/// Yates chi-square when every expected count is at least 5, otherwise
/// Fisher. The odds ratio and interval always come from the Woolf method.
pub fn contingency_test(t: &Table2x2) -> Outcome<ContingencyResult> {
    let Outcome::Computed(fisher) = fisher_exact(t) else {
        return Outcome::na("a row or column total is zero");
    };
    let small = t.expected().iter().any(|e| *e < 5.0);
    let (method, statistic, p) = if small {
        (ContingencyMethod::Fisher, None, fisher.p)
    } else {
        let chi = chi2_yates(t).unwrap();
        (ContingencyMethod::Chi2Yates, Some(chi.chi2), chi.p)
    };
    Outcome::Computed(ContingencyResult {
        table: *t,
        method,
        statistic,
        odds_ratio: fisher.odds_ratio,
        ci95: [fisher.ci95_low, fisher.ci95_high],
        p,
        p_adjusted: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_table() {
        let f = fisher_exact(&Table2x2::new(5, 5, 5, 5)).unwrap();
        assert_eq!(f.odds_ratio, 1.0);
        assert!((f.p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_association() {
        let f = fisher_exact(&Table2x2::new(10, 0, 0, 10)).unwrap();
        // 2 / C(20, 10)
        assert!((f.p - 2.0 / 184_756.0).abs() < 1e-15);
        assert!(f.haldane);
        assert!(f.ci95_low <= f.odds_ratio && f.odds_ratio <= f.ci95_high);
    }

    #[test]
    fn empty_margin() {
        assert!(!fisher_exact(&Table2x2::new(0, 0, 3, 4)).is_applicable());
        assert!(!chi2_yates(&Table2x2::new(0, 5, 0, 4)).is_applicable());
    }

    #[test]
    fn method_selection() {
        let big = contingency_test(&Table2x2::new(20, 15, 12, 25)).unwrap();
        assert_eq!(big.method, ContingencyMethod::Chi2Yates);
        let small = contingency_test(&Table2x2::new(3, 15, 12, 25)).unwrap();
        assert_eq!(small.method, ContingencyMethod::Fisher);
    }

    #[test]
    fn yates_never_overshoots() {
        // |O - E| = 0.25 everywhere; the corrected deviation is clipped to 0.
        let c = chi2_yates(&Table2x2::new(5, 5, 5, 6)).unwrap();
        assert_eq!(c.chi2, 0.0);
        assert_eq!(c.p, 1.0);
    }
}
