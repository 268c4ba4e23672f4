//! Independent reference computations for the statistics crate. Each check
//! returns the number of cases compared, or a description of the first
//! mismatch.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use screener_stats::{
    fisher_exact, holm_bonferroni, icc31, logistic_trend, oneway_anova, spearman_rho, wilcoxon_signed_rank, Table2x2,
};

pub type Check = Result<usize, String>;

/// Average ranks by counting, O(n²).
pub fn naive_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact signed-rank p by listing every sign assignment.
pub fn enumerated_wilcoxon_p(diffs: &[f64]) -> f64 {
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = naive_ranks(&mags);
    let w_obs: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= w_obs {
            le += 1;
        }
        if w >= w_obs {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

/// Every sign pattern for n = 1..=8, over distinct and tied magnitudes.
pub fn wilcoxon_exhaustive() -> Check {
    let magnitude_sets: [&[f64]; 2] = [&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &[1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 4.0, 5.0]];
    let mut cases = 0;
    for mags in magnitude_sets {
        for n in 1..=8 {
            for signs in 0u32..(1 << n) {
                let diffs: Vec<f64> =
                    (0..n).map(|i| if signs >> i & 1 == 1 { mags[i] } else { -mags[i] }).collect();
                let got = wilcoxon_signed_rank(&diffs).unwrap().p;
                let want = enumerated_wilcoxon_p(&diffs);
                if got != want {
                    return Err(format!("wilcoxon {diffs:?}: got {got}, oracle {want}"));
                }
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Fisher two-sided p from exact integer hypergeometric weights.
pub fn enumerated_fisher_p(t: &Table2x2) -> f64 {
    let (r1, r2, c1) = (t.a + t.b, t.c + t.d, t.a + t.c);
    let weight = |x: u64| binom(r1, x) * binom(r2, c1 - x);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let obs = weight(t.a);
    let total: u128 = (lo..=hi).map(weight).sum();
    let extreme: u128 = (lo..=hi).map(weight).filter(|w| *w <= obs).sum();
    extreme as f64 / total as f64
}

pub fn fisher_random_tables() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xf15e);
    let mut cases = 0;
    while cases < 200 {
        let r1 = rng.random_range(1..=30u64);
        let r2 = rng.random_range(1..=30u64);
        let c1 = rng.random_range(1..=30u64.min(r1 + r2 - 1));
        let lo = c1.saturating_sub(r2);
        let hi = r1.min(c1);
        let a = rng.random_range(lo..=hi);
        let t = Table2x2::new(a, r1 - a, c1 - a, r2 - (c1 - a));
        let got = fisher_exact(&t).unwrap().p;
        let want = enumerated_fisher_p(&t);
        if (got - want).abs() > 1e-10 {
            return Err(format!("fisher {t:?}: got {got}, oracle {want}"));
        }
        cases += 1;
    }
    Ok(cases)
}

/// ICC(3,1) from the definitional two-way sums of squares.
pub fn anova_icc(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let k = 2.0;
    let grand = pairs.iter().map(|(a, b)| a + b).sum::<f64>() / (n * k);
    let ss_total: f64 = pairs.iter().map(|(a, b)| (a - grand).powi(2) + (b - grand).powi(2)).sum();
    let ss_rows: f64 = pairs.iter().map(|(a, b)| k * ((a + b) / k - grand).powi(2)).sum();
    let col_mean = |f: fn(&(f64, f64)) -> f64| pairs.iter().map(f).sum::<f64>() / n;
    let ss_cols = n * ((col_mean(|p| p.0) - grand).powi(2) + (col_mean(|p| p.1) - grand).powi(2));
    let ss_err = ss_total - ss_rows - ss_cols;
    let ms_r = ss_rows / (n - 1.0);
    let ms_e = ss_err / ((n - 1.0) * (k - 1.0));
    (ms_r - ms_e) / (ms_r + (k - 1.0) * ms_e)
}

pub fn icc_random_datasets() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1cc);
    for set in 0..50 {
        let pairs: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                let s: i32 = rng.random_range(0..=27);
                let b = (s + rng.random_range(-4..=4)).clamp(0, 27);
                (f64::from(s), f64::from(b))
            })
            .collect();
        let got = icc31(&pairs).unwrap().value;
        let want = anova_icc(&pairs);
        if (got - want).abs() > 1e-9 {
            return Err(format!("icc dataset {set}: got {got}, oracle {want}"));
        }
    }
    Ok(50)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman_cases() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bea);
    let mut datasets: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![1.0, 2.0, 2.0, 3.0], vec![1.0, 3.0, 2.0, 4.0])];
    for _ in 0..100 {
        let n = rng.random_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..10))).collect();
        let y: Vec<f64> = x.iter().map(|v| v + f64::from(rng.random_range(-5..=5))).collect();
        datasets.push((x, y));
    }
    let mut cases = 0;
    for (x, y) in &datasets {
        let want = pearson(&naive_ranks(x), &naive_ranks(y));
        match spearman_rho(x, y).map_err(|e| e.to_string())?.computed() {
            Some(s) if (s.rho - want).abs() <= 1e-12 => cases += 1,
            Some(s) => return Err(format!("spearman {x:?} {y:?}: got {}, oracle {want}", s.rho)),
            None if want.is_nan() => cases += 1,
            None => return Err(format!("spearman {x:?} {y:?}: not applicable, oracle {want}")),
        }
    }
    Ok(cases)
}

pub fn holm_examples() -> Check {
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
    let examples: [(&[f64], &[f64]); 2] = [(&[0.01, 0.04], &[0.02, 0.04]), (&[0.05, 0.05, 0.05], &[0.15, 0.15, 0.15])];
    for (input, want) in examples {
        let got = holm_bonferroni(input).map_err(|e| e.to_string())?;
        if !close(&got, want) {
            return Err(format!("holm {input:?}: got {got:?}, want {want:?}"));
        }
    }
    Ok(examples.len())
}

/// One-way F from explicit between/within sums of squares.
pub fn sum_of_squares_f(groups: &[Vec<f64>]) -> f64 {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = all.iter().sum::<f64>() / all.len() as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let k = groups.len() as f64;
    (ssb / (k - 1.0)) / (ssw / (all.len() as f64 - k))
}

pub fn anova_random_groups() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa0a);
    for set in 0..50 {
        let groups: Vec<Vec<f64>> = (0..3)
            .map(|g| (0..8).map(|_| f64::from(rng.random_range(0..=10)) + f64::from(g)).collect())
            .collect();
        let got = oneway_anova(&groups).unwrap().f;
        let want = sum_of_squares_f(&groups);
        if (got - want).abs() > 1e-9 {
            return Err(format!("anova set {set}: got {got}, oracle {want}"));
        }
    }
    Ok(50)
}

/// The fitted log-likelihood must be at least the best value found on a
/// 100×100 grid spanning ±2 around the estimate in each coefficient.
pub fn logistic_grid() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x106);
    let x: Vec<f64> = (0..60).map(|_| f64::from(rng.random_range(0..5))).collect();
    let y: Vec<bool> = x.iter().map(|xi| rng.random_bool(1.0 / (1.0 + (-(xi - 2.0) * 0.6f64).exp()))).collect();
    let fit = logistic_trend(&y, &x).map_err(|e| e.to_string())?.computed().cloned().ok_or("fit not applicable")?;
    let ll = screener_stats::log_likelihood(&y, &x, fit.intercept, fit.slope);
    let mut grid = 0;
    for i in 0..100 {
        for j in 0..100 {
            let b0 = fit.intercept - 2.0 + 4.0 * f64::from(i) / 99.0;
            let b1 = fit.slope - 2.0 + 4.0 * f64::from(j) / 99.0;
            let g = screener_stats::log_likelihood(&y, &x, b0, b1);
            if g > ll + 1e-12 {
                return Err(format!("logistic: grid point ({b0}, {b1}) has {g} > {ll}"));
            }
            grid += 1;
        }
    }
    Ok(grid)
}

/// All oracle checks, named.
pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("wilcoxon exact vs enumeration, n = 1..8", wilcoxon_exhaustive()),
        ("fisher vs hypergeometric enumeration, 200 tables", fisher_random_tables()),
        ("icc(3,1) vs definitional anova, 50 datasets", icc_random_datasets()),
        ("spearman vs pearson on ranks", spearman_cases()),
        ("holm examples", holm_examples()),
        ("anova F vs sums of squares", anova_random_groups()),
        ("logistic ML vs 100x100 grid", logistic_grid()),
    ]
}
