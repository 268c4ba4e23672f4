use serde::{Deserialize, Serialize};

use crate::dist::{normal_quantile, normal_two_sided};
use crate::{Outcome, StatsError, ALPHA};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticTrend {
    pub intercept: f64,
    pub slope: f64,
    pub or_per_unit: f64,
    pub ci95: [f64; 2],
    pub p: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// Log-likelihood of `y ~ intercept + slope·x` under the logit link.
pub fn log_likelihood(y: &[bool], x: &[f64], intercept: f64, slope: f64) -> f64 {
    y.iter()
        .zip(x)
        .map(|(&yi, &xi)| {
            let eta = intercept + slope * xi;
            // log(1 + e^eta) without overflow
            let log1pexp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if yi {
                eta - log1pexp
            } else {
                -log1pexp
            }
        })
        .sum()
}

/// Separation means the maximum-likelihood slope does not exist.
fn separated(y: &[bool], x: &[f64]) -> bool {
    let range = |want: bool| {
        y.iter().zip(x).filter(|(yi, _)| **yi == want).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &v)| {
            (lo.min(v), hi.max(v))
        })
    };
    let (lo1, hi1) = range(true);
    let (lo0, hi0) = range(false);
    hi0 <= lo1 || hi1 <= lo0
}

/// Univariate logistic regression of a binary outcome on an ordinal
/// predictor by Newton-Raphson, with Wald interval and p for the slope.
pub fn logistic_trend(y: &[bool], x: &[f64]) -> Result<Outcome<LogisticTrend>, StatsError> {
    if y.len() != x.len() {
        return Err(StatsError::LengthMismatch(y.len(), x.len()));
    }
    let n = y.len();
    let events = y.iter().filter(|v| **v).count();
    if events == 0 || events == n {
        return Ok(Outcome::na("outcome does not vary"));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Ok(Outcome::na("predictor does not vary"));
    }
    if separated(y, x) {
        return Ok(Outcome::na("separation"));
    }

    let rate = events as f64 / n as f64;
    let (mut b0, mut b1) = ((rate / (1.0 - rate)).ln(), 0.0);
    for iter in 1..=MAX_ITER {
        let (mut g0, mut g1) = (0.0, 0.0);
        let mut info = [0.0; 3];
        for (&yi, &xi) in y.iter().zip(x) {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            let r = f64::from(u8::from(yi)) - p;
            let w = p * (1.0 - p);
            g0 += r;
            g1 += r * xi;
            info[0] += w;
            info[1] += w * xi;
            info[2] += w * xi * xi;
        }
        let det = info[0] * info[2] - info[1] * info[1];
        if det <= 0.0 || !det.is_finite() {
            return Ok(Outcome::na("singular information matrix"));
        }
        let step0 = (info[2] * g0 - info[1] * g1) / det;
        let step1 = (info[0] * g1 - info[1] * g0) / det;
        b0 += step0;
        b1 += step1;
        if step0.abs().max(step1.abs()) < TOL {
            let det = info[0] * info[2] - info[1] * info[1];
            let se = (info[0] / det).sqrt();
            let z = normal_quantile(1.0 - ALPHA / 2.0);
            return Ok(Outcome::Computed(LogisticTrend {
                intercept: b0,
                slope: b1,
                or_per_unit: b1.exp(),
                ci95: [(b1 - z * se).exp(), (b1 + z * se).exp()],
                p: normal_two_sided(b1 / se),
                log_likelihood: log_likelihood(y, x, b0, b1),
                iterations: iter,
            }));
        }
    }
    Ok(Outcome::na("did not converge"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_levels_give_unit_odds_ratio() {
        let x = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0];
        let y = [true, false, true, false, true, false];
        let r = logistic_trend(&y, &x).unwrap().unwrap();
        assert!(r.slope.abs() < 1e-12);
        assert!((r.or_per_unit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separation_is_flagged() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [false, false, true, true];
        assert_eq!(logistic_trend(&y, &x).unwrap(), Outcome::na("separation"));
    }
}
