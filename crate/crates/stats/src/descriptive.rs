use serde::{Deserialize, Serialize};

use crate::StatsError;
use screener_core::protocol::classify_severity;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1); `None` below two values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Linear-interpolation quantile (type 7) of ascending `sorted`.
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Midpoint median.
pub fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsDiff {
    pub median: f64,
    pub iqr: f64,
    pub mean: f64,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedDiff {
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub n: usize,
    pub identical_count: usize,
    pub abs_diff: AbsDiff,
    pub signed_diff: SignedDiff,
}

/// Differences are `bot − self` for `(self, bot)` pairs.
pub fn descriptives(pairs: &[(f64, f64)]) -> Result<Descriptives, StatsError> {
    if pairs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let signed: Vec<f64> = pairs.iter().map(|(s, b)| b - s).collect();
    let mut abs: Vec<f64> = signed.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    Ok(Descriptives {
        n: pairs.len(),
        identical_count: signed.iter().filter(|d| **d == 0.0).count(),
        abs_diff: AbsDiff {
            median: median(&abs),
            iqr: quantile_type7(&abs, 0.75) - quantile_type7(&abs, 0.25),
            mean: mean(&abs),
            sd: sample_sd(&abs),
        },
        signed_diff: SignedDiff { median: median(&signed), mean: mean(&signed) },
    })
}

/// Pairs whose two totals fall in different severity bands.
pub fn category_shift(pairs: &[(u8, u8)]) -> Result<usize, StatsError> {
    let mut n = 0;
    for &(s, b) in pairs {
        let band = |x: u8| classify_severity(i64::from(x)).map_err(|e| StatsError::InvalidValue(e.to_string()));
        if band(s)? != band(b)? {
            n += 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_identical_pair() {
        let d = descriptives(&[(5.0, 5.0)]).unwrap();
        assert_eq!(d.identical_count, 1);
        assert_eq!(d.abs_diff.median, 0.0);
        assert_eq!(d.abs_diff.sd, None);
    }

    #[test]
    fn small_example() {
        let d = descriptives(&[(0.0, 1.0), (2.0, 2.0), (3.0, 6.0)]).unwrap();
        assert_eq!(d.abs_diff.median, 1.0);
        assert!((d.abs_diff.mean - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.identical_count, 1);
        // sorted [0,1,3]: q1 = 0.5, q3 = 2
        assert_eq!(d.abs_diff.iqr, 1.5);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(descriptives(&[]), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn band_shifts() {
        assert_eq!(category_shift(&[(4, 5)]).unwrap(), 1);
        assert_eq!(category_shift(&[(10, 14)]).unwrap(), 0);
        assert_eq!(category_shift(&[(20, 27)]).unwrap(), 0);
        assert!(category_shift(&[(20, 28)]).is_err());
    }

    #[test]
    fn type7_matches_hand_values() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&s, 0.25), 1.75);
        assert_eq!(quantile_type7(&s, 0.5), 2.5);
        assert_eq!(quantile_type7(&s, 1.0), 4.0);
    }
}
