use serde::{Deserialize, Serialize};

use crate::dist::f_quantile;
use crate::{Outcome, ALPHA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Icc {
    pub value: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub ms_rows: f64,
    pub ms_error: f64,
}

/// ICC(3,1): two-way mixed effects, consistency, single rater, with the
/// F-based confidence interval. `pairs` are (rater 1, rater 2) per subject.
pub fn icc31(pairs: &[(f64, f64)]) -> Outcome<Icc> {
    let n = pairs.len();
    if n < 2 {
        return Outcome::na("fewer than two subjects");
    }
    let k = 2.0;
    // With two raters the row and error mean squares reduce to the sample
    // variances of the pair sums and pair differences, halved.
    let sums: Vec<f64> = pairs.iter().map(|(a, b)| a + b).collect();
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| b - a).collect();
    let ss = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let df_r = (n - 1) as f64;
    let ms_rows = ss(&sums) / 2.0 / df_r;
    let ms_error = ss(&diffs) / 2.0 / df_r;
    if ms_rows == 0.0 {
        return Outcome::na("zero between-subject variance");
    }
    if ms_error == 0.0 {
        return Outcome::Computed(Icc { value: 1.0, ci95_low: 1.0, ci95_high: 1.0, ms_rows, ms_error });
    }
    let value = (ms_rows - ms_error) / (ms_rows + (k - 1.0) * ms_error);
    let f0 = ms_rows / ms_error;
    let df_e = df_r * (k - 1.0);
    let q = 1.0 - ALPHA / 2.0;
    let fl = f0 / f_quantile(q, df_r, df_e);
    let fu = f0 * f_quantile(q, df_e, df_r);
    Outcome::Computed(Icc {
        value,
        ci95_low: (fl - 1.0) / (fl + k - 1.0),
        ci95_high: (fu - 1.0) / (fu + k - 1.0),
        ms_rows,
        ms_error,
    })
}
