use serde::{Deserialize, Serialize};

use crate::dist::t_two_sided;
use crate::rank::average_ranks;
use crate::{Outcome, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spearman {
    pub rho: f64,
    pub p: f64,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho as Pearson on average ranks; p from t with n − 2 df.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Outcome<Spearman>, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Ok(Outcome::na("fewer than three pairs"));
    }
    let Some(rho) = pearson(&average_ranks(x), &average_ranks(y)) else {
        return Ok(Outcome::na("a variable is constant"));
    };
    let p = if rho.abs() == 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        t_two_sided(rho * (df / (1.0 - rho * rho)).sqrt(), df)
    };
    Ok(Outcome::Computed(Spearman { rho, p }))
}
