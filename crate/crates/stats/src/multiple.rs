use crate::StatsError;

/// Holm step-down adjustment. Output is in input order, monotone along
/// the ascending order of the inputs and capped at 1.
pub fn holm_bonferroni(pvals: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidValue(format!("p-value {bad} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(((m - i) as f64 * pvals[idx]).min(1.0));
        out[idx] = running;
    }
    Ok(out)
}
