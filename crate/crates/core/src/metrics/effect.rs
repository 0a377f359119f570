use crate::error::{Error, Result};
use crate::table::Table;

/// Map each treatment value to whichever arm value is nearer (ties go to
/// `x0`).
pub fn snap_to_arms(values: &[f64], x0: f64, x1: f64) -> Vec<f64> {
    values
        .iter()
        .map(|&t| if (t - x1).abs() < (t - x0).abs() { x1 } else { x0 })
        .collect()
}

/// `mean(outcome | treatment = x1) - mean(outcome | treatment = x0)` with
/// exact matching on the treatment column.
pub fn ate_from_table(t: &Table, treatment: &str, outcome: &str, x0: f64, x1: f64) -> Result<f64> {
    let tr = t.column(treatment)?;
    let y = t.column(outcome)?;
    let arm_mean = |x: f64| -> Result<f64> {
        let (sum, n) = tr
            .iter()
            .zip(y)
            .filter(|(&a, _)| a == x)
            .fold((0.0, 0usize), |(s, n), (_, &v)| (s + v, n + 1));
        if n == 0 {
            return Err(Error::MissingArm(x));
        }
        Ok(sum / n as f64)
    };
    Ok(arm_mean(x1)? - arm_mean(x0)?)
}

pub fn delta_ate(a: f64, b: f64) -> f64 {
    (a - b).abs()
}
