use super::{bootstrap, median, quantile_sorted, wilcoxon::signed_rank_null, EXACT_LIMIT};
use crate::error::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct HlInterval {
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
    /// True when the bounds come from inverting the signed-rank
    /// distribution rather than from the bootstrap.
    pub exact: bool,
}

/// `(d[i] + d[j]) / 2` for all `i <= j`.
pub fn walsh_averages(diffs: &[f64]) -> Vec<f64> {
    let n = diffs.len();
    let mut w = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            w.push((diffs[i] + diffs[j]) / 2.0);
        }
    }
    w
}

/// Median of the Walsh averages.
pub fn hodges_lehmann(diffs: &[f64]) -> Result<f64> {
    if diffs.is_empty() {
        return Err(Error::InvalidInput("hodges-lehmann needs at least one value".into()));
    }
    Ok(median(&walsh_averages(diffs)))
}

fn distinct_magnitudes(diffs: &[f64]) -> bool {
    let mut a: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    a.sort_by(f64::total_cmp);
    a.windows(2).all(|w| w[0] != w[1])
}

/// Estimate with a `1 - alpha` interval. Small samples with distinct
/// magnitudes invert the signed-rank distribution; others use a percentile
/// bootstrap seeded by `seed`.
pub fn hl_interval(diffs: &[f64], alpha: f64, seed: u64) -> Result<HlInterval> {
    let estimate = hodges_lehmann(diffs)?;
    let n = diffs.len();
    if n <= EXACT_LIMIT && distinct_magnitudes(diffs) {
        let mut w = walsh_averages(diffs);
        w.sort_by(f64::total_cmp);
        let ranks: Vec<usize> = (1..=n).collect();
        let counts = signed_rank_null(&ranks);
        let total = 2f64.powi(n as i32);
        // c = largest count with P(T < c) <= alpha / 2
        let mut c = 1;
        let mut below = 0.0;
        for (t, &k) in counts.iter().enumerate() {
            below += k / total;
            if below <= alpha / 2.0 {
                c = t + 1;
            } else {
                break;
            }
        }
        let c = c.min(w.len().div_ceil(2));
        return Ok(HlInterval {
            estimate,
            low: w[c - 1],
            high: w[w.len() - c],
            exact: true,
        });
    }
    let mut stats = bootstrap(diffs, BOOTSTRAP_RESAMPLES, seed, |s| median(&walsh_averages(s)));
    stats.sort_by(f64::total_cmp);
    let low = quantile_sorted(&stats, alpha / 2.0).min(estimate);
    let high = quantile_sorted(&stats, 1.0 - alpha / 2.0).max(estimate);
    Ok(HlInterval {
        estimate,
        low,
        high,
        exact: false,
    })
}
