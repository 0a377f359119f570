//! Paired comparisons: Wilcoxon signed-rank with Pratt zeros, Holm
//! step-down adjustment, Hodges–Lehmann estimates and bootstrap intervals.

mod hodges_lehmann;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed::{rng_at, tag};

pub use hodges_lehmann::{hl_interval, hodges_lehmann, walsh_averages, HlInterval, BOOTSTRAP_RESAMPLES};
pub use wilcoxon::{signed_rank_null, wilcoxon_pratt, WilcoxonResult, EXACT_LIMIT};

pub const ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub hl_estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    pub n_pairs: usize,
}

/// Compare paired samples through `a[i] - b[i]`. The adjusted p-value equals
/// the raw one until [`holm_adjust`] runs over the family.
pub fn compare_paired(a: &[f64], b: &[f64], seed: u64) -> Result<ComparisonResult> {
    if a.len() != b.len() {
        return Err(Error::Unpaired(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("no pairs to compare".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let test = wilcoxon_pratt(&diffs)?;
    let ci = hl_interval(&diffs, ALPHA, seed)?;
    Ok(ComparisonResult {
        hl_estimate: ci.estimate,
        ci_low: ci.low,
        ci_high: ci.high,
        p_raw: test.p_value,
        p_adjusted: test.p_value,
        significant: test.p_value < ALPHA,
        n_pairs: diffs.len(),
    })
}

/// Holm adjustment applied in place to one family of comparisons.
pub fn holm_adjust(family: &mut [&mut ComparisonResult]) {
    let raw: Vec<f64> = family.iter().map(|c| c.p_raw).collect();
    for (c, p) in family.iter_mut().zip(holm(&raw)) {
        c.p_adjusted = p;
        c.significant = p < ALPHA;
    }
}

/// Holm step-down adjusted p-values, returned in input order.
pub fn holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running = 0.0f64;
    for (j, &i) in idx.iter().enumerate() {
        running = running.max(((m - j) as f64 * p[i]).min(1.0));
        out[i] = running;
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut s = values.to_vec();
    let n = s.len();
    let (below, &mut upper, _) = s.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = below.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Spread of one metric across generation orderings.
pub fn sensitivity_range(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Percentile bootstrap interval for the median of `ranges`.
pub fn median_range_ci(ranges: &[f64], resamples: usize, alpha: f64, seed: u64) -> Result<(f64, f64)> {
    if ranges.is_empty() {
        return Err(Error::InvalidInput("no ranges".into()));
    }
    let mut medians = bootstrap(ranges, resamples, seed, median);
    medians.sort_by(f64::total_cmp);
    Ok((
        quantile_sorted(&medians, alpha / 2.0),
        quantile_sorted(&medians, 1.0 - alpha / 2.0),
    ))
}

/// `stat` over `resamples` with-replacement resamples, each on its own stream.
pub(crate) fn bootstrap<F>(values: &[f64], resamples: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    use rand::Rng;
    par::map_range(resamples, |b| {
        let mut rng = rng_at(seed, &[tag::BOOTSTRAP, b as u64]);
        let sample: Vec<f64> = (0..values.len())
            .map(|_| values[rng.random_range(0..values.len())])
            .collect();
        stat(&sample)
    })
}
