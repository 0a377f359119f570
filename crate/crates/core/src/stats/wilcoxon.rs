use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::average_ranks;

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_LIMIT: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub n_nonzero: usize,
    pub n_zero: usize,
    pub exact: bool,
}

/// Counts of every achievable positive-rank sum when each rank in
/// `ranks` carries a fair random sign. `counts[s]` is the number of sign
/// patterns with sum `s`.
pub fn signed_rank_null(ranks: &[usize]) -> Vec<f64> {
    let total: usize = ranks.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in ranks {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Wilcoxon signed-rank test with Pratt's treatment of zeros: zeros take
/// part in ranking and are then dropped.
pub fn wilcoxon_pratt(diffs: &[f64]) -> Result<WilcoxonResult> {
    if diffs.is_empty() {
        return Err(Error::InvalidInput("wilcoxon needs at least one difference".into()));
    }
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("non-finite difference".into()));
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let n_zero = diffs.iter().filter(|&&d| d == 0.0).count();
    let nonzero: Vec<(f64, bool)> = diffs
        .iter()
        .zip(&ranks)
        .filter(|(&d, _)| d != 0.0)
        .map(|(&d, &r)| (r, d > 0.0))
        .collect();
    let m = nonzero.len();
    let statistic: f64 = nonzero.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    if m == 0 {
        return Ok(WilcoxonResult {
            statistic,
            p_value: 1.0,
            n_nonzero: 0,
            n_zero,
            exact: true,
        });
    }
    let tied = {
        let mut a: Vec<f64> = nonzero.iter().map(|(r, _)| *r).collect();
        a.sort_by(f64::total_cmp);
        a.windows(2).any(|w| w[0] == w[1])
    };
    if m <= EXACT_LIMIT && !tied {
        // without ties among nonzeros every rank is an integer
        let int_ranks: Vec<usize> = nonzero.iter().map(|(r, _)| r.round() as usize).collect();
        let counts = signed_rank_null(&int_ranks);
        let total = 2f64.powi(m as i32);
        let t = statistic.round() as usize;
        let lower: f64 = counts[..=t].iter().sum::<f64>() / total;
        let upper: f64 = counts[t..].iter().sum::<f64>() / total;
        return Ok(WilcoxonResult {
            statistic,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            n_nonzero: m,
            n_zero,
            exact: true,
        });
    }
    let mean = nonzero.iter().map(|(r, _)| r).sum::<f64>() / 2.0;
    let var = nonzero.iter().map(|(r, _)| r * r).sum::<f64>() / 4.0;
    let dev = (statistic - mean).abs();
    let z = ((dev - 0.5).max(0.0)) / var.sqrt();
    let normal = Normal::standard();
    Ok(WilcoxonResult {
        statistic,
        p_value: (2.0 * normal.sf(z)).min(1.0),
        n_nonzero: m,
        n_zero,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(wilcoxon_pratt(&[0.0, 0.0, 0.0]).unwrap().p_value, 1.0);
        let r = wilcoxon_pratt(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(r.exact);
        assert!((r.p_value - 2.0 / 32.0).abs() < 1e-15);
        assert_eq!(wilcoxon_pratt(&[0.0, 0.0, 1.0, -1.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn pratt_shifts_ranks() {
        // zeros occupy ranks 1 and 2, so the nonzero ranks are 3, 4, 5
        let r = wilcoxon_pratt(&[0.0, 0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 12.0);
        assert_eq!(r.n_zero, 2);
        assert_eq!(r.p_value, 0.25);
    }

    #[test]
    fn null_counts() {
        assert_eq!(signed_rank_null(&[1, 2]), [1.0, 1.0, 1.0, 1.0]);
        let c = signed_rank_null(&[1, 2, 3]);
        assert_eq!(c, [1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn large_sample_uses_normal() {
        let d: Vec<f64> = (1..=40).map(|i| f64::from(i) * if i % 4 == 0 { -1.0 } else { 1.0 }).collect();
        let r = wilcoxon_pratt(&d).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value < 0.05);
    }
}
