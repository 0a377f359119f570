//! Fidelity and privacy metrics for synthetic tables.
//!
//! Every metric compares a real table with a synthetic table of the same
//! schema and is invariant to the row order of either.

mod correlation;
mod distribution;
mod effect;
mod privacy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ColumnKind, Table};

pub use correlation::{
    cmd, correlation_ratio, cramers_v, mixed_correlation, spearman, AssocMethod,
    MixedCorrelationMatrix,
};
pub use distribution::{bin_codes, kmtvd, pair_tvd, quantile_edges, Discretizer, DEFAULT_BINS};
pub use effect::{ate_from_table, delta_ate, snap_to_arms};
pub use privacy::{gower, nnaa, GowerSpace};
pub(crate) use correlation::average_ranks;

/// Pearson correlation; `None` when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub(crate) fn same_schema(real: &Table, synth: &Table) -> Result<()> {
    if real.schema() != synth.schema() {
        return Err(Error::Schema("real and synthetic schemas differ".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpuriousEntry {
    pub a: String,
    pub b: String,
    /// `None` when a column is constant.
    pub pearson: Option<f64>,
}

/// Plain Pearson correlation for each requested (numeric) pair.
pub fn spurious_report<S: AsRef<str>>(t: &Table, pairs: &[(S, S)]) -> Result<Vec<SpuriousEntry>> {
    pairs
        .iter()
        .map(|(a, b)| {
            let (a, b) = (a.as_ref(), b.as_ref());
            for name in [a, b] {
                if t.schema()[t.index_of(name)?].kind != ColumnKind::Numeric {
                    return Err(Error::InvalidInput(format!("{name:?} is not numeric")));
                }
            }
            Ok(SpuriousEntry {
                a: a.to_string(),
                b: b.to_string(),
                pearson: pearson(t.column(a)?, t.column(b)?),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub cmd: f64,
    pub kmtvd: f64,
    pub nnaa: f64,
    #[serde(default)]
    pub spurious: Vec<SpuriousEntry>,
}

/// CMD, 2-MTVD (20 bins) and NNAA, plus Pearson values on `spurious_pairs`
/// of the synthetic table.
pub fn evaluate<S: AsRef<str>>(
    real: &Table,
    synth: &Table,
    spurious_pairs: &[(S, S)],
) -> Result<MetricReport> {
    Ok(MetricReport {
        cmd: cmd(real, synth)?,
        kmtvd: kmtvd(real, synth, DEFAULT_BINS)?,
        nnaa: nnaa(real, synth)?,
        spurious: spurious_report(synth, spurious_pairs)?,
    })
}
