use super::same_schema;
use crate::error::{Error, Result};
use crate::par;
use crate::table::{ColumnKind, Table};

/// Column metadata for Gower distances: numeric ranges come from the pooled
/// real and synthetic rows.
#[derive(Clone, Debug, PartialEq)]
pub struct GowerSpace {
    ranges: Vec<Option<f64>>,
}

impl GowerSpace {
    pub fn pooled(a: &Table, b: &Table) -> Result<Self> {
        same_schema(a, b)?;
        let ranges = a
            .schema()
            .iter()
            .enumerate()
            .map(|(c, col)| match col.kind {
                ColumnKind::Categorical => None,
                ColumnKind::Numeric => {
                    let (lo, hi) = a
                        .column_at(c)
                        .iter()
                        .chain(b.column_at(c))
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                            (lo.min(v), hi.max(v))
                        });
                    Some(if lo.is_finite() { hi - lo } else { 0.0 })
                }
            })
            .collect();
        Ok(Self { ranges })
    }

    /// `ranges[c]` is `None` for categorical columns.
    pub fn from_ranges(ranges: Vec<Option<f64>>) -> Self {
        Self { ranges }
    }

    pub fn distance(&self, u: &[f64], v: &[f64]) -> f64 {
        gower(u, v, &self.ranges)
    }
}

/// Mean over columns of `|u - v| / range` (0 when the range is 0) for
/// numeric columns and `1{u != v}` for categorical ones.
pub fn gower(u: &[f64], v: &[f64], ranges: &[Option<f64>]) -> f64 {
    let mut sum = 0.0;
    for ((a, b), r) in u.iter().zip(v).zip(ranges) {
        sum += match r {
            Some(range) if *range > 0.0 => (a - b).abs() / range,
            Some(_) => 0.0,
            None => {
                if a != b {
                    1.0
                } else {
                    0.0
                }
            }
        };
    }
    sum / ranges.len() as f64
}

fn rows(t: &Table) -> Vec<Vec<f64>> {
    (0..t.n_rows()).map(|r| t.row(r)).collect()
}

/// For each row of `from`: nearest distance into `other` and nearest
/// distance into `from` itself excluding the row.
fn nearest(space: &GowerSpace, from: &[Vec<f64>], other: &[Vec<f64>]) -> Vec<(f64, f64)> {
    par::map_range(from.len(), |i| {
        let cross = other
            .iter()
            .map(|o| space.distance(&from[i], o))
            .fold(f64::INFINITY, f64::min);
        let within = from
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, o)| space.distance(&from[i], o))
            .fold(f64::INFINITY, f64::min);
        (cross, within)
    })
}

/// Nearest-neighbour adversarial accuracy with Gower distance. 0.5 means
/// the sets are hard to tell apart, 0 means synthetic rows copy real ones,
/// 1 means they are disjoint. Ties count as "not farther".
pub fn nnaa(real: &Table, synth: &Table) -> Result<f64> {
    let space = GowerSpace::pooled(real, synth)?;
    let n = real.n_rows();
    if synth.n_rows() != n {
        return Err(Error::InvalidInput(format!(
            "NNAA needs equal sizes, got {n} and {}",
            synth.n_rows()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidInput("NNAA needs at least two rows".into()));
    }
    let (r, s) = (rows(real), rows(synth));
    let share = |pairs: Vec<(f64, f64)>| {
        pairs.iter().filter(|(cross, within)| cross > within).count() as f64 / n as f64
    };
    let real_side = share(nearest(&space, &r, &s));
    let synth_side = share(nearest(&space, &s, &r));
    Ok(0.5 * (real_side + synth_side))
}
