use super::same_schema;
use crate::error::{Error, Result};
use crate::table::{ColumnKind, Table};

pub const DEFAULT_BINS: usize = 20;

/// Inner quantile cut points `q(k/bins)`, `k = 1..bins`, with linear
/// interpolation between order statistics. Repeated cut points collapse.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    if values.is_empty() || bins < 2 {
        return Vec::new();
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mut edges: Vec<f64> = (1..bins)
        .map(|k| {
            let h = (n - 1) as f64 * k as f64 / bins as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            s[lo] + (h - lo as f64) * (s[hi] - s[lo])
        })
        .collect();
    edges.dedup();
    edges
}

/// Bin `k` holds values in `(edges[k-1], edges[k]]`.
pub fn bin_codes(values: &[f64], edges: &[f64]) -> Vec<usize> {
    values
        .iter()
        .map(|&x| edges.partition_point(|&e| e < x))
        .collect()
}

/// Per-column discretization fixed on a reference table: quantile bins for
/// numeric columns, category indices for categorical ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretizer {
    columns: Vec<Option<Vec<f64>>>,
    levels: Vec<usize>,
}

impl Discretizer {
    pub fn fit(reference: &Table, bins: usize) -> Self {
        let mut columns = Vec::new();
        let mut levels = Vec::new();
        for (i, col) in reference.schema().iter().enumerate() {
            match col.kind {
                ColumnKind::Categorical => {
                    columns.push(None);
                    levels.push(col.n_categories());
                }
                ColumnKind::Numeric => {
                    let edges = quantile_edges(reference.column_at(i), bins);
                    levels.push(edges.len() + 1);
                    columns.push(Some(edges));
                }
            }
        }
        Self { columns, levels }
    }

    pub fn levels(&self, col: usize) -> usize {
        self.levels[col]
    }

    pub fn codes(&self, t: &Table, col: usize) -> Vec<usize> {
        match &self.columns[col] {
            Some(edges) => bin_codes(t.column_at(col), edges),
            None => t.column_at(col).iter().map(|&v| v as usize).collect(),
        }
    }
}

/// Total variation distance between the joint histograms of two code
/// columns in `real` and `synth`.
pub fn pair_tvd(
    real: (&[usize], &[usize]),
    synth: (&[usize], &[usize]),
    levels: (usize, usize),
) -> f64 {
    let cells = levels.0 * levels.1;
    let hist = |a: &[usize], b: &[usize]| {
        let mut h = vec![0usize; cells];
        for (&x, &y) in a.iter().zip(b) {
            h[x * levels.1 + y] += 1;
        }
        h
    };
    let p = hist(real.0, real.1);
    let q = hist(synth.0, synth.1);
    // integer arithmetic keeps the result inside [0, 1]
    let (nr, ns) = (real.0.len() as u128, synth.0.len() as u128);
    let diff: u128 = p
        .iter()
        .zip(&q)
        .map(|(&a, &b)| (a as u128 * ns).abs_diff(b as u128 * nr))
        .sum();
    diff as f64 / (2 * nr * ns) as f64
}

/// Mean pairwise (k = 2) TVD after binning numeric columns on the real
/// table's quantiles.
pub fn kmtvd(real: &Table, synth: &Table, bins: usize) -> Result<f64> {
    same_schema(real, synth)?;
    let d = real.n_cols();
    if d < 2 {
        return Err(Error::InvalidInput("k-MTVD needs at least two columns".into()));
    }
    if real.n_rows() == 0 || synth.n_rows() == 0 {
        return Err(Error::InvalidInput("k-MTVD needs non-empty tables".into()));
    }
    let disc = Discretizer::fit(real, bins);
    let rc: Vec<Vec<usize>> = (0..d).map(|c| disc.codes(real, c)).collect();
    let sc: Vec<Vec<usize>> = (0..d).map(|c| disc.codes(synth, c)).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..d {
        for j in i + 1..d {
            total += pair_tvd(
                (&rc[i], &rc[j]),
                (&sc[i], &sc[j]),
                (disc.levels(i), disc.levels(j)),
            );
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    #[test]
    fn edges_collapse_ties() {
        assert_eq!(quantile_edges(&[1.0; 10], 4), [1.0]);
        let e = quantile_edges(&(0..=100).map(f64::from).collect::<Vec<_>>(), 4);
        assert_eq!(e, [25.0, 50.0, 75.0]);
        assert_eq!(bin_codes(&[0.0, 25.0, 25.5, 100.0], &e), [0, 0, 1, 3]);
    }

    #[test]
    fn identical_and_disjoint() {
        let s = vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")];
        let real = Table::new(s.clone(), vec![vec![0.0, 1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0, 0.0]])
            .unwrap();
        assert_eq!(kmtvd(&real, &real, 20).unwrap(), 0.0);
        let far = Table::new(s, vec![vec![100.0; 4], vec![100.0; 4]]).unwrap();
        assert_eq!(kmtvd(&real, &far, 20).unwrap(), 1.0);
    }

    #[test]
    fn toy_pair_by_hand() {
        // real {(a,0),(a,0),(b,1),(b,1)} vs synth {(a,1),(a,1),(b,0),(b,0)}:
        // the four joint cells never overlap
        let s = vec![
            ColumnSchema::categorical("c", ["a", "b"]),
            ColumnSchema::numeric("x"),
        ];
        let real = Table::new(s.clone(), vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]])
            .unwrap();
        let synth =
            Table::new(s, vec![vec![0.0, 0.0, 1.0, 1.0], vec![1.0, 1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(kmtvd(&real, &synth, 20).unwrap(), 1.0);
    }
}
