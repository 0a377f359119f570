use serde::{Deserialize, Serialize};

use super::{pearson, same_schema};
use crate::error::Result;
use crate::table::{ColumnKind, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssocMethod {
    Identity,
    CramersV,
    Eta,
    Spearman,
}

/// Symmetric association matrix mixing Cramér's V (categorical pairs), the
/// correlation ratio η (categorical × numeric) and Spearman's ρ (numeric
/// pairs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedCorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub methods: Vec<Vec<AssocMethod>>,
    /// Pairs whose association was undefined (a constant column) and set to 0.
    pub degenerate: Vec<(String, String)>,
}

/// Ranks starting at 1, ties get the average rank.
pub(crate) fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Bias-uncorrected Cramér's V from the chi-square statistic. `None` when
/// either variable takes a single observed value.
pub fn cramers_v(a: &[f64], ka: usize, b: &[f64], kb: usize) -> Option<f64> {
    let n = a.len();
    if n == 0 {
        return None;
    }
    let mut counts = vec![0usize; ka * kb];
    let mut row = vec![0usize; ka];
    let mut col = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as usize, y as usize);
        counts[x * kb + y] += 1;
        row[x] += 1;
        col[y] += 1;
    }
    let r = row.iter().filter(|&&c| c > 0).count();
    let c = col.iter().filter(|&&c| c > 0).count();
    let m = r.min(c);
    if m < 2 {
        return None;
    }
    let mut chi2 = 0.0;
    for i in (0..ka).filter(|&i| row[i] > 0) {
        for j in (0..kb).filter(|&j| col[j] > 0) {
            let e = row[i] as f64 * col[j] as f64 / n as f64;
            let d = counts[i * kb + j] as f64 - e;
            chi2 += d * d / e;
        }
    }
    Some((chi2 / (n as f64 * (m - 1) as f64)).sqrt().clamp(0.0, 1.0))
}

/// η = sqrt(between-group sum of squares / total sum of squares).
pub fn correlation_ratio(groups: &[f64], k: usize, values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&g, &v) in groups.iter().zip(values) {
        sums[g as usize] += v;
        counts[g as usize] += 1;
    }
    let total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if total <= 0.0 {
        return None;
    }
    let between: f64 = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&s, &c)| {
            let d = s / c as f64 - mean;
            c as f64 * d * d
        })
        .sum();
    Some((between / total).sqrt().clamp(0.0, 1.0))
}

pub fn mixed_correlation(t: &Table) -> MixedCorrelationMatrix {
    let d = t.n_cols();
    let schema = t.schema();
    let mut values = vec![vec![0.0; d]; d];
    let mut methods = vec![vec![AssocMethod::Identity; d]; d];
    let mut degenerate = Vec::new();
    for i in 0..d {
        values[i][i] = 1.0;
        for j in i + 1..d {
            let (ci, cj) = (&schema[i], &schema[j]);
            let (xi, xj) = (t.column_at(i), t.column_at(j));
            let (method, value) = match (ci.kind, cj.kind) {
                (ColumnKind::Categorical, ColumnKind::Categorical) => (
                    AssocMethod::CramersV,
                    cramers_v(xi, ci.n_categories(), xj, cj.n_categories()),
                ),
                (ColumnKind::Categorical, ColumnKind::Numeric) => {
                    (AssocMethod::Eta, correlation_ratio(xi, ci.n_categories(), xj))
                }
                (ColumnKind::Numeric, ColumnKind::Categorical) => {
                    (AssocMethod::Eta, correlation_ratio(xj, cj.n_categories(), xi))
                }
                (ColumnKind::Numeric, ColumnKind::Numeric) => {
                    (AssocMethod::Spearman, spearman(xi, xj))
                }
            };
            let v = value.unwrap_or_else(|| {
                degenerate.push((ci.name.clone(), cj.name.clone()));
                0.0
            });
            values[i][j] = v;
            values[j][i] = v;
            methods[i][j] = method;
            methods[j][i] = method;
        }
    }
    MixedCorrelationMatrix {
        names: t.names().map(String::from).collect(),
        values,
        methods,
        degenerate,
    }
}

/// Frobenius norm of the difference of the two mixed correlation matrices.
pub fn cmd(real: &Table, synth: &Table) -> Result<f64> {
    same_schema(real, synth)?;
    let a = mixed_correlation(real);
    let b = mixed_correlation(synth);
    let sq: f64 = a
        .values
        .iter()
        .flatten()
        .zip(b.values.iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    #[test]
    fn average_ranks_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), [1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn spearman_monotone() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3) + 1.0).collect();
        assert_eq!(spearman(&x, &y), Some(1.0));
    }

    #[test]
    fn cramers_v_identity() {
        let a = [0.0, 1.0, 2.0, 0.0, 1.0, 2.0];
        assert!((cramers_v(&a, 3, &a, 3).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cramers_v(&[0.0; 4], 2, &[0.0, 1.0, 0.0, 1.0], 2), None);
    }

    #[test]
    fn eta_variance_decomposition() {
        // groups a:(0,0), b:(1,1): all variance is between groups
        let g = [0.0, 0.0, 1.0, 1.0];
        assert!((correlation_ratio(&g, 2, &[0.0, 0.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        // equal group means: no variance between groups
        assert_eq!(correlation_ratio(&g, 2, &[0.0, 1.0, 1.0, 0.0]), Some(0.0));
        // group means 1 and 4 around 2.5: SSB = 4·1.5² = 9
        let v = [0.0, 2.0, 3.0, 5.0];
        let sst = 2.5f64.powi(2) + 0.5f64.powi(2) + 0.5f64.powi(2) + 2.5f64.powi(2);
        let expected = (9.0 / sst).sqrt();
        assert!((correlation_ratio(&g, 2, &v).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn matrix_methods_and_degenerate_pairs() {
        let t = Table::new(
            vec![
                ColumnSchema::numeric("x"),
                ColumnSchema::numeric("k"),
                ColumnSchema::categorical("c", ["a", "b"]),
            ],
            vec![
                vec![1.0, 2.0, 3.0, 4.0],
                vec![7.0; 4],
                vec![0.0, 0.0, 1.0, 1.0],
            ],
        )
        .unwrap();
        let m = mixed_correlation(&t);
        assert_eq!(m.methods[0][1], AssocMethod::Spearman);
        assert_eq!(m.methods[0][2], AssocMethod::Eta);
        assert_eq!(m.values[0][1], 0.0);
        assert_eq!(m.degenerate.len(), 2);
        for i in 0..3 {
            assert_eq!(m.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }

    #[test]
    fn cmd_two_numeric_columns() {
        let s = vec![ColumnSchema::numeric("x"), ColumnSchema::numeric("y")];
        let real = Table::new(s.clone(), vec![vec![1.0, 2.0, 3.0, 4.0]; 2]).unwrap();
        // y independent of x in rank terms: Spearman 0
        let synth = Table::new(s, vec![vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 1.0, 4.0, 2.0]]).unwrap();
        let m = mixed_correlation(&synth);
        assert!(m.values[0][1].abs() < 1e-12, "{}", m.values[0][1]);
        let d = cmd(&real, &synth).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-12, "{d}");
        assert_eq!(cmd(&real, &real).unwrap(), 0.0);
    }
}
