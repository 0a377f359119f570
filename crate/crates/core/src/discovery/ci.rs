use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::metrics::{bin_codes, quantile_edges};
use crate::table::Table;

/// Quantile bins used for numeric columns in G² tests.
pub const HYBRID_BINS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiTestKind {
    FisherZ,
    G2,
    /// Fisher-Z when every variable involved is numeric, otherwise G² with
    /// numeric variables binned.
    #[default]
    Hybrid,
}

impl std::str::FromStr for CiTestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fisher-z" => Ok(CiTestKind::FisherZ),
            "g2" => Ok(CiTestKind::G2),
            "hybrid" => Ok(CiTestKind::Hybrid),
            other => Err(Error::InvalidInput(format!("unknown CI test {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub independent: bool,
    /// Degrees of freedom for G²; absent for Fisher-Z.
    pub df: Option<f64>,
    /// Strata containing a cell with expected count below 5.
    pub sparse_strata: usize,
}

/// Column views prepared once for repeated CI tests: raw values for
/// Fisher-Z and discrete codes for G².
#[derive(Clone, Debug)]
pub struct CiData {
    values: Vec<Vec<f64>>,
    codes: Vec<Vec<usize>>,
    levels: Vec<usize>,
    numeric: Vec<bool>,
}

impl CiData {
    pub fn new(t: &Table) -> Self {
        let mut codes = Vec::new();
        let mut levels = Vec::new();
        let mut numeric = Vec::new();
        for (c, col) in t.schema().iter().enumerate() {
            let v = t.column_at(c);
            if col.is_categorical() {
                codes.push(v.iter().map(|&x| x as usize).collect());
                levels.push(col.n_categories());
                numeric.push(false);
            } else {
                let edges = quantile_edges(v, HYBRID_BINS);
                levels.push(edges.len() + 1);
                codes.push(bin_codes(v, &edges));
                numeric.push(true);
            }
        }
        Self {
            values: t.columns().to_vec(),
            codes,
            levels,
            numeric,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.values.len()
    }

    pub fn is_numeric(&self, c: usize) -> bool {
        self.numeric[c]
    }

    /// Same data with columns in `order`.
    pub(crate) fn permuted(&self, order: &[usize]) -> Self {
        Self {
            values: order.iter().map(|&c| self.values[c].clone()).collect(),
            codes: order.iter().map(|&c| self.codes[c].clone()).collect(),
            levels: order.iter().map(|&c| self.levels[c]).collect(),
            numeric: order.iter().map(|&c| self.numeric[c]).collect(),
        }
    }

    pub fn test(&self, kind: CiTestKind, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult> {
        let all_numeric = [x, y].iter().chain(z).all(|&c| self.numeric[c]);
        match kind {
            CiTestKind::FisherZ if !all_numeric => Err(Error::InvalidInput(
                "Fisher-Z needs numeric variables".into(),
            )),
            CiTestKind::FisherZ => self.fisher_z(x, y, z, alpha),
            CiTestKind::Hybrid if all_numeric => self.fisher_z(x, y, z, alpha),
            CiTestKind::G2 | CiTestKind::Hybrid => self.g2(x, y, z, alpha),
        }
    }

    fn fisher_z(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult> {
        let zs: Vec<&[f64]> = z.iter().map(|&c| self.values[c].as_slice()).collect();
        fisher_z_columns(&self.values[x], &self.values[y], &zs, alpha)
    }

    fn g2(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult> {
        let zs: Vec<(&[usize], usize)> = z.iter().map(|&c| (self.codes[c].as_slice(), self.levels[c])).collect();
        g2_codes(
            (&self.codes[x], self.levels[x]),
            (&self.codes[y], self.levels[y]),
            &zs,
            alpha,
        )
    }
}

/// Fisher-Z test of `x ⟂ y | z` on named numeric columns.
pub fn fisher_z<S: AsRef<str>>(t: &Table, x: &str, y: &str, z: &[S], alpha: f64) -> Result<CiTestResult> {
    let col = |name: &str| -> Result<&[f64]> {
        let i = t.index_of(name)?;
        if t.schema()[i].is_categorical() {
            return Err(Error::InvalidInput(format!("{name:?} is categorical")));
        }
        Ok(t.column_at(i))
    };
    let zs = z.iter().map(|n| col(n.as_ref())).collect::<Result<Vec<_>>>()?;
    fisher_z_columns(col(x)?, col(y)?, &zs, alpha)
}

/// G² test of `x ⟂ y | z` on named columns; numeric columns are binned.
pub fn g2_test<S: AsRef<str>>(t: &Table, x: &str, y: &str, z: &[S], alpha: f64) -> Result<CiTestResult> {
    let data = CiData::new(t);
    let zi = z.iter().map(|n| t.index_of(n.as_ref())).collect::<Result<Vec<_>>>()?;
    data.g2(t.index_of(x)?, t.index_of(y)?, &zi, alpha)
}

fn residuals(target: &[f64], z: &[&[f64]]) -> Result<Vec<f64>> {
    let n = target.len();
    let p = z.len() + 1;
    let design = DMatrix::from_fn(n, p, |r, c| if c == 0 { 1.0 } else { z[c - 1][r] });
    let y = DVector::from_column_slice(target);
    let xtx = design.transpose() * &design;
    let xty = design.transpose() * &y;
    let beta = match xtx.clone().cholesky() {
        Some(ch) => ch.solve(&xty),
        None => xtx
            .svd(true, true)
            .solve(&xty, 1e-12)
            .map_err(|e| Error::Degenerate(e.to_string()))?,
    };
    let fitted = &design * beta;
    Ok((0..n).map(|i| target[i] - fitted[i]).collect())
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - m).collect()
}

fn fisher_z_columns(x: &[f64], y: &[f64], z: &[&[f64]], alpha: f64) -> Result<CiTestResult> {
    let n = x.len();
    if n < z.len() + 4 {
        return Err(Error::InsufficientRows {
            needed: z.len() + 4,
            available: n,
        });
    }
    let (rx, ry) = if z.is_empty() {
        (centered(x), centered(y))
    } else {
        (residuals(x, z)?, residuals(y, z)?)
    };
    let sxx: f64 = rx.iter().map(|v| v * v).sum();
    let syy: f64 = ry.iter().map(|v| v * v).sum();
    let scale = |v: &[f64]| centered(v).iter().map(|d| d * d).sum::<f64>();
    if sxx <= 1e-24 * scale(x) || syy <= 1e-24 * scale(y) || sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("constant residual in Fisher-Z".into()));
    }
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0 + 1e-15, 1.0 - 1e-15);
    let statistic = ((n - z.len() - 3) as f64).sqrt() * r.atanh();
    let p_value = (2.0 * Normal::standard().sf(statistic.abs())).min(1.0);
    Ok(CiTestResult {
        statistic,
        p_value,
        independent: p_value > alpha,
        df: None,
        sparse_strata: 0,
    })
}

fn g2_codes(
    x: (&[usize], usize),
    y: (&[usize], usize),
    z: &[(&[usize], usize)],
    alpha: f64,
) -> Result<CiTestResult> {
    let (kx, ky) = (x.1, y.1);
    let mut strata: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in 0..x.0.len() {
        let key = z.iter().fold(0usize, |acc, &(codes, k)| acc * k + codes[r]);
        strata.entry(key).or_insert_with(|| vec![0.0; kx * ky])[x.0[r] * ky + y.0[r]] += 1.0;
    }
    let mut g2 = 0.0;
    let mut df = 0.0;
    let mut sparse = 0;
    for counts in strata.values() {
        let n: f64 = counts.iter().sum();
        let rows: Vec<f64> = (0..kx).map(|i| counts[i * ky..(i + 1) * ky].iter().sum()).collect();
        let cols: Vec<f64> = (0..ky).map(|j| (0..kx).map(|i| counts[i * ky + j]).sum()).collect();
        let nr = rows.iter().filter(|&&v| v > 0.0).count();
        let nc = cols.iter().filter(|&&v| v > 0.0).count();
        df += (nr.saturating_sub(1) * nc.saturating_sub(1)) as f64;
        let mut thin = false;
        for i in 0..kx {
            for j in 0..ky {
                let expected = rows[i] * cols[j] / n;
                if expected == 0.0 {
                    continue;
                }
                if expected < 5.0 {
                    thin = true;
                }
                let o = counts[i * ky + j];
                if o > 0.0 {
                    g2 += 2.0 * o * (o / expected).ln();
                }
            }
        }
        sparse += usize::from(thin);
    }
    if df == 0.0 {
        return Err(Error::Degenerate("G² has zero degrees of freedom".into()));
    }
    let g2 = g2.max(0.0);
    let p_value = ChiSquared::new(df)
        .map_err(|e| Error::Degenerate(e.to_string()))?
        .sf(g2)
        .clamp(0.0, 1.0);
    Ok(CiTestResult {
        statistic: g2,
        p_value,
        independent: p_value > alpha,
        df: Some(df),
        sparse_strata: sparse,
    })
}
