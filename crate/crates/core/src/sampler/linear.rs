use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Bootstrap, ConditionalSampler, FittedConditional, TrainingView};
use crate::error::{Error, Result};
use crate::seed::SeededRng;

/// Least squares with intercept plus an empirical residual bootstrap.
/// Categorical features enter as dummies for every level but the first.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearGaussianSampler;

#[derive(Clone, Debug)]
enum Encoding {
    Numeric(usize),
    Dummy(usize, usize),
}

#[derive(Clone, Debug)]
pub struct LinearModel {
    intercept: f64,
    coefficients: Vec<f64>,
    encoding: Vec<Encoding>,
    residuals: Vec<f64>,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// Coefficients on the encoded design, features sorted by name.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    fn predict(&self, context: &[f64]) -> f64 {
        self.intercept
            + self
                .encoding
                .iter()
                .zip(&self.coefficients)
                .map(|(e, b)| b * encode(e, context))
                .sum::<f64>()
    }
}

fn encode(e: &Encoding, row: &[f64]) -> f64 {
    match *e {
        Encoding::Numeric(f) => row[f],
        Encoding::Dummy(f, level) => f64::from(u8::from(row[f] as usize == level)),
    }
}

impl FittedConditional for LinearModel {
    fn sample(&self, context: &[f64], rng: &mut SeededRng) -> f64 {
        let r = self.residuals[rng.random_range(0..self.residuals.len())];
        self.predict(context) + r
    }
}

pub fn fit_linear(view: &TrainingView<'_>) -> Result<LinearModel> {
    if view.target.schema.is_categorical() {
        return Err(Error::UnsupportedTarget(view.target.schema.name.clone()));
    }
    let n = view.n_rows();
    if n == 0 {
        return Err(Error::InsufficientRows {
            needed: 1,
            available: 0,
        });
    }
    let mut encoding = Vec::new();
    for f in view.name_order() {
        let s = view.features[f].schema;
        if s.is_categorical() {
            encoding.extend((1..s.n_categories()).map(|l| Encoding::Dummy(f, l)));
        } else {
            encoding.push(Encoding::Numeric(f));
        }
    }
    let p = encoding.len() + 1;
    let y = DVector::from_column_slice(view.target.values);
    let x = DMatrix::from_fn(n, p, |r, c| {
        if c == 0 {
            1.0
        } else {
            match encoding[c - 1] {
                Encoding::Numeric(f) => view.features[f].values[r],
                Encoding::Dummy(f, l) => f64::from(u8::from(view.features[f].values[r] as usize == l)),
            }
        }
    });
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let beta = match xtx.clone().cholesky() {
        Some(ch) if n >= p && well_conditioned(&xtx) => ch.solve(&xty),
        _ => {
            let lambda = 1e-8 * xtx.trace() / p as f64;
            let ridged = &xtx + DMatrix::identity(p, p) * lambda.max(1e-300);
            match ridged.clone().cholesky() {
                Some(ch) => ch.solve(&xty),
                None => ridged
                    .svd(true, true)
                    .solve(&xty, 1e-12)
                    .map_err(|e| Error::Degenerate(e.to_string()))?,
            }
        }
    };
    let fitted = &x * &beta;
    let residuals = (0..n).map(|r| y[r] - fitted[r]).collect();
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        encoding,
        residuals,
    })
}

fn well_conditioned(xtx: &DMatrix<f64>) -> bool {
    let sv = xtx.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min > max * 1e-13
}

impl ConditionalSampler for LinearGaussianSampler {
    fn name(&self) -> &'static str {
        "lingauss"
    }

    fn supports_categorical(&self) -> bool {
        false
    }

    fn fit(
        &self,
        view: &TrainingView<'_>,
        _permutations: usize,
    ) -> Result<Box<dyn FittedConditional>> {
        if view.target.schema.is_categorical() {
            return Err(Error::UnsupportedTarget(view.target.schema.name.clone()));
        }
        if view.features.is_empty() {
            return Ok(Box::new(Bootstrap::new(view.target.values.to_vec())));
        }
        Ok(Box::new(fit_linear(view)?))
    }
}
