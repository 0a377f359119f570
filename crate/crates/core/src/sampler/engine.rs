use super::{Bootstrap, ConditionalSampler, Feature, FittedConditional, TrainingView};
use crate::error::{Error, Result};
use crate::graph::GenerationPlan;
use crate::par;
use crate::seed::{rng_at, tag};
use crate::table::Table;

#[derive(Clone, Copy, Debug)]
pub struct GenerationRequest<'a> {
    pub train: &'a Table,
    pub plan: &'a GenerationPlan,
    pub n_samples: usize,
    pub seed: u64,
    pub permutations: usize,
}

impl GenerationRequest<'_> {
    /// Checks the request and returns, for every plan position, the schema
    /// index of the target and of its conditioning columns.
    pub(crate) fn resolve(&self) -> Result<Vec<(usize, Vec<usize>)>> {
        if self.train.n_rows() == 0 {
            return Err(Error::InsufficientRows {
                needed: 1,
                available: 0,
            });
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidInput("n_samples must be at least 1".into()));
        }
        self.plan.validate()?;
        let mut order: Vec<&str> = self.plan.order.iter().map(String::as_str).collect();
        let mut names: Vec<&str> = self.train.names().collect();
        order.sort_unstable();
        names.sort_unstable();
        if order != names {
            return Err(Error::InvalidPlan(
                "plan nodes differ from the training columns".into(),
            ));
        }
        self.plan
            .order
            .iter()
            .zip(&self.plan.conditioning)
            .map(|(target, cond)| {
                let t = self.train.index_of(target)?;
                let c = cond
                    .iter()
                    .map(|c| self.train.index_of(c))
                    .collect::<Result<Vec<_>>>()?;
                Ok((t, c))
            })
            .collect()
    }
}

/// Autoregressive generation with the given sampler. Columns are returned
/// in the training schema order whatever the plan order.
pub fn generate(sampler: &dyn ConditionalSampler, req: &GenerationRequest<'_>) -> Result<Table> {
    generate_with(req, |view| {
        let target = view.target.schema;
        if target.is_categorical() && !sampler.supports_categorical() {
            return Err(Error::UnsupportedTarget(target.name.clone()));
        }
        if view.features.is_empty() {
            return Ok(Box::new(Bootstrap::new(view.target.values.to_vec())));
        }
        sampler.fit(view, req.permutations)
    })
}

/// Generation loop with a caller-supplied fitting step.
pub fn generate_with<F>(req: &GenerationRequest<'_>, mut fit: F) -> Result<Table>
where
    F: FnMut(&TrainingView<'_>) -> Result<Box<dyn FittedConditional>>,
{
    let steps = req.resolve()?;
    let train = req.train;
    let schema = train.schema();
    let mut out: Vec<Option<Vec<f64>>> = vec![None; train.n_cols()];
    for (target, cond) in steps {
        let view = TrainingView {
            target: Feature {
                schema: &schema[target],
                values: train.column_at(target),
            },
            features: cond
                .iter()
                .map(|&c| Feature {
                    schema: &schema[c],
                    values: train.column_at(c),
                })
                .collect(),
        };
        let model = fit(&view)?;
        let context: Vec<&[f64]> = cond
            .iter()
            .map(|&c| {
                out[c].as_deref().ok_or_else(|| {
                    Error::InvalidPlan(format!(
                        "{} conditions on {} before it is generated",
                        schema[target].name, schema[c].name
                    ))
                })
            })
            .collect::<Result<_>>()?;
        let seed = req.seed;
        let column = par::map_range(req.n_samples, |i| {
            let row: Vec<f64> = context.iter().map(|c| c[i]).collect();
            let mut rng = rng_at(seed, &[tag::GENERATE, target as u64, i as u64]);
            model.sample(&row, &mut rng)
        });
        out[target] = Some(column);
    }
    let columns = out.into_iter().map(|c| c.expect("every column generated")).collect();
    Table::new(schema.to_vec(), columns)
}
