//! Conditional samplers and the autoregressive generation engine.
//!
//! A [`ConditionalSampler`] fits one model per target column given the
//! target's conditioning columns. The engine walks a
//! [`GenerationPlan`](crate::GenerationPlan) and draws every cell from its
//! own RNG stream keyed by (seed, target column, row), so output does not
//! depend on thread count.

mod bridge;
mod cart;
mod engine;
mod linear;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::seed::SeededRng;
use crate::table::ColumnSchema;

pub use bridge::{serve, BridgeClient, PROTOCOL_VERSION};
pub use cart::{fit_cart, CartParams, CartSampler, CartTree};
pub use engine::{generate, generate_with, GenerationRequest};
pub use linear::{fit_linear, LinearGaussianSampler, LinearModel};

/// One training column handed to a sampler.
#[derive(Clone, Copy, Debug)]
pub struct Feature<'a> {
    pub schema: &'a ColumnSchema,
    pub values: &'a [f64],
}

/// Training data for a single conditional: the target column and its
/// conditioning columns. At sampling time the context row lists feature
/// values in the same order as `features`.
#[derive(Clone, Debug)]
pub struct TrainingView<'a> {
    pub target: Feature<'a>,
    pub features: Vec<Feature<'a>>,
}

impl TrainingView<'_> {
    pub fn n_rows(&self) -> usize {
        self.target.values.len()
    }

    /// Feature positions sorted by column name.
    pub(crate) fn name_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.features.len()).collect();
        idx.sort_by(|&a, &b| self.features[a].schema.name.cmp(&self.features[b].schema.name));
        idx
    }
}

pub trait FittedConditional: Send + Sync {
    fn sample(&self, context: &[f64], rng: &mut SeededRng) -> f64;
}

pub trait ConditionalSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports_categorical(&self) -> bool;

    /// `permutations` is advisory. Built-in samplers identify features by
    /// name and ignore it.
    fn fit(&self, view: &TrainingView<'_>, permutations: usize)
        -> Result<Box<dyn FittedConditional>>;
}

/// Uniform resampling of the training values.
#[derive(Clone, Debug)]
pub struct Bootstrap {
    values: Vec<f64>,
}

impl Bootstrap {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "bootstrap of an empty column");
        Self { values }
    }
}

impl FittedConditional for Bootstrap {
    fn sample(&self, _context: &[f64], rng: &mut SeededRng) -> f64 {
        self.values[rng.random_range(0..self.values.len())]
    }
}

/// Serializable choice of built-in sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplerSpec {
    Cart {
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
    },
    Lingauss,
}

fn default_depth() -> usize {
    CartParams::default().max_depth
}

fn default_min_leaf() -> usize {
    CartParams::default().min_leaf
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec::Cart {
            max_depth: default_depth(),
            min_leaf: default_min_leaf(),
        }
    }
}

impl SamplerSpec {
    pub fn build(&self) -> Box<dyn ConditionalSampler> {
        match *self {
            SamplerSpec::Cart {
                max_depth,
                min_leaf,
            } => Box::new(CartSampler::new(CartParams {
                max_depth,
                min_leaf,
            })),
            SamplerSpec::Lingauss => Box::new(LinearGaussianSampler::default()),
        }
    }
}

impl std::str::FromStr for SamplerSpec {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cart" => Ok(SamplerSpec::default()),
            "lingauss" => Ok(SamplerSpec::Lingauss),
            other => Err(crate::Error::InvalidInput(format!("unknown sampler {other:?}"))),
        }
    }
}

/// A built-in sampler driven by the local engine, or a bridge process that
/// generates whole tables. Bridge requests are serialized.
pub enum Generator {
    Builtin(Box<dyn ConditionalSampler>),
    Bridge(std::sync::Mutex<BridgeClient>),
}

impl Generator {
    pub fn builtin(spec: &SamplerSpec) -> Self {
        Generator::Builtin(spec.build())
    }

    pub fn bridge(command: &str) -> Result<Self> {
        Ok(Generator::Bridge(std::sync::Mutex::new(BridgeClient::spawn(command)?)))
    }

    pub fn generate(&self, req: &GenerationRequest<'_>) -> Result<crate::Table> {
        match self {
            Generator::Builtin(s) => generate(s.as_ref(), req),
            Generator::Bridge(client) => client
                .lock()
                .map_err(|_| crate::Error::Bridge("bridge client poisoned".into()))?
                .generate(req),
        }
    }
}
