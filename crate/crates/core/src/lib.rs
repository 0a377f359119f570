//! Causally-conditioned autoregressive generation of synthetic tabular data.
//!
//! The crate is organised around the life cycle of one experiment:
//!
//! - [`table`]: mixed-type tables, schemas, CSV I/O and seeded splits.
//! - [`graph`]: DAGs, CPDAGs, orderings and [`graph::GenerationPlan`]s
//!   (vanilla prefix, DAG-parent and CPDAG-hybrid conditioning).
//! - [`scm`]: linear-Gaussian / categorical structural causal models with
//!   do-interventions and analytic effect oracles.
//! - [`sampler`]: the autoregressive engine and its conditional samplers.
//! - [`discovery`]: CI tests, PC-stable, Meek closure, graph quality.
//! - [`metrics`]: CMD, k-MTVD, Gower/NNAA, spurious correlations, ATE.
//! - [`stats`]: Wilcoxon-Pratt, Holm, Hodges-Lehmann, bootstrap CIs.
//! - [`experiment`]: the quality / ATE / order-sensitivity protocols.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iteration otherwise. All
//! randomness flows from explicit seeds through [`seed`], so results do not
//! depend on the thread count.

pub mod discovery;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod par;
pub mod sampler;
pub mod scm;
pub mod seed;
pub mod stats;
pub mod table;

pub use error::{Error, Result};
pub use graph::{CausalDag, Cpdag, GenerationPlan, Strategy};
pub use scm::Scm;
pub use table::{ColumnKind, ColumnSchema, Table};
