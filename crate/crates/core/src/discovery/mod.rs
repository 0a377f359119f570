//! Constraint-based structure discovery.
//!
//! [`pc_stable`] learns a [`Cpdag`](crate::Cpdag) from data with Fisher-Z,
//! G², or a hybrid dispatch that quantile-bins numeric columns for mixed
//! pairs. [`graph_quality`] scores a learned graph against a known DAG.

mod ci;
mod meek;
mod pc;
mod quality;

pub use ci::{fisher_z, g2_test, CiData, CiTestKind, CiTestResult, HYBRID_BINS};
pub use meek::meek_closure;
pub use pc::{pc_stable, PcConfig, PcOutput};
pub use quality::{graph_quality, GraphQuality};
