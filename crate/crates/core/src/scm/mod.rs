//! Structural causal models.
//!
//! Equations are restricted to Gaussian roots, linear-Gaussian nodes and
//! categorical conditional probability tables; interventions replace an
//! equation with a constant and cut the incoming edges.

mod model;

pub use model::{
    analytic_ate, builtin, builtin_collider, interventional_arms, Equation, Intervention,
    InterventionValue, Scm, ScmFile,
};
