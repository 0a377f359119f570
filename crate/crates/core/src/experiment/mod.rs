//! Experiment orchestration: seeded resampling, generation under several
//! strategies, metric records, paired comparisons and order sensitivity.
//!
//! Every (train size, iteration) cell owns seeds derived from the master
//! seed, so results are identical for any thread count.

mod compare;
mod config;
mod records;
mod run;

pub use compare::{
    aggregate_and_compare, run_sensitivity, sensitivity_from_records, ComparisonRow, SensitivityCell,
};
pub use config::{
    AteSpec, Comparison, DatasetSource, ExperimentConfig, ExperimentKind, GraphSource, HolmFamily, Ordering,
    StrategySpec,
};
pub use records::{
    read_records, write_graph_quality, write_records, GraphQualityRecord, RunRecord,
};
pub use run::{run_ate_experiment, run_experiment, run_quality_experiment, Dataset, ExperimentOutput};
