//! Splits, metrics, the multi-seed experiment protocol, the variant
//! comparison and the feature ablation.

mod experiment;
mod metrics;
mod report;
mod split;

pub use experiment::{
    ablate, ablation_name, compare_variants, run_experiment, run_seed, single_group_ablations, ExperimentResult,
    SeedRun,
};
pub use metrics::{
    auc_pairs, auc_trapezoid, confusion, metrics, roc_csv, roc_curve, ConfusionCounts, MetricsReport, RocPoint,
    UndefinedFlags,
};
pub use report::{ablation_csv, per_seed_csv, results_csv, results_table, RESULTS_HEADER};
pub use split::{split, Split, SplitSpec, SplitUnit};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{n} units are too few for a split with non-empty train, validation and test sets")]
    TooSmall { n: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("at least one seed is required")]
    NoSeeds,
    #[error("ablation needs at least one non-empty feature group")]
    EmptyGroups,
    #[error(transparent)]
    Model(#[from] ModelError),
}
