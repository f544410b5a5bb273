//! Entropy-split classification trees with cross-validated pruning,
//! posterior leaves and feature-usage analysis.

mod dataset;
mod grow;
mod model;
mod prune;
mod sweep;
mod usage;

pub use dataset::{Column, Dataset, SchemaEntry, Value};
pub use grow::{grow, TreeConfig, MAX_ENUMERATED_LEVELS};
pub use model::{Node, Split, Test, TrainingMeta, TreeModel, MODEL_VERSION};
pub use prune::{
    apply, fold_assignment, prune_cv, prune_cv_report, pruning_sequence, train, PruneReport, PruneStep, KT_ALPHA,
};
pub use sweep::{feature_sweep, sweep_subsets, SweepMode, SweepRun};
pub use usage::{usage, UsageReport};

/// Hard decision from a posterior: the highest probability, first class on ties.
pub fn decide(posterior: &[f64]) -> usize {
    crate::numeric::argmax(posterior).unwrap_or(0)
}
