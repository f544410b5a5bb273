//! Metrics, significance tests, task definitions and the experiment driver.

pub mod experiment;
pub mod metrics;
pub mod reference;
pub mod stats;
pub mod tables;
pub mod task;

pub use experiment::{run_task, task_mixtures, Condition, ExperimentConfig, SweepRow, TaskReport, SIGNIFICANCE};
pub use metrics::{accuracy, confusion, confusion_csv, efficiency, efficiency_leaf, evaluate, uniform, EvalResult};
pub use reference::{reference, Reference, REFERENCES};
pub use stats::{binomial_test, kappa, sign_test, sign_test_counts, SignTestResult};
pub use task::{TaskClass, TaskSpec, BUILTIN_TASKS};
pub use tables::{
    decision_indices, decisions_csv, join_scores, read_decisions, read_labels, task_dataset, ClassRow, ClassScores,
    Decision,
};
