//! Run configuration. Values come from built-in defaults, then an optional
//! JSON file, then command-line flags; later sources win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use prosact_core::corpus::{SplitName, TagMap};
use prosact_core::eval::{ExperimentConfig, TaskSpec};
use prosact_core::fusion::default_grid;
use prosact_core::lm::{LmConfig, DEFAULT_ACOUSTIC_SCALE};
use prosact_core::trees::{SweepMode, TreeConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
    /// Tag-to-class map replacing the built-in one.
    pub tags: Option<PathBuf>,
    /// Built-in task name.
    pub task: String,
    /// Custom task definition; takes precedence over `task`.
    pub task_file: Option<PathBuf>,
    pub tree: TreeConfig,
    pub lm: LmConfig,
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    /// Scale on natural-log acoustic scores in N-best sums. The default of
    /// 1/12 is a common recognizer setting, not a tuned value.
    pub acoustic_scale: f64,
    pub sweeps: Vec<SweepMode>,
    pub train_split: SplitName,
    pub test_split: SplitName,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: None,
            out_dir: PathBuf::from("out"),
            tags: None,
            task: "seven-way".into(),
            task_file: None,
            tree: TreeConfig::default(),
            lm: LmConfig::default(),
            lambda: 1.0,
            lambda_grid: default_grid(),
            acoustic_scale: DEFAULT_ACOUSTIC_SCALE,
            sweeps: vec![SweepMode::LeaveOneOut, SweepMode::LeaveOneIn],
            train_split: SplitName::TRN,
            test_split: SplitName::HLD,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn tag_map(&self) -> Result<TagMap> {
        match &self.tags {
            Some(p) => TagMap::from_json_file(p).with_context(|| format!("loading tag map {}", p.display())),
            None => Ok(TagMap::builtin()),
        }
    }

    pub fn task_spec(&self, tags: &TagMap) -> Result<TaskSpec> {
        Ok(match &self.task_file {
            Some(p) => TaskSpec::from_json_file(p).with_context(|| format!("loading task {}", p.display()))?,
            None => TaskSpec::builtin(&self.task, tags)?,
        })
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            tree: self.tree.clone(),
            lm: self.lm.clone(),
            lambda_grid: self.lambda_grid.clone(),
            acoustic_scale: self.acoustic_scale,
            sweeps: self.sweeps.clone(),
            train_split: self.train_split,
            test_split: self.test_split,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 9, "tree": {"min_leaf": 5}, "sweeps": ["leave-two-in"]}"#).unwrap();
        let c = RunConfig::load(Some(&p)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.tree.min_leaf, 5);
        assert_eq!(c.tree.folds, 10);
        assert_eq!(c.sweeps, vec![SweepMode::LeaveTwoIn]);
        assert_eq!(c.task, "seven-way");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"sede": 9}"#).unwrap();
        assert!(RunConfig::load(Some(&p)).is_err());
    }
}
