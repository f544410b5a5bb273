use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::grow::TreeConfig;
use super::model::TreeModel;
use super::prune::train;
use crate::error::{Error, Result};
use crate::prosody::FeatureGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    LeaveOneOut,
    LeaveOneIn,
    LeaveTwoIn,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leave-one-out" => Ok(SweepMode::LeaveOneOut),
            "leave-one-in" => Ok(SweepMode::LeaveOneIn),
            "leave-two-in" => Ok(SweepMode::LeaveTwoIn),
            _ => Err(Error::invalid(format!("unknown sweep mode {s:?}"))),
        }
    }
}

/// One tree of a sweep. `name` is `all`, `-F0` (group left out), `+F0`
/// (group alone) or `+Dur+F0` (pair alone).
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub name: String,
    pub groups: Vec<FeatureGroup>,
    pub model: TreeModel,
}

/// Feature-group subsets visited by a sweep, starting with all groups.
pub fn sweep_subsets(groups: &[FeatureGroup], mode: SweepMode) -> Vec<(String, Vec<FeatureGroup>)> {
    let mut out = vec![("all".to_string(), groups.to_vec())];
    match mode {
        SweepMode::LeaveOneOut => {
            for g in groups {
                let rest = groups.iter().copied().filter(|x| x != g).collect();
                out.push((format!("-{}", g.short()), rest));
            }
        }
        SweepMode::LeaveOneIn => {
            for g in groups {
                out.push((format!("+{}", g.short()), vec![*g]));
            }
        }
        SweepMode::LeaveTwoIn => {
            for (i, a) in groups.iter().enumerate() {
                for b in &groups[i + 1..] {
                    out.push((format!("+{}+{}", a.short(), b.short()), vec![*a, *b]));
                }
            }
        }
    }
    out
}

/// Trains one pruned tree per group subset, in parallel. Only groups present
/// in the dataset schema take part.
pub fn feature_sweep(ds: &Dataset, mode: SweepMode, cfg: &TreeConfig) -> Result<Vec<SweepRun>> {
    let by_group = ds.groups();
    let groups: Vec<FeatureGroup> = by_group.keys().copied().collect();
    let subsets = sweep_subsets(&groups, mode);
    subsets
        .into_par_iter()
        .map(|(name, gs)| {
            let keep: BTreeSet<String> = gs.iter().flat_map(|g| by_group[g].iter().cloned()).collect();
            if keep.is_empty() {
                return Err(Error::invalid(format!("sweep run {name} has no features left")));
            }
            let sub = ds.select_features(&keep)?;
            let model = train(&sub, cfg)?;
            Ok(SweepRun {
                name,
                groups: gs,
                model,
            })
        })
        .collect()
}
