use serde::{Deserialize, Serialize};

use super::dataset::{Column, Dataset};
use super::model::{Node, Split, Test, TrainingMeta, TreeModel};
use crate::error::{Error, Result};

/// Categorical features with at most this many levels at a node have every
/// bipartition tried; larger ones are ordered by first-class share.
pub const MAX_ENUMERATED_LEVELS: usize = 10;

const GAIN_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub min_leaf: usize,
    pub folds: usize,
    pub seed: u64,
    pub max_depth: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            min_leaf: 10,
            folds: 10,
            seed: 0,
            max_depth: None,
        }
    }
}

/// `sum c·log2 c` over class counts; `n·H = n·log2 n − plogp(counts)`.
fn clogc(c: f64) -> f64 {
    if c > 0.0 {
        c * c.log2()
    } else {
        0.0
    }
}

/// Total entropy mass `n·H(counts)` in bits.
pub(crate) fn entropy_mass(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    (clogc(n) - counts.iter().map(|&c| clogc(c)).sum::<f64>()).max(0.0)
}

struct Candidate {
    cost: f64,
    feature: usize,
    test: Test,
    missing_left: bool,
}

/// Grows an unpruned tree on all features of `ds`.
pub fn grow(ds: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot grow a tree on an empty dataset"));
    }
    if ds.num_classes() == 0 {
        return Err(Error::invalid("dataset has no classes"));
    }
    let counts = ds.class_counts();
    let present: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    if present.windows(2).any(|w| w[0] != w[1]) {
        log::warn!("growing a tree on class-imbalanced data: {counts:?}");
    }
    let mut model = TreeModel {
        classes: ds.classes.clone(),
        schema: ds.schema.clone(),
        meta: TrainingMeta {
            seed: cfg.seed,
            folds: cfg.folds,
            min_leaf: cfg.min_leaf,
            pruned: false,
        },
        nodes: Vec::new(),
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    grow_node(ds, cfg, rows, 0, &mut model.nodes);
    Ok(model)
}

fn grow_node(ds: &Dataset, cfg: &TreeConfig, rows: Vec<usize>, depth: usize, nodes: &mut Vec<Node>) -> usize {
    let k = ds.num_classes();
    let mut counts = vec![0.0; k];
    for &r in &rows {
        counts[ds.labels[r]] += 1.0;
    }
    let idx = nodes.len();
    let parent_cost = entropy_mass(&counts);
    nodes.push(Node { counts, split: None });

    let min_leaf = cfg.min_leaf.max(1);
    if rows.len() < 2 * min_leaf || parent_cost <= GAIN_EPS || cfg.max_depth.is_some_and(|d| depth >= d) {
        return idx;
    }
    let Some(best) = best_split(ds, &rows, min_leaf) else {
        return idx;
    };
    if best.cost >= parent_cost - GAIN_EPS {
        return idx;
    }
    let split = Split {
        feature: best.feature,
        test: best.test,
        missing_left: best.missing_left,
        left: 0,
        right: 0,
    };
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&r| super::model::goes_left(&split, ds.value(split.feature, r)));
    let left = grow_node(ds, cfg, left_rows, depth + 1, nodes);
    let right = grow_node(ds, cfg, right_rows, depth + 1, nodes);
    nodes[idx].split = Some(Split { left, right, ..split });
    idx
}

/// Best admissible split over all features; ties keep the earliest feature
/// and, within a feature, the lowest threshold.
fn best_split(ds: &Dataset, rows: &[usize], min_leaf: usize) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for (f, col) in ds.columns.iter().enumerate() {
        let cand = match col {
            Column::Numeric(values) => numeric_split(values, &ds.labels, ds.num_classes(), rows, min_leaf),
            Column::Categorical { levels, codes } => {
                categorical_split(levels, codes, &ds.labels, ds.num_classes(), rows, min_leaf)
            }
        };
        if let Some((cost, test, missing_left)) = cand {
            if best.as_ref().is_none_or(|b| cost < b.cost - GAIN_EPS) {
                best = Some(Candidate {
                    cost,
                    feature: f,
                    test,
                    missing_left,
                });
            }
        }
    }
    best
}

/// Cost of a bipartition with missing rows sent to the heavier side (left on
/// ties). Returns `None` when a child would be smaller than `min_leaf`.
fn partition_cost(left: &[f64], right: &[f64], missing: &[f64], min_leaf: usize) -> Option<(f64, bool)> {
    let nl: f64 = left.iter().sum();
    let nr: f64 = right.iter().sum();
    let nm: f64 = missing.iter().sum();
    let missing_left = nl >= nr;
    let (tl, tr) = if missing_left { (nl + nm, nr) } else { (nl, nr + nm) };
    if tl < min_leaf as f64 || tr < min_leaf as f64 {
        return None;
    }
    let cost = if nm == 0.0 {
        entropy_mass(left) + entropy_mass(right)
    } else if missing_left {
        let l: Vec<f64> = left.iter().zip(missing).map(|(a, b)| a + b).collect();
        entropy_mass(&l) + entropy_mass(right)
    } else {
        let r: Vec<f64> = right.iter().zip(missing).map(|(a, b)| a + b).collect();
        entropy_mass(left) + entropy_mass(&r)
    };
    Some((cost, missing_left))
}

fn numeric_split(
    values: &[Option<f64>],
    labels: &[usize],
    k: usize,
    rows: &[usize],
    min_leaf: usize,
) -> Option<(f64, Test, bool)> {
    let mut missing = vec![0.0; k];
    let mut pts: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &r in rows {
        match values[r] {
            Some(v) => pts.push((v, labels[r])),
            None => missing[labels[r]] += 1.0,
        }
    }
    if pts.len() < 2 {
        return None;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut right = vec![0.0; k];
    for &(_, l) in &pts {
        right[l] += 1.0;
    }
    let mut left = vec![0.0; k];
    let mut best: Option<(f64, f64, bool)> = None;
    for i in 0..pts.len() - 1 {
        let (v, l) = pts[i];
        left[l] += 1.0;
        right[l] -= 1.0;
        let next = pts[i + 1].0;
        if next <= v {
            continue;
        }
        if let Some((cost, ml)) = partition_cost(&left, &right, &missing, min_leaf) {
            if best.is_none_or(|b| cost < b.0 - GAIN_EPS) {
                let mut t = v + (next - v) / 2.0;
                if t <= v {
                    t = next;
                }
                best = Some((cost, t, ml));
            }
        }
    }
    best.map(|(c, t, ml)| (c, Test::Below(t), ml))
}

fn categorical_split(
    levels: &[String],
    codes: &[Option<u32>],
    labels: &[usize],
    k: usize,
    rows: &[usize],
    min_leaf: usize,
) -> Option<(f64, Test, bool)> {
    let mut missing = vec![0.0; k];
    let mut by_level = vec![vec![0.0; k]; levels.len()];
    for &r in rows {
        match codes[r] {
            Some(c) => by_level[c as usize][labels[r]] += 1.0,
            None => missing[labels[r]] += 1.0,
        }
    }
    let present: Vec<usize> = (0..levels.len())
        .filter(|&l| by_level[l].iter().sum::<f64>() > 0.0)
        .collect();
    if present.len() < 2 {
        return None;
    }
    let eval = |members: &[usize]| -> Option<(f64, bool)> {
        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];
        for &l in &present {
            let target = if members.contains(&l) { &mut left } else { &mut right };
            for (t, c) in target.iter_mut().zip(&by_level[l]) {
                *t += c;
            }
        }
        partition_cost(&left, &right, &missing, min_leaf)
    };
    let mut best: Option<(f64, Vec<usize>, bool)> = None;
    let mut consider = |members: Vec<usize>| {
        if let Some((cost, ml)) = eval(&members) {
            if best.as_ref().is_none_or(|b| cost < b.0 - GAIN_EPS) {
                best = Some((cost, members, ml));
            }
        }
    };
    let p = present.len();
    if p <= MAX_ENUMERATED_LEVELS {
        // the last present level always stays right, so each bipartition is seen once
        for mask in 1u32..(1u32 << (p - 1)) {
            consider((0..p - 1).filter(|&i| mask & (1 << i) != 0).map(|i| present[i]).collect());
        }
    } else {
        let mut ordered = present.clone();
        let share = |l: usize| {
            let n: f64 = by_level[l].iter().sum();
            by_level[l][0] / n
        };
        ordered.sort_by(|&a, &b| share(a).total_cmp(&share(b)).then(a.cmp(&b)));
        for cut in 1..p {
            consider(ordered[..cut].to_vec());
        }
    }
    best.map(|(cost, members, ml)| {
        let mut names: Vec<String> = members.iter().map(|&l| levels[l].clone()).collect();
        names.sort();
        (cost, Test::In(names), ml)
    })
}
