//! Tenfold cross-validated pruning.
//!
//! The full tree yields a nested sequence of subtrees by weakest-link
//! collapsing, with resubstitution entropy as the cost. Each fold grows its
//! own tree on the remaining data and is pruned at the same complexity
//! levels; held-out cross-entropy summed over folds picks the level. Leaf
//! posteriors used for held-out scoring are Krichevsky-Trofimov estimates so
//! an unseen class never costs infinite bits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dataset::Dataset;
use super::grow::{entropy_mass, grow, TreeConfig};
use super::model::{Node, TreeModel};
use crate::error::{Error, Result};

/// Pseudo-count added per class when scoring held-out points.
pub const KT_ALPHA: f64 = 0.5;

const COST_EPS: f64 = 1e-9;

/// One element of the pruning sequence: every node marked collapsed is a leaf.
#[derive(Debug, Clone)]
pub struct PruneStep {
    pub alpha: f64,
    pub collapsed: Vec<bool>,
}

/// Weakest-link sequence from the full tree (first step, alpha 0) down to the
/// root alone (last step).
pub fn pruning_sequence(tree: &TreeModel) -> Vec<PruneStep> {
    let n = tree.nodes.len();
    let mut collapsed = vec![false; n];
    let mut steps = Vec::new();
    let mut alpha = 0.0_f64;
    loop {
        // subtree cost and leaf count under the current collapse set
        let mut sub_cost = vec![0.0; n];
        let mut leaves = vec![0usize; n];
        let order = post_order(tree, &collapsed);
        let mut g = vec![f64::INFINITY; n];
        for &i in &order {
            let node = &tree.nodes[i];
            match (&node.split, collapsed[i]) {
                (Some(s), false) => {
                    sub_cost[i] = sub_cost[s.left] + sub_cost[s.right];
                    leaves[i] = leaves[s.left] + leaves[s.right];
                    let own = entropy_mass(&node.counts);
                    g[i] = ((own - sub_cost[i]) / (leaves[i] - 1) as f64).max(0.0);
                }
                _ => {
                    sub_cost[i] = entropy_mass(&node.counts);
                    leaves[i] = 1;
                }
            }
        }
        let weakest = order.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
        if weakest.is_finite() && weakest <= alpha + COST_EPS {
            for &i in &order {
                if g[i] <= alpha + COST_EPS {
                    collapsed[i] = true;
                }
            }
            continue;
        }
        steps.push(PruneStep {
            alpha,
            collapsed: collapsed.clone(),
        });
        if !weakest.is_finite() {
            return steps;
        }
        alpha = weakest;
    }
}

/// Post-order over nodes reachable under `collapsed`.
fn post_order(tree: &TreeModel, collapsed: &[bool]) -> Vec<usize> {
    let mut out = Vec::with_capacity(tree.nodes.len());
    let mut stack = vec![(0usize, false)];
    while let Some((i, expanded)) = stack.pop() {
        match (&tree.nodes[i].split, collapsed[i], expanded) {
            (Some(s), false, false) => {
                stack.push((i, true));
                stack.push((s.right, false));
                stack.push((s.left, false));
            }
            _ => out.push(i),
        }
    }
    out
}

/// The step in force at complexity `alpha`.
fn step_at(seq: &[PruneStep], alpha: f64) -> &PruneStep {
    let mut best = &seq[0];
    for s in seq {
        if s.alpha <= alpha + COST_EPS {
            best = s;
        }
    }
    best
}

fn kt_bits(counts: &[f64], label: usize) -> f64 {
    let n: f64 = counts.iter().sum();
    let p = (counts[label] + KT_ALPHA) / (n + KT_ALPHA * counts.len() as f64);
    -p.log2()
}

fn leaf_under(tree: &TreeModel, collapsed: &[bool], ds: &Dataset, binding: &[usize], row: usize) -> usize {
    let mut i = 0;
    loop {
        match &tree.nodes[i].split {
            Some(s) if !collapsed[i] => {
                i = if super::model::goes_left(s, ds.value(binding[s.feature], row)) {
                    s.left
                } else {
                    s.right
                };
            }
            _ => return i,
        }
    }
}

/// Assigns each row to one of `folds` folds after a seeded shuffle.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % folds;
    }
    fold
}

/// Result of cross-validated pruning with the per-level held-out costs.
#[derive(Debug, Clone)]
pub struct PruneReport {
    pub alphas: Vec<f64>,
    /// Summed held-out cross-entropy in bits for each level.
    pub cv_bits: Vec<f64>,
    pub chosen: usize,
}

/// Prunes `tree` (grown on `ds` with `cfg`) by tenfold cross-validation.
pub fn prune_cv(tree: &TreeModel, ds: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    prune_cv_report(tree, ds, cfg).map(|(t, _)| t)
}

pub fn prune_cv_report(tree: &TreeModel, ds: &Dataset, cfg: &TreeConfig) -> Result<(TreeModel, PruneReport)> {
    if cfg.folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if cfg.folds > ds.len() {
        return Err(Error::invalid(format!(
            "{} folds requested for {} datapoints",
            cfg.folds,
            ds.len()
        )));
    }
    let seq = pruning_sequence(tree);
    // geometric midpoints between consecutive levels
    let probes: Vec<f64> = (0..seq.len())
        .map(|k| match seq.get(k + 1) {
            Some(next) => (seq[k].alpha * next.alpha).sqrt(),
            None => seq[k].alpha,
        })
        .collect();
    let fold = fold_assignment(ds.len(), cfg.folds, cfg.seed);
    let per_fold: Vec<Result<Vec<f64>>> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..ds.len()).filter(|&r| fold[r] != f).collect();
            let test: Vec<usize> = (0..ds.len()).filter(|&r| fold[r] == f).collect();
            let sub = ds.subset(&train);
            let t = grow(&sub, cfg)?;
            let fseq = pruning_sequence(&t);
            let binding: Vec<usize> = (0..ds.schema.len()).collect();
            Ok(probes
                .iter()
                .map(|&a| {
                    let step = step_at(&fseq, a);
                    test.iter()
                        .map(|&r| {
                            let leaf = leaf_under(&t, &step.collapsed, ds, &binding, r);
                            kt_bits(&t.nodes[leaf].counts, ds.labels[r])
                        })
                        .sum::<f64>()
                })
                .collect())
        })
        .collect();
    let mut cv_bits = vec![0.0; seq.len()];
    for f in per_fold {
        for (acc, v) in cv_bits.iter_mut().zip(f?) {
            *acc += v;
        }
    }
    // ties favour the smaller tree
    let mut chosen = 0;
    for k in 1..cv_bits.len() {
        if cv_bits[k] <= cv_bits[chosen] + COST_EPS {
            chosen = k;
        }
    }
    let pruned = apply(tree, &seq[chosen].collapsed);
    log::debug!(
        "pruned tree from {} to {} leaves (alpha {:.4})",
        tree.num_leaves(),
        pruned.num_leaves(),
        seq[chosen].alpha
    );
    Ok((
        pruned,
        PruneReport {
            alphas: seq.iter().map(|s| s.alpha).collect(),
            cv_bits,
            chosen,
        },
    ))
}

/// Copy of `tree` with collapsed nodes turned into leaves and unreachable
/// nodes dropped.
pub fn apply(tree: &TreeModel, collapsed: &[bool]) -> TreeModel {
    let mut nodes = Vec::new();
    copy_node(tree, collapsed, 0, &mut nodes);
    TreeModel {
        classes: tree.classes.clone(),
        schema: tree.schema.clone(),
        meta: super::model::TrainingMeta {
            pruned: true,
            ..tree.meta.clone()
        },
        nodes,
    }
}

fn copy_node(tree: &TreeModel, collapsed: &[bool], i: usize, out: &mut Vec<Node>) -> usize {
    let idx = out.len();
    out.push(Node {
        counts: tree.nodes[i].counts.clone(),
        split: None,
    });
    if let (Some(s), false) = (&tree.nodes[i].split, collapsed[i]) {
        let left = copy_node(tree, collapsed, s.left, out);
        let right = copy_node(tree, collapsed, s.right, out);
        out[idx].split = Some(super::model::Split {
            left,
            right,
            ..s.clone()
        });
    }
    idx
}

/// Grows and prunes in one step.
pub fn train(ds: &Dataset, cfg: &TreeConfig) -> Result<TreeModel> {
    let full = grow(ds, cfg)?;
    prune_cv(&full, ds, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn noise(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..3).map(|_| (0..n).map(|_| Some(rng.random::<f64>())).collect()).collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::from_numeric(&["a", "b", "c"], cols, labels, &["x", "y"]).unwrap()
    }

    #[test]
    fn noise_prunes_to_root() {
        let ds = noise(600, 3);
        let cfg = TreeConfig::default();
        let full = grow(&ds, &cfg).unwrap();
        assert!(full.num_leaves() > 5);
        let (pruned, report) = prune_cv_report(&full, &ds, &cfg).unwrap();
        assert!(pruned.num_leaves() <= 3, "{} leaves", pruned.num_leaves());
        assert!(report.cv_bits[report.chosen] <= report.cv_bits[0] + 1e-9);
    }

    #[test]
    fn separable_split_survives() {
        let xs: Vec<Option<f64>> = (0..200).map(|i| Some(i as f64)).collect();
        let labels = (0..200).map(|i| usize::from(i >= 100)).collect();
        let ds = Dataset::from_numeric(&["x"], vec![xs], labels, &["a", "b"]).unwrap();
        let t = train(&ds, &TreeConfig::default()).unwrap();
        assert_eq!(t.num_leaves(), 2);
        assert!(t.meta.pruned);
    }

    #[test]
    fn single_leaf_unchanged() {
        let ds = Dataset::from_numeric(&["x"], vec![vec![Some(0.0); 20]], (0..20).map(|i| i % 2).collect(), &["a", "b"])
            .unwrap();
        let cfg = TreeConfig::default();
        let t = grow(&ds, &cfg).unwrap();
        let p = prune_cv(&t, &ds, &cfg).unwrap();
        assert_eq!(p.nodes, t.nodes);
    }

    #[test]
    fn too_many_folds() {
        let ds = noise(5, 0);
        let t = grow(&ds, &TreeConfig::default()).unwrap();
        assert!(prune_cv(&t, &ds, &TreeConfig::default()).is_err());
    }

    #[test]
    fn sequence_is_nested_and_ends_at_root() {
        let ds = noise(300, 9);
        let t = grow(&ds, &TreeConfig { min_leaf: 5, ..TreeConfig::default() }).unwrap();
        let seq = pruning_sequence(&t);
        assert!(seq.windows(2).all(|w| w[0].alpha < w[1].alpha));
        for w in seq.windows(2) {
            assert!(w[0].collapsed.iter().zip(&w[1].collapsed).all(|(a, b)| !a || *b));
        }
        assert!(seq.last().unwrap().collapsed[0]);
    }
}
