use std::collections::BTreeMap;

use serde::Serialize;

use super::dataset::Dataset;
use super::model::TreeModel;
use crate::error::Result;

/// Share of tree queries per feature and per feature group, weighted by the
/// datapoints passing each internal node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageReport {
    /// Sorted by descending share, then name.
    pub by_feature: Vec<(String, f64)>,
    pub by_group: Vec<(String, f64)>,
    pub total_queries: u64,
}

impl UsageReport {
    /// `group,usage`.
    pub fn groups_csv(&self) -> String {
        table("group", &self.by_group)
    }

    /// `feature,usage`.
    pub fn features_csv(&self) -> String {
        table("feature", &self.by_feature)
    }
}

fn table(key: &str, rows: &[(String, f64)]) -> String {
    let mut out = format!("{key},usage\n");
    for (k, u) in rows {
        out.push_str(&format!("{k},{u:.6}\n"));
    }
    out
}

pub fn usage(tree: &TreeModel, ds: &Dataset) -> Result<UsageReport> {
    let binding = tree.bind(ds)?;
    let mut per_feature = vec![0u64; tree.schema.len()];
    for row in 0..ds.len() {
        tree.route(
            |f| ds.value(binding[f], row),
            |node| {
                if let Some(s) = &tree.nodes[node].split {
                    per_feature[s.feature] += 1;
                }
            },
        );
    }
    let total: u64 = per_feature.iter().sum();
    let mut by_feature = Vec::new();
    let mut groups: BTreeMap<String, u64> = BTreeMap::new();
    for (f, &c) in per_feature.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let entry = &tree.schema[f];
        by_feature.push((entry.name.clone(), c));
        let g = entry.group().map_or("Other", |g| g.as_str());
        *groups.entry(g.to_string()).or_default() += c;
    }
    let norm = |v: Vec<(String, u64)>| {
        let mut out: Vec<(String, f64)> = v
            .into_iter()
            .map(|(k, c)| (k, c as f64 / total as f64))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    };
    Ok(UsageReport {
        by_feature: norm(by_feature),
        by_group: norm(groups.into_iter().collect()),
        total_queries: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{Node, Split, Test, TrainingMeta};

    fn node(counts: [f64; 2], split: Option<Split>) -> Node {
        Node {
            counts: counts.to_vec(),
            split,
        }
    }

    #[test]
    fn two_node_tree_gives_two_thirds_one_third() {
        // root on a over 4 points; the left half is split again on b
        let ds = Dataset::from_numeric(
            &["a", "b"],
            vec![
                vec![Some(0.0), Some(0.0), Some(1.0), Some(1.0)],
                vec![Some(0.0), Some(1.0), Some(0.0), Some(1.0)],
            ],
            vec![0, 1, 1, 1],
            &["x", "y"],
        )
        .unwrap();
        let tree = TreeModel {
            classes: ds.classes.clone(),
            schema: ds.schema.clone(),
            meta: TrainingMeta {
                seed: 0,
                folds: 10,
                min_leaf: 1,
                pruned: false,
            },
            nodes: vec![
                node(
                    [1.0, 3.0],
                    Some(Split {
                        feature: 0,
                        test: Test::Below(0.5),
                        missing_left: true,
                        left: 1,
                        right: 4,
                    }),
                ),
                node(
                    [1.0, 1.0],
                    Some(Split {
                        feature: 1,
                        test: Test::Below(0.5),
                        missing_left: true,
                        left: 2,
                        right: 3,
                    }),
                ),
                node([1.0, 0.0], None),
                node([0.0, 1.0], None),
                node([0.0, 2.0], None),
            ],
        };
        let u = usage(&tree, &ds).unwrap();
        assert_eq!(u.total_queries, 6);
        assert_eq!(u.by_feature[0].0, "a");
        assert!((u.by_feature[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((u.by_feature[1].1 - 1.0 / 3.0).abs() < 1e-15);
        // unknown names fall into a catch-all group
        assert_eq!(u.by_group, vec![("Other".to_string(), 1.0)]);
    }
}
