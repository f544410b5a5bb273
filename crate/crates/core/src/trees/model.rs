use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, SchemaEntry, Value};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::prosody::{FeatureValue, FeatureVector};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Test {
    /// Values strictly below the threshold go left.
    Below(f64),
    /// Listed levels go left, every other level goes right.
    In(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Index into the model schema.
    pub feature: usize,
    pub test: Test,
    pub missing_left: bool,
    pub left: usize,
    pub right: usize,
}

/// Arena node. `counts` holds the training mass per class reaching the node.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub counts: Vec<f64>,
    pub split: Option<Split>,
}

impl Node {
    pub fn mass(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn posterior(&self) -> Vec<f64> {
        let m = self.mass();
        if m > 0.0 {
            self.counts.iter().map(|c| c / m).collect()
        } else {
            vec![1.0 / self.counts.len() as f64; self.counts.len()]
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub folds: usize,
    pub min_leaf: usize,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub classes: Vec<String>,
    pub schema: Vec<SchemaEntry>,
    pub meta: TrainingMeta,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

/// Routing decision of a split for one value.
pub(crate) fn goes_left(split: &Split, v: Value<'_>) -> bool {
    match (&split.test, v) {
        (Test::Below(t), Value::Num(x)) => x < *t,
        (Test::In(levels), Value::Cat(s)) => levels.iter().any(|l| l == s),
        _ => split.missing_left,
    }
}

impl TreeModel {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn num_leaves(&self) -> usize {
        self.reachable().filter(|&i| self.nodes[i].is_leaf()).count()
    }

    pub fn num_internal(&self) -> usize {
        self.reachable().filter(|&i| !self.nodes[i].is_leaf()).count()
    }

    /// Node indices reachable from the root, in pre-order.
    pub fn reachable(&self) -> impl Iterator<Item = usize> + '_ {
        let mut stack = vec![0usize];
        std::iter::from_fn(move || {
            let i = stack.pop()?;
            if let Some(s) = &self.nodes[i].split {
                stack.push(s.right);
                stack.push(s.left);
            }
            Some(i)
        })
    }

    /// Routes through the tree, calling `visit` on every node on the path.
    /// `value(f)` supplies the value of schema feature `f`.
    pub(crate) fn route<'v>(&self, mut value: impl FnMut(usize) -> Value<'v>, mut visit: impl FnMut(usize)) -> usize {
        let mut i = 0;
        loop {
            visit(i);
            match &self.nodes[i].split {
                None => return i,
                Some(s) => {
                    i = if goes_left(s, value(s.feature)) { s.left } else { s.right };
                }
            }
        }
    }

    /// Maps every schema feature to its column in `ds`.
    pub fn bind(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.schema
            .iter()
            .map(|s| {
                let pos = ds
                    .feature_position(&s.name)
                    .ok_or_else(|| Error::UnknownFeature(s.name.clone()))?;
                if ds.schema[pos].kind != s.kind {
                    return Err(Error::invalid(format!("feature {} has a different kind in the data", s.name)));
                }
                Ok(pos)
            })
            .collect()
    }

    pub fn leaf_of_row(&self, ds: &Dataset, binding: &[usize], row: usize) -> usize {
        self.route(|f| ds.value(binding[f], row), |_| {})
    }

    /// Posterior for every row of `ds`. Fails if the data lack a feature the
    /// model was trained with.
    pub fn classify_dataset(&self, ds: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_classes(&ds.classes)?;
        let binding = self.bind(ds)?;
        Ok((0..ds.len())
            .map(|r| self.nodes[self.leaf_of_row(ds, &binding, r)].posterior())
            .collect())
    }

    pub fn classify(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        for s in &self.schema {
            if crate::prosody::feature_index(&s.name).is_none() {
                return Err(Error::UnknownFeature(s.name.clone()));
            }
        }
        let leaf = self.route(
            |f| match fv.get(&self.schema[f].name) {
                Some(FeatureValue::Num(x)) => Value::Num(*x),
                Some(FeatureValue::Cat(s)) => Value::Cat(s.as_str()),
                None => Value::Missing,
            },
            |_| {},
        );
        Ok(self.nodes[leaf].posterior())
    }

    fn check_classes(&self, classes: &[String]) -> Result<()> {
        if classes != self.classes.as_slice() {
            return Err(Error::ClassMismatch(format!(
                "model has {:?}, data has {:?}",
                self.classes, classes
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            classes: self.classes.clone(),
            schema: self.schema.clone(),
            meta: self.meta.clone(),
            root: self.record(0),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::invalid("tree model has no version field"))?;
        if found != MODEL_VERSION as u64 {
            return Err(Error::UnsupportedVersion {
                what: "tree model",
                found: found as u32,
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(raw)?;
        let mut model = TreeModel {
            classes: file.classes,
            schema: file.schema,
            meta: file.meta,
            nodes: Vec::new(),
        };
        model.push_record(file.root)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_to_string(path)?)
    }

    fn record(&self, i: usize) -> NodeRecord {
        let n = &self.nodes[i];
        NodeRecord {
            counts: n.counts.clone(),
            split: n.split.as_ref().map(|s| {
                Box::new(SplitRecord {
                    feature: self.schema[s.feature].name.clone(),
                    test: s.test.clone(),
                    missing: if s.missing_left { Side::Left } else { Side::Right },
                    left: self.record(s.left),
                    right: self.record(s.right),
                })
            }),
        }
    }

    fn push_record(&mut self, rec: NodeRecord) -> Result<usize> {
        if rec.counts.len() != self.classes.len() {
            return Err(Error::invalid("node counts do not match the class list"));
        }
        let idx = self.nodes.len();
        self.nodes.push(Node {
            counts: rec.counts,
            split: None,
        });
        if let Some(s) = rec.split {
            let s = *s;
            let feature = self
                .schema
                .iter()
                .position(|e| e.name == s.feature)
                .ok_or_else(|| Error::UnknownFeature(s.feature.clone()))?;
            let left = self.push_record(s.left)?;
            let right = self.push_record(s.right)?;
            self.nodes[idx].split = Some(Split {
                feature,
                test: s.test,
                missing_left: s.missing == Side::Left,
                left,
                right,
            });
        }
        Ok(idx)
    }

    /// Indented text rendering: one line per node with the condition leading
    /// to it, its majority class and posteriors.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(0, "root".to_string(), 0, &mut out);
        out
    }

    fn render_node(&self, i: usize, cond: String, depth: usize, out: &mut String) {
        let n = &self.nodes[i];
        let post = n.posterior();
        let best = crate::numeric::argmax(&post).unwrap_or(0);
        let dist: Vec<String> = self
            .classes
            .iter()
            .zip(&post)
            .map(|(c, p)| format!("{c} {p:.3}"))
            .collect();
        let _ = writeln!(
            out,
            "{}{}  {}  ({}; n={})",
            "|  ".repeat(depth),
            cond,
            self.classes.get(best).map(String::as_str).unwrap_or("?"),
            dist.join(" "),
            n.mass()
        );
        if let Some(s) = &n.split {
            let name = &self.schema[s.feature].name;
            let (l, r) = match &s.test {
                Test::Below(t) => (format!("{name} < {t}"), format!("{name} >= {t}")),
                Test::In(levels) => (
                    format!("{name} in {{{}}}", levels.join(",")),
                    format!("{name} not in {{{}}}", levels.join(",")),
                ),
            };
            let (l, r) = if s.missing_left {
                (l + " or missing", r)
            } else {
                (l, r + " or missing")
            };
            self.render_node(s.left, l, depth + 1, out);
            self.render_node(s.right, r, depth + 1, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Side {
    Left,
    Right,
}

#[derive(Serialize, Deserialize)]
struct SplitRecord {
    feature: String,
    test: Test,
    missing: Side,
    left: NodeRecord,
    right: NodeRecord,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    counts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Box<SplitRecord>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    classes: Vec<String>,
    schema: Vec<SchemaEntry>,
    meta: TrainingMeta,
    root: NodeRecord,
}
