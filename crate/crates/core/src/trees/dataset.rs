use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prosody::{feature_def, FeatureGroup, FeatureKind, FeatureTable, FeatureValue, FEATURES};

/// One queryable feature of a tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: FeatureKind,
}

impl SchemaEntry {
    pub fn group(&self) -> Option<FeatureGroup> {
        feature_def(&self.name).map(|d| d.group)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    /// Codes index into `levels`, which are sorted.
    Categorical { levels: Vec<String>, codes: Vec<Option<u32>> },
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn categorical(values: &[Option<&str>]) -> Self {
        let levels: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = values
            .iter()
            .map(|v| v.map(|s| levels.binary_search_by(|l| l.as_str().cmp(s)).unwrap() as u32))
            .collect();
        Column::Categorical { levels, codes }
    }

    pub(crate) fn value(&self, row: usize) -> Value<'_> {
        match self {
            Column::Numeric(v) => v[row].map_or(Value::Missing, Value::Num),
            Column::Categorical { levels, codes } => {
                codes[row].map_or(Value::Missing, |c| Value::Cat(&levels[c as usize]))
            }
        }
    }
}

/// A single feature value seen while routing through a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Num(f64),
    Cat(&'a str),
    Missing,
}

/// Column-major feature matrix with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Vec<SchemaEntry>,
    pub columns: Vec<Column>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn new(
        schema: Vec<SchemaEntry>,
        columns: Vec<Column>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::invalid("schema and column counts differ"));
        }
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != labels.len() {
                return Err(Error::invalid(format!("column {} has the wrong length", s.name)));
            }
            let ok = matches!(
                (s.kind, c),
                (FeatureKind::Numeric, Column::Numeric(_)) | (FeatureKind::Categorical, Column::Categorical { .. })
            );
            if !ok {
                return Err(Error::invalid(format!("column {} does not match its kind", s.name)));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::invalid(format!("label {bad} outside the class list")));
        }
        Ok(Dataset {
            schema,
            columns,
            labels,
            classes,
        })
    }

    /// All-numeric dataset from named columns.
    pub fn from_numeric(
        names: &[&str],
        columns: Vec<Vec<Option<f64>>>,
        labels: Vec<usize>,
        classes: &[&str],
    ) -> Result<Self> {
        let schema = names
            .iter()
            .map(|n| SchemaEntry {
                name: n.to_string(),
                kind: FeatureKind::Numeric,
            })
            .collect();
        Dataset::new(
            schema,
            columns.into_iter().map(Column::Numeric).collect(),
            labels,
            classes.iter().map(|c| c.to_string()).collect(),
        )
    }

    /// Builds a dataset from selected table rows. `labels[i]` is the class
    /// index of `rows[i]`.
    pub fn from_table(table: &FeatureTable, rows: &[usize], labels: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::invalid("rows and labels differ in length"));
        }
        let mut schema = Vec::with_capacity(table.columns.len());
        let mut columns = Vec::with_capacity(table.columns.len());
        for &fi in &table.columns {
            let def = &FEATURES[fi];
            schema.push(SchemaEntry {
                name: def.name.to_string(),
                kind: def.kind,
            });
            let column = match def.kind {
                FeatureKind::Numeric => Column::Numeric(
                    rows.iter()
                        .map(|&r| table.rows[r].values.at(fi).and_then(FeatureValue::as_num))
                        .collect(),
                ),
                FeatureKind::Categorical => {
                    let vals: Vec<Option<&str>> = rows
                        .iter()
                        .map(|&r| table.rows[r].values.at(fi).and_then(FeatureValue::as_cat))
                        .collect();
                    Column::categorical(&vals)
                }
            };
            columns.push(column);
        }
        Dataset::new(schema, columns, labels, classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_position(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn value(&self, feature: usize, row: usize) -> Value<'_> {
        self.columns[feature].value(row)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    /// Keeps only the named features, in schema order.
    pub fn select_features(&self, keep: &BTreeSet<String>) -> Result<Self> {
        for k in keep {
            if self.feature_position(k).is_none() {
                return Err(Error::UnknownFeature(k.clone()));
            }
        }
        let (schema, columns) = self
            .schema
            .iter()
            .zip(&self.columns)
            .filter(|(s, _)| keep.contains(&s.name))
            .map(|(s, c)| (s.clone(), c.clone()))
            .unzip();
        Ok(Dataset {
            schema,
            columns,
            labels: self.labels.clone(),
            classes: self.classes.clone(),
        })
    }

    /// Feature names of the schema grouped by feature type; features outside
    /// the built-in table are left out.
    pub fn groups(&self) -> BTreeMap<FeatureGroup, Vec<String>> {
        let mut out: BTreeMap<FeatureGroup, Vec<String>> = BTreeMap::new();
        for s in &self.schema {
            if let Some(g) = s.group() {
                out.entry(g).or_default().push(s.name.clone());
            }
        }
        out
    }

    /// Row subset, keeping categorical level tables as they are.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical { levels, codes } => Column::Categorical {
                    levels: levels.clone(),
                    codes: rows.iter().map(|&r| codes[r]).collect(),
                },
            })
            .collect();
        Dataset {
            schema: self.schema.clone(),
            columns,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            classes: self.classes.clone(),
        }
    }
}
