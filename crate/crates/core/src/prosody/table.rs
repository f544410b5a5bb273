//! Feature matrices: one row per utterance, written as CSV with MISSING as an
//! empty field.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{ConversationSide, Corpus, SplitName};
use crate::error::{Error, Result};
use crate::fsutil::fmt_f64;

use super::extract::extract_utterance;
use super::features::{feature_def, feature_index, FeatureKind, FeatureValue, FeatureVector, FEATURES};
use super::side::SideContext;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub utt_id: String,
    pub da_class: String,
    pub da_tag: String,
    pub values: FeatureVector,
}

/// Utterance-by-feature matrix. `columns` lists the feature indices present,
/// in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<usize>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn has_feature(&self, name: &str) -> bool {
        feature_index(name).is_some_and(|i| self.columns.contains(&i))
    }

    pub fn row(&self, utt_id: &str) -> Option<&FeatureRow> {
        self.rows.iter().find(|r| r.utt_id == utt_id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("utt_id,da_class,da_tag");
        for &c in &self.columns {
            out.push(',');
            out.push_str(FEATURES[c].name);
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{},{},{}",
                csv_field(&row.utt_id),
                csv_field(&row.da_class),
                csv_field(&row.da_tag)
            );
            for &c in &self.columns {
                out.push(',');
                match row.values.at(c) {
                    Some(FeatureValue::Num(v)) => out.push_str(&fmt_f64(*v)),
                    Some(FeatureValue::Cat(s)) => out.push_str(&csv_field(s)),
                    None => {}
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::malformed(&file, 1, format!("{other:?}")),
            })?;
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().collect();
        if names.len() < 3 || names[..3] != ["utt_id", "da_class", "da_tag"] {
            return Err(Error::malformed(&file, 1, "header must start with utt_id,da_class,da_tag"));
        }
        let mut columns = Vec::new();
        for name in &names[3..] {
            let i = feature_index(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
            columns.push(i);
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let mut values = FeatureVector::new();
            for (k, &c) in columns.iter().enumerate() {
                let field = rec.get(k + 3).unwrap_or("");
                if field.is_empty() {
                    continue;
                }
                let def = &FEATURES[c];
                let v = match def.kind {
                    FeatureKind::Numeric => FeatureValue::Num(field.parse().map_err(|_| {
                        Error::malformed(&file, line, format!("{}: bad number {field:?}", def.name))
                    })?),
                    FeatureKind::Categorical => FeatureValue::Cat(field.to_string()),
                };
                values.set_at(c, Some(v));
            }
            rows.push(FeatureRow {
                utt_id: rec.get(0).unwrap_or("").to_string(),
                da_class: rec.get(1).unwrap_or("").to_string(),
                da_tag: rec.get(2).unwrap_or("").to_string(),
                values,
            });
        }
        Ok(FeatureTable { columns, rows })
    }

    /// Keeps only the named feature columns (values of dropped columns are cleared).
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut columns = Vec::new();
        for n in names {
            feature_def(n).ok_or_else(|| Error::UnknownFeature(n.to_string()))?;
            columns.push(feature_index(n).unwrap());
        }
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut values = FeatureVector::new();
                for &c in &columns {
                    values.set_at(c, r.values.at(c).cloned());
                }
                FeatureRow {
                    values,
                    ..r.clone()
                }
            })
            .collect();
        Ok(FeatureTable { columns, rows })
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn extract_side(side: &ConversationSide) -> Vec<FeatureRow> {
    let ctx = SideContext::new(side);
    side.utterances
        .iter()
        .map(|u| FeatureRow {
            utt_id: u.utt_id.clone(),
            da_class: u.da_class.clone(),
            da_tag: u.da_tag.clone(),
            values: extract_utterance(u, &ctx),
        })
        .collect()
}

/// Features for every utterance of the corpus, in corpus order. Sides are
/// processed in parallel.
pub fn extract_all(corpus: &Corpus) -> FeatureTable {
    let per_side: Vec<Vec<FeatureRow>> = corpus.sides.par_iter().map(extract_side).collect();
    FeatureTable {
        columns: (0..FEATURES.len()).collect(),
        rows: per_side.into_iter().flatten().collect(),
    }
}

/// Features for the utterances of one split, or of the whole corpus.
pub fn extract_split(corpus: &Corpus, split: Option<SplitName>) -> Result<FeatureTable> {
    let Some(split) = split else {
        return Ok(extract_all(corpus));
    };
    let keys = corpus
        .splits
        .as_ref()
        .ok_or_else(|| Error::invalid("corpus has no split file"))?
        .get(split);
    let per_side: Vec<Vec<FeatureRow>> = corpus
        .sides
        .par_iter()
        .filter(|s| keys.contains(&s.key()))
        .map(extract_side)
        .collect();
    Ok(FeatureTable {
        columns: (0..FEATURES.len()).collect(),
        rows: per_side.into_iter().flatten().collect(),
    })
}
