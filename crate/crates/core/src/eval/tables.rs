//! Small interchange files used between pipeline stages: per-class score
//! matrices, hard decisions and label lists.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::downsample;
use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};
use crate::fusion::{ScoreTable, UttScores};
use crate::prosody::FeatureTable;
use crate::trees::Dataset;

use super::task::TaskSpec;

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().from_reader(text.as_bytes())
}

fn parse_num(s: &str, file: &str, line: u64) -> Result<f64> {
    s.parse().map_err(|_| Error::malformed(file, line, format!("bad number {s:?}")))
}

fn opt(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassRow {
    pub utt_id: String,
    /// Reference class when known.
    pub reference: Option<String>,
    pub values: Vec<f64>,
}

/// Wide per-class matrix, `utt_id,reference,<class>...`: tree posteriors or
/// natural-log word likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub classes: Vec<String>,
    pub rows: Vec<ClassRow>,
}

impl ClassScores {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("utt_id,reference");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.utt_id, r.reference.as_deref().unwrap_or(""));
            for v in &r.values {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, file: &str) -> Result<Self> {
        let mut rdr = reader(text);
        let headers = rdr.headers()?.clone();
        if headers.len() < 4 || &headers[0] != "utt_id" || &headers[1] != "reference" {
            return Err(Error::malformed(file, 1, "header must be utt_id,reference followed by two or more classes"));
        }
        let classes: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let values = rec.iter().skip(2).map(|s| parse_num(s, file, line)).collect::<Result<Vec<_>>>()?;
            rows.push(ClassRow {
                utt_id: rec[0].to_string(),
                reference: opt(&rec[1]),
                values,
            });
        }
        Ok(ClassScores { classes, rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&read_to_string(path)?, &path.display().to_string())
    }

    /// Reference class indices; `None` where unknown or not a listed class.
    pub fn labels(&self) -> Vec<Option<usize>> {
        self.rows
            .iter()
            .map(|r| r.reference.as_ref().and_then(|x| self.classes.iter().position(|c| c == x)))
            .collect()
    }
}

/// Joins word scores and tree posteriors on utterance id, in posterior
/// order. Every posterior row needs word scores; class lists must match.
pub fn join_scores(words: &ClassScores, posteriors: &ClassScores) -> Result<(ScoreTable, Vec<Option<usize>>)> {
    if words.classes != posteriors.classes {
        return Err(Error::ClassMismatch(format!(
            "word scores have [{}], posteriors have [{}]",
            words.classes.join(", "),
            posteriors.classes.join(", ")
        )));
    }
    let by_id: BTreeMap<&str, &ClassRow> = words.rows.iter().map(|r| (r.utt_id.as_str(), r)).collect();
    let rows = posteriors
        .rows
        .iter()
        .map(|p| {
            let w = by_id
                .get(p.utt_id.as_str())
                .ok_or_else(|| Error::invalid(format!("no word scores for utterance {}", p.utt_id)))?;
            Ok(UttScores {
                utt_id: p.utt_id.clone(),
                log_word: w.values.clone(),
                tree_posterior: p.values.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        ScoreTable {
            classes: posteriors.classes.clone(),
            rows,
        },
        posteriors.labels(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub utt_id: String,
    pub reference: Option<String>,
    pub hypothesis: String,
}

/// `utt_id,reference,hypothesis`.
pub fn decisions_csv(rows: &[Decision]) -> String {
    let mut out = String::from("utt_id,reference,hypothesis\n");
    for d in rows {
        let _ = writeln!(out, "{},{},{}", d.utt_id, d.reference.as_deref().unwrap_or(""), d.hypothesis);
    }
    out
}

pub fn read_decisions(path: &Path) -> Result<Vec<Decision>> {
    let file = path.display().to_string();
    let text = read_to_string(path)?;
    let mut rdr = reader(&text);
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["utt_id", "reference", "hypothesis"] {
        return Err(Error::malformed(&file, 1, "header must be utt_id,reference,hypothesis"));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(Decision {
                utt_id: rec[0].to_string(),
                reference: opt(&rec[1]),
                hypothesis: rec[2].to_string(),
            })
        })
        .collect()
}

/// Decisions as class indices over `classes`; rows without a reference are
/// skipped. Unknown names are an error.
pub fn decision_indices(rows: &[Decision], classes: &[String]) -> Result<(Vec<usize>, Vec<usize>)> {
    let idx = |name: &str| {
        classes
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::ClassMismatch(format!("class {name:?} is not in [{}]", classes.join(", "))))
    };
    let mut labels = Vec::new();
    let mut preds = Vec::new();
    for d in rows {
        if let Some(r) = &d.reference {
            labels.push(idx(r)?);
            preds.push(idx(&d.hypothesis)?);
        }
    }
    Ok((labels, preds))
}

/// `utt_id,label` file, as used for interlabeler comparisons.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = path.display().to_string();
    let text = read_to_string(path)?;
    let mut rdr = reader(&text);
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["utt_id", "label"] {
        return Err(Error::malformed(&file, 1, "header must be utt_id,label"));
    }
    let mut out = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if out.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
            return Err(Error::malformed(&file, i as u64 + 2, format!("duplicate utterance {}", &rec[0])));
        }
    }
    Ok(out)
}

/// Task-labelled dataset drawn from a feature table. Rows the task does not
/// cover are dropped; with `seed` the classes are downsampled to equal size.
/// Returns the dataset and the table row of each datapoint.
pub fn task_dataset(table: &FeatureTable, task: &TaskSpec, seed: Option<u64>) -> Result<(Dataset, Vec<usize>)> {
    let classes = task.class_names();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, r) in table.rows.iter().enumerate() {
        if let Some(l) = task.label(&r.da_tag, &r.da_class) {
            rows.push(i);
            labels.push(l);
        }
    }
    if let Some(seed) = seed {
        let names: Vec<&str> = labels.iter().map(|&l| classes[l].as_str()).collect();
        let kept = downsample(&names, &classes, seed)?;
        rows = kept.iter().map(|&k| rows[k]).collect();
        labels = kept.iter().map(|&k| labels[k]).collect();
    } else if let Some(c) = (0..classes.len()).find(|c| !labels.contains(c)) {
        return Err(Error::EmptyClass(classes[c].clone()));
    }
    Ok((Dataset::from_table(table, &rows, labels, classes)?, rows))
}
