//! Weighted combination of word likelihoods and tree posteriors:
//! `score(U) = ln P(W|U) + λ · ln P(U|F)`, with the tree trained on
//! class-balanced data so its posterior stands in for the likelihood.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};
use crate::lm::decide_scores;

/// Tree posteriors are floored here before taking logs.
pub const POSTERIOR_FLOOR: f64 = 1e-10;

/// 0.0, 0.1, ..., 4.0.
pub fn default_grid() -> Vec<f64> {
    (0..=40).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub lambda: f64,
    pub grid: Vec<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            lambda: 1.0,
            grid: default_grid(),
        }
    }
}

pub fn log_posterior(p: f64) -> f64 {
    p.max(POSTERIOR_FLOOR).ln()
}

/// Joint per-class scores and the argmax (first class on ties).
pub fn fuse(log_word: &[f64], tree_posterior: &[f64], lambda: f64) -> Result<(Vec<f64>, usize)> {
    if log_word.len() != tree_posterior.len() {
        return Err(Error::ClassMismatch(format!(
            "{} word scores against {} tree posteriors",
            log_word.len(),
            tree_posterior.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    let scores: Vec<f64> = log_word
        .iter()
        .zip(tree_posterior)
        .map(|(w, &p)| w + lambda * log_posterior(p))
        .collect();
    let best = decide_scores(&scores).best;
    Ok((scores, best))
}

/// Word and tree evidence for one utterance over a fixed class order.
#[derive(Debug, Clone, PartialEq)]
pub struct UttScores {
    pub utt_id: String,
    pub log_word: Vec<f64>,
    pub tree_posterior: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub classes: Vec<String>,
    pub rows: Vec<UttScores>,
}

impl ScoreTable {
    /// Long CSV: `utt_id,class,log_word,log_tree_posterior`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("utt_id,class,log_word,log_tree_posterior\n");
        for r in &self.rows {
            for (c, class) in self.classes.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    r.utt_id,
                    class,
                    fmt_f64(r.log_word[c]),
                    fmt_f64(r.tree_posterior[c].ln())
                );
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    /// Reads the long format. Class order is that of first appearance; every
    /// utterance must list the same classes.
    pub fn from_csv(text: &str, file: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let expected = ["utt_id", "class", "log_word", "log_tree_posterior"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::malformed(file, 1, format!("header must be {}", expected.join(","))));
        }
        let mut classes: Vec<String> = Vec::new();
        let mut per_utt: Vec<(String, BTreeMap<String, (f64, f64)>)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let ln = i as u64 + 2;
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::malformed(file, ln, format!("bad number {s:?}")))
            };
            let (utt, class) = (rec[0].to_string(), rec[1].to_string());
            let (w, t) = (num(&rec[2])?, num(&rec[3])?);
            if !classes.contains(&class) {
                classes.push(class.clone());
            }
            if per_utt.last().is_none_or(|(u, _)| *u != utt) {
                per_utt.push((utt.clone(), BTreeMap::new()));
            }
            let entry = &mut per_utt.last_mut().unwrap().1;
            if entry.insert(class.clone(), (w, t)).is_some() {
                return Err(Error::malformed(file, ln, format!("duplicate class {class} for {utt}")));
            }
        }
        let mut rows = Vec::with_capacity(per_utt.len());
        for (utt, map) in per_utt {
            if map.len() != classes.len() {
                return Err(Error::ClassMismatch(format!("utterance {utt} does not score every class")));
            }
            rows.push(UttScores {
                utt_id: utt,
                log_word: classes.iter().map(|c| map[c].0).collect(),
                tree_posterior: classes.iter().map(|c| map[c].1.exp()).collect(),
            });
        }
        Ok(ScoreTable { classes, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&read_to_string(path)?, &path.display().to_string())
    }

    /// Fused decisions for every row.
    pub fn decisions(&self, lambda: f64) -> Result<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| fuse(&r.log_word, &r.tree_posterior, lambda).map(|f| f.1))
            .collect()
    }

    pub fn word_decisions(&self) -> Vec<usize> {
        self.rows.iter().map(|r| decide_scores(&r.log_word).best).collect()
    }

    pub fn tree_decisions(&self) -> Vec<usize> {
        self.rows
            .iter()
            .map(|r| crate::numeric::argmax(&r.tree_posterior).unwrap_or(0))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub best_lambda: f64,
    pub best_accuracy: f64,
    /// Accuracy at every grid value, in grid order.
    pub curve: Vec<(f64, f64)>,
}

impl TuneReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,accuracy\n");
        for (l, a) in &self.curve {
            let _ = writeln!(out, "{l:.4},{a:.6}");
        }
        out
    }
}

/// Grid search for the λ with the highest accuracy against `labels`
/// (class indices aligned with `scores.rows`); ties go to the smaller λ.
pub fn tune_lambda(scores: &ScoreTable, labels: &[usize], grid: &[f64]) -> Result<TuneReport> {
    if grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    if labels.len() != scores.rows.len() || labels.is_empty() {
        return Err(Error::invalid("labels must align with a non-empty score table"));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &l in grid {
        let dec = scores.decisions(l)?;
        let correct = dec.iter().zip(labels).filter(|(d, l)| d == l).count();
        curve.push((l, correct as f64 / labels.len() as f64));
    }
    let mut best = 0;
    for i in 1..curve.len() {
        let (l, a) = curve[i];
        let (bl, ba) = curve[best];
        if a > ba || (a == ba && l < bl) {
            best = i;
        }
    }
    Ok(TuneReport {
        best_lambda: curve[best].0,
        best_accuracy: curve[best].1,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<(Vec<f64>, Vec<f64>)>) -> ScoreTable {
        ScoreTable {
            classes: vec!["A".into(), "B".into()],
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (w, t))| UttScores {
                    utt_id: format!("u{i}"),
                    log_word: w,
                    tree_posterior: t,
                })
                .collect(),
        }
    }

    #[test]
    fn equal_words_follow_tree() {
        let (_, best) = fuse(&[-5.0, -5.0], &[0.2, 0.8], 1.0).unwrap();
        assert_eq!(best, 1);
        let (_, best) = fuse(&[-5.0, -5.0], &[0.8, 0.2], 1.0).unwrap();
        assert_eq!(best, 0);
    }

    #[test]
    fn lambda_zero_is_words_only() {
        let (s, best) = fuse(&[-1.0, -2.0], &[0.0, 1.0], 0.0).unwrap();
        assert_eq!(best, 0);
        assert_eq!(s, vec![-1.0, -2.0]);
    }

    #[test]
    fn large_lambda_follows_pure_tree() {
        let (_, best) = fuse(&[-1.0, -30.0], &[0.0, 1.0], 4.0).unwrap();
        assert_eq!(best, 1);
    }

    #[test]
    fn mismatch_and_negative_lambda() {
        assert!(matches!(fuse(&[0.0], &[0.5, 0.5], 1.0), Err(Error::ClassMismatch(_))));
        assert!(fuse(&[0.0], &[1.0], -0.1).is_err());
    }

    #[test]
    fn tune_prefers_smallest_lambda_on_ties() {
        // words perfect: every lambda ties at 1.0 or lower
        let t = table(vec![(vec![-1.0, -9.0], vec![0.5, 0.5]), (vec![-9.0, -1.0], vec![0.5, 0.5])]);
        let r = tune_lambda(&t, &[0, 1], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.best_lambda, 0.0);
        assert_eq!(r.best_accuracy, 1.0);
        assert!(tune_lambda(&t, &[0, 1], &[]).is_err());
    }

    #[test]
    fn tune_finds_positive_lambda_when_only_tree_helps() {
        let t = table(vec![
            (vec![-1.0, -1.5], vec![0.1, 0.9]),
            (vec![-1.5, -1.0], vec![0.9, 0.1]),
            (vec![-1.0, -1.2], vec![0.2, 0.8]),
        ]);
        let r = tune_lambda(&t, &[1, 0, 1], &default_grid()).unwrap();
        assert!(r.best_lambda > 0.0);
        assert_eq!(r.best_accuracy, 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let t = table(vec![(vec![-1.25, -3.5], vec![0.25, 0.75]), (vec![-2.0, -1.0], vec![1.0, 0.0])]);
        let back = ScoreTable::from_csv(&t.to_csv(), "mem").unwrap();
        assert_eq!(back.classes, t.classes);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert_eq!(a.log_word, b.log_word);
            for (x, y) in a.tree_posterior.iter().zip(&b.tree_posterior) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
