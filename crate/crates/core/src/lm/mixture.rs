use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::katz::TrigramModel;
use crate::corpus::TagMap;
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub tag: String,
    pub weight: f64,
}

/// A class scored as a weighted mixture of per-tag models.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMixture {
    pub class: String,
    pub members: Vec<Member>,
}

impl ClassMixture {
    /// Weights proportional to `counts`, normalised to sum to 1.
    pub fn from_counts(class: &str, counts: &[(&str, f64)]) -> Result<Self> {
        let total: f64 = counts.iter().map(|c| c.1).sum();
        if counts.is_empty() || !(total > 0.0) || counts.iter().any(|c| c.1 < 0.0) {
            return Err(Error::invalid(format!("class {class} needs positive member counts")));
        }
        Ok(ClassMixture {
            class: class.to_string(),
            members: counts
                .iter()
                .map(|(t, c)| Member {
                    tag: t.to_string(),
                    weight: c / total,
                })
                .collect(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.members.iter().map(|m| m.weight).sum();
        if self.members.is_empty() || self.members.iter().any(|m| m.weight < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mixture weights of {} must be non-negative and sum to 1 (sum {sum})",
                self.class
            )));
        }
        Ok(())
    }

    /// ln Σ_i P(U_i|C) P(W|U_i) given per-tag log-likelihoods. Members
    /// without a model are dropped and the remaining weights renormalised.
    pub fn combine(&self, per_tag: &BTreeMap<String, f64>) -> f64 {
        let have: Vec<&Member> = self
            .members
            .iter()
            .filter(|m| m.weight > 0.0 && per_tag.contains_key(&m.tag))
            .collect();
        let mass: f64 = have.iter().map(|m| m.weight).sum();
        if have.is_empty() || mass <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let terms: Vec<f64> = have
            .iter()
            .map(|m| (m.weight / mass).ln() + per_tag[&m.tag])
            .collect();
        log_sum_exp(&terms)
    }

    /// Log-likelihood of a word sequence under the mixture.
    pub fn ln_likelihood(&self, models: &BTreeMap<String, TrigramModel>, words: &[String]) -> f64 {
        let per_tag: BTreeMap<String, f64> = self
            .members
            .iter()
            .filter_map(|m| models.get(&m.tag).map(|lm| (m.tag.clone(), lm.ln_sentence(words))))
            .collect();
        self.combine(&per_tag)
    }
}

/// Default mixtures for the given classes: members are the tag map's tags of
/// each class weighted by their reference counts (1 where no count is known).
pub fn default_mixtures(tags: &TagMap, classes: &[String]) -> Result<Vec<ClassMixture>> {
    classes
        .iter()
        .map(|c| {
            let members = tags.members(c);
            if members.is_empty() {
                return Err(Error::EmptyClass(c.clone()));
            }
            let counts: Vec<(&str, f64)> = members
                .iter()
                .map(|t| (*t, tags.count(t).map_or(1.0, |n| n.max(1) as f64)))
                .collect();
            ClassMixture::from_counts(c, &counts)
        })
        .collect()
}

/// Mixture file: `{class: [{tag, weight}, ...]}`.
pub fn write_mixtures(mixtures: &[ClassMixture], path: &Path) -> Result<()> {
    let map: BTreeMap<&str, &Vec<Member>> = mixtures.iter().map(|m| (m.class.as_str(), &m.members)).collect();
    write_atomic(path, (serde_json::to_string_pretty(&map)? + "\n").as_bytes())
}

/// Reads a mixture file, returning mixtures in `classes` order.
pub fn read_mixtures(path: &Path, classes: &[String]) -> Result<Vec<ClassMixture>> {
    let mut map: BTreeMap<String, Vec<Member>> = serde_json::from_str(&read_to_string(path)?)?;
    classes
        .iter()
        .map(|c| {
            let members = map.remove(c).ok_or_else(|| Error::EmptyClass(c.clone()))?;
            let m = ClassMixture {
                class: c.clone(),
                members,
            };
            m.validate()?;
            Ok(m)
        })
        .collect()
}

/// Word-based decision: per-class log-likelihoods and the argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct WordDecision {
    pub best: usize,
    pub log_likelihoods: Vec<f64>,
    /// Set when another class reaches the same maximum.
    pub tie: bool,
}

/// Argmax with ties going to the earliest class.
pub fn decide_scores(scores: &[f64]) -> WordDecision {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    let tie = scores.iter().enumerate().any(|(i, &s)| i != best && s == scores[best]);
    WordDecision {
        best,
        log_likelihoods: scores.to_vec(),
        tie,
    }
}

pub fn classify_words(
    models: &BTreeMap<String, TrigramModel>,
    mixtures: &[ClassMixture],
    words: &[String],
) -> Result<WordDecision> {
    if mixtures.len() < 2 {
        return Err(Error::invalid("word classification needs at least two classes"));
    }
    let scores: Vec<f64> = mixtures.iter().map(|m| m.ln_likelihood(models, words)).collect();
    Ok(decide_scores(&scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_weights_from_reference_counts() {
        let tags = TagMap::builtin();
        let m = default_mixtures(&tags, &["Statement".to_string()]).unwrap();
        let w: BTreeMap<&str, f64> = m[0].members.iter().map(|m| (m.tag.as_str(), m.weight)).collect();
        let expect_sd = 72_824.0 / (72_824.0 + 25_197.0);
        assert!((w["sd"] - expect_sd).abs() < 1e-12);
        assert!((w["sd"] - 0.743).abs() < 5e-4 && (w["sv"] - 0.257).abs() < 5e-4);
    }

    #[test]
    fn mixture_arithmetic() {
        let m = ClassMixture::from_counts("C", &[("x", 1.0), ("y", 1.0)]).unwrap();
        let (p, q) = (0.02_f64, 0.3_f64);
        let per: BTreeMap<String, f64> = [("x".to_string(), p.ln()), ("y".to_string(), q.ln())].into();
        assert!((m.combine(&per) - ((p + q) / 2.0).ln()).abs() < 1e-12);
        let single = ClassMixture::from_counts("C", &[("x", 3.0)]).unwrap();
        assert_eq!(single.combine(&per), p.ln());
        // a member without a model is dropped
        let partial: BTreeMap<String, f64> = [("y".to_string(), q.ln())].into();
        assert!((m.combine(&partial) - q.ln()).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_first_class_and_are_flagged() {
        let d = decide_scores(&[-3.0, -3.0, -5.0]);
        assert_eq!(d.best, 0);
        assert!(d.tie);
        assert!(!decide_scores(&[-3.0, -2.0]).tie);
    }
}
