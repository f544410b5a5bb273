use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::entropy_bits;

/// Cross-entropy terms use posteriors floored at this value.
pub const EFFICIENCY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub n: usize,
    pub accuracy: f64,
    /// Relative entropy reduction; only when posteriors were supplied.
    pub efficiency: Option<f64>,
    /// `confusion[reference][hypothesis]`.
    pub confusion: Vec<Vec<u64>>,
    pub chance: f64,
}

pub fn accuracy(labels: &[usize], predictions: &[usize]) -> Result<f64> {
    check_pairs(labels.len(), predictions.len())?;
    let correct = labels.iter().zip(predictions).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / labels.len() as f64)
}

fn check_pairs(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("{a} labels against {b} predictions")));
    }
    if a == 0 {
        return Err(Error::invalid("cannot score an empty set"));
    }
    Ok(())
}

pub fn confusion(labels: &[usize], predictions: &[usize], classes: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes]; classes];
    for (&l, &p) in labels.iter().zip(predictions) {
        m[l][p] += 1;
    }
    m
}

pub fn evaluate(labels: &[usize], predictions: &[usize], classes: usize) -> Result<EvalResult> {
    Ok(EvalResult {
        n: labels.len(),
        accuracy: accuracy(labels, predictions)?,
        efficiency: None,
        confusion: confusion(labels, predictions, classes),
        chance: 1.0 / classes as f64,
    })
}

/// Confusion matrix with reference classes as rows.
pub fn confusion_csv(classes: &[String], m: &[Vec<u64>]) -> String {
    let mut out = String::from("reference");
    for c in classes {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (c, row) in classes.iter().zip(m) {
        out.push_str(c);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

impl EvalResult {
    /// `metric,value` lines; percentages are not applied.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "samples,{}", self.n);
        let _ = writeln!(out, "accuracy,{:.6}", self.accuracy);
        let _ = writeln!(out, "chance,{:.6}", self.chance);
        if let Some(e) = self.efficiency {
            let _ = writeln!(out, "efficiency,{e:.6}");
        }
        out
    }
}

/// `1 − mean(−log2 p(true class)) / H(prior)`.
pub fn efficiency(prior: &[f64], posteriors: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    check_pairs(labels.len(), posteriors.len())?;
    let h = prior_entropy(prior)?;
    let xent: f64 = posteriors
        .iter()
        .zip(labels)
        .map(|(p, &l)| -p[l].max(EFFICIENCY_FLOOR).log2())
        .sum::<f64>()
        / labels.len() as f64;
    Ok(1.0 - xent / h)
}

/// `1 − mean H(posterior) / H(prior)`: the entropy of the leaf each sample
/// lands in, averaged by mass, ignoring the true labels.
pub fn efficiency_leaf(prior: &[f64], posteriors: &[Vec<f64>]) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(Error::invalid("cannot score an empty set"));
    }
    let h = prior_entropy(prior)?;
    let mean: f64 = posteriors.iter().map(|p| entropy_bits(p)).sum::<f64>() / posteriors.len() as f64;
    Ok(1.0 - mean / h)
}

fn prior_entropy(prior: &[f64]) -> Result<f64> {
    let h = entropy_bits(prior);
    if !(h > 0.0) {
        return Err(Error::invalid("prior has zero entropy"));
    }
    Ok(h)
}

/// Uniform prior over `k` classes.
pub fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[2, 1], &[2, 1]).unwrap(), 1.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[0], &[0, 1]).is_err());
        let r = evaluate(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(r.confusion, vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(r.confusion.iter().map(|row| row.iter().sum::<u64>()).collect::<Vec<_>>(), vec![2, 2]);
    }

    #[test]
    fn efficiency_extremes() {
        let prior = uniform(2);
        let onehot = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(efficiency(&prior, &onehot, &[0, 1]).unwrap(), 1.0);
        assert_eq!(efficiency_leaf(&prior, &onehot).unwrap(), 1.0);
        let flat = vec![prior.clone(); 2];
        assert!(efficiency(&prior, &flat, &[0, 1]).unwrap().abs() < 1e-15);
        assert!(efficiency(&[1.0, 0.0], &flat, &[0, 1]).is_err());
    }
}
