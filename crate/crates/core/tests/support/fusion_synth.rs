//! Synthetic word/tree score tables for the fusion contract: both sources
//! carry independent noisy evidence for the true class.

#![allow(dead_code)]

use prosact_core::fusion::{ScoreTable, UttScores};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const CLASSES: usize = 3;

/// `n` utterances with labels, word log-likelihoods and tree posteriors.
pub fn scores(seed: u64, n: usize) -> (ScoreTable, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = rng.random_range(0..CLASSES);
        let offset = rng.random_range(-40.0..-5.0);
        let log_word: Vec<f64> = (0..CLASSES)
            .map(|c| offset + if c == y { 1.0 } else { 0.0 } + 1.5 * noise.sample(&mut rng))
            .collect();
        let logits: Vec<f64> = (0..CLASSES)
            .map(|c| if c == y { 1.2 } else { 0.0 } + noise.sample(&mut rng))
            .collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        rows.push(UttScores {
            utt_id: format!("u{i}"),
            log_word,
            tree_posterior: logits.iter().map(|l| l.exp() / z).collect(),
        });
        labels.push(y);
    }
    let table = ScoreTable {
        classes: (0..CLASSES).map(|c| format!("C{c}")).collect(),
        rows,
    };
    (table, labels)
}

pub fn accuracy(decisions: &[usize], labels: &[usize]) -> f64 {
    decisions.iter().zip(labels).filter(|(d, l)| d == l).count() as f64 / labels.len() as f64
}
