use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::katz::TrigramModel;
use super::mixture::ClassMixture;
use super::tokenize::normalize_words;
use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};
use crate::numeric::log_sum_exp;

/// Default weight on acoustic log-likelihoods before summation.
pub const DEFAULT_ACOUSTIC_SCALE: f64 = 1.0 / 12.0;
/// Largest list kept per utterance.
pub const MAX_HYPOTHESES: usize = 2500;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub rank: u32,
    /// Natural-log acoustic likelihood ln P(A|W).
    pub acoustic: f64,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub utt_id: String,
    pub hypotheses: Vec<Hypothesis>,
}

/// Parses lines `utt_id rank acoustic_logprob w1 w2 ...`. Lists keep file
/// order; ranks must ascend within a list.
pub fn parse_nbest(text: &str, file: &str) -> Result<Vec<NBestList>> {
    let mut lists: Vec<NBestList> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i as u64 + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split_whitespace();
        let (Some(utt), Some(rank), Some(score)) = (f.next(), f.next(), f.next()) else {
            return Err(Error::malformed(file, ln, "expected utt_id, rank and acoustic score"));
        };
        let rank: u32 = rank
            .parse()
            .map_err(|_| Error::malformed(file, ln, format!("bad rank {rank:?}")))?;
        let acoustic: f64 = score
            .parse()
            .map_err(|_| Error::malformed(file, ln, format!("bad score {score:?}")))?;
        if !acoustic.is_finite() {
            return Err(Error::malformed(file, ln, "acoustic score must be finite"));
        }
        let words: Vec<&str> = f.collect();
        let idx = *seen.entry(utt.to_string()).or_insert_with(|| {
            lists.push(NBestList {
                utt_id: utt.to_string(),
                hypotheses: Vec::new(),
            });
            lists.len() - 1
        });
        let list = &mut lists[idx];
        if list.hypotheses.last().is_some_and(|h| h.rank >= rank) {
            return Err(Error::malformed(file, ln, format!("rank {rank} does not ascend for {utt}")));
        }
        if list.hypotheses.len() >= MAX_HYPOTHESES {
            continue;
        }
        list.hypotheses.push(Hypothesis {
            rank,
            acoustic,
            words: normalize_words(&words),
        });
    }
    Ok(lists)
}

pub fn read_nbest(path: &Path) -> Result<Vec<NBestList>> {
    parse_nbest(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_nbest(lists: &[NBestList], path: &Path) -> Result<()> {
    let mut out = String::new();
    for l in lists {
        for h in &l.hypotheses {
            let _ = write!(out, "{} {} {}", l.utt_id, h.rank, fmt_f64(h.acoustic));
            for w in &h.words {
                out.push(' ');
                out.push_str(w);
            }
            out.push('\n');
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Per-class ln P(A|C) ≈ ln Σ_W exp(scale·ln P(A|W)) P(W|C), summed over
/// the listed hypotheses only. Terms are sorted before summation so the
/// result does not depend on hypothesis order.
pub fn nbest_likelihood(
    models: &BTreeMap<String, TrigramModel>,
    mixtures: &[ClassMixture],
    list: &NBestList,
    acoustic_scale: f64,
) -> Result<Vec<f64>> {
    if list.hypotheses.is_empty() {
        return Err(Error::invalid(format!("empty N-best list for {}", list.utt_id)));
    }
    Ok(mixtures
        .iter()
        .map(|m| {
            let terms: Vec<f64> = list
                .hypotheses
                .iter()
                .map(|h| acoustic_scale * h.acoustic + m.ln_likelihood(models, &h.words))
                .collect();
            log_sum_exp(&terms)
        })
        .collect())
}

/// Simulated recogniser output: each hypothesis substitutes words of the
/// reference with probability `error_rate`; the acoustic score falls with
/// the number of substitutions, plus uniform jitter.
pub fn synth_nbest(
    refs: &[(String, Vec<String>)],
    vocab: &[String],
    size: usize,
    error_rate: f64,
    seed: u64,
) -> Vec<NBestList> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    refs.iter()
        .map(|(utt, words)| {
            let mut hyps: Vec<(f64, Vec<String>)> = (0..size.max(1))
                .map(|_| {
                    let mut errors = 0;
                    let hw: Vec<String> = words
                        .iter()
                        .map(|w| {
                            if !vocab.is_empty() && rng.random::<f64>() < error_rate {
                                errors += 1;
                                vocab.choose(&mut rng).unwrap().clone()
                            } else {
                                w.clone()
                            }
                        })
                        .collect();
                    let score = -10.0 * words.len() as f64 - 20.0 * errors as f64 - 5.0 * rng.random::<f64>();
                    (score, hw)
                })
                .collect();
            hyps.sort_by(|a, b| b.0.total_cmp(&a.0));
            NBestList {
                utt_id: utt.clone(),
                hypotheses: hyps
                    .into_iter()
                    .enumerate()
                    .map(|(i, (acoustic, words))| Hypothesis {
                        rank: i as u32 + 1,
                        acoustic,
                        words,
                    })
                    .collect(),
            }
        })
        .collect()
}
