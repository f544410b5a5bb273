//! Per-tag backoff trigram language models, class mixtures and N-best
//! likelihood summation.

mod arpa;
mod katz;
mod mixture;
mod nbest;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;

pub use katz::{Discount, LmConfig, TrigramModel, LOG10_ZERO};
pub use mixture::{
    classify_words, decide_scores, default_mixtures, read_mixtures, write_mixtures, ClassMixture, Member,
    WordDecision,
};
pub use nbest::{
    nbest_likelihood, parse_nbest, read_nbest, synth_nbest, write_nbest, Hypothesis, NBestList,
    DEFAULT_ACOUSTIC_SCALE, MAX_HYPOTHESES,
};
pub use tokenize::{normalize_token, normalize_words, tokenize, BOS, EOS, UNK};

use crate::error::Result;

/// Trains one model per tag over a vocabulary shared by all tags. Tags whose
/// sentences are all empty are skipped with a warning.
pub fn train_lm(groups: &BTreeMap<String, Vec<Vec<String>>>, cfg: &LmConfig) -> Result<BTreeMap<String, TrigramModel>> {
    let vocab: BTreeSet<String> = groups.values().flatten().flatten().cloned().collect();
    let trained: Vec<Option<(String, TrigramModel)>> = groups
        .par_iter()
        .map(|(tag, sents)| {
            if sents.is_empty() {
                log::warn!("no training utterances for tag {tag}; model skipped");
                return Ok(None);
            }
            Ok(Some((tag.clone(), TrigramModel::train(sents, &vocab, cfg)?)))
        })
        .collect::<Result<_>>()?;
    Ok(trained.into_iter().flatten().collect())
}

/// Writes `<dir>/<tag>.arpa` per model; tag characters unsafe in file names
/// are percent-escaped.
pub fn save_models(models: &BTreeMap<String, TrigramModel>, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
    for (tag, m) in models {
        m.save_arpa(&dir.join(format!("{}.arpa", escape_tag(tag))))?;
    }
    Ok(())
}

pub fn load_models(dir: &Path) -> Result<BTreeMap<String, TrigramModel>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| crate::Error::io(dir, e))?;
    let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for p in paths {
        if p.extension().and_then(|e| e.to_str()) != Some("arpa") {
            continue;
        }
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        out.insert(unescape_tag(stem), TrigramModel::load_arpa(&p)?);
    }
    if out.is_empty() {
        return Err(crate::Error::invalid(format!("no .arpa models in {}", dir.display())));
    }
    Ok(out)
}

pub fn escape_tag(tag: &str) -> String {
    let mut s = String::new();
    for c in tag.chars() {
        if c.is_ascii_alphanumeric() || c == '_' || c == '-' && !s.is_empty() {
            s.push(c);
        } else {
            s.push_str(&format!("%{:02X}", c as u32));
        }
    }
    s
}

pub fn unescape_tag(name: &str) -> String {
    let bytes = name.as_bytes();
    let mut out = String::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Ok(v) = u8::from_str_radix(&name[i + 1..i + 3], 16) {
                out.push(v as char);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i] as char);
        i += 1;
    }
    out
}
