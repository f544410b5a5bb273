//! Katz backoff trigram models.
//!
//! Seen n-grams get Good-Turing discounted relative frequencies (counts up
//! to `gt_max`), the freed mass goes to lower orders through per-context
//! backoff weights. Probabilities are held in log10 as in ARPA files.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::{BOS, EOS, UNK};
use crate::error::{Error, Result};

/// log10 probability written for tokens that are never predicted.
pub const LOG10_ZERO: f64 = -99.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    /// Counts up to this value are Good-Turing discounted.
    pub gt_max: u32,
    /// Absolute discount used when Good-Turing is unusable.
    pub fallback_discount: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            gt_max: 5,
            fallback_discount: 0.5,
        }
    }
}

/// How seen counts of one order are discounted.
#[derive(Debug, Clone, PartialEq)]
pub enum Discount {
    /// Multiplicative factors `d[c-1]` for counts `1..=k`.
    GoodTuring(Vec<f64>),
    Absolute(f64),
}

impl Discount {
    /// Discounted count.
    pub fn apply(&self, c: u64) -> f64 {
        match self {
            Discount::GoodTuring(d) => match d.get(c as usize - 1) {
                Some(f) => f * c as f64,
                None => c as f64,
            },
            Discount::Absolute(d) => c as f64 - d,
        }
    }

    /// Katz discounts from count-of-counts, or `None` when unusable.
    pub fn good_turing(count_of_counts: &BTreeMap<u64, u64>, k: u32) -> Option<Self> {
        let n = |c: u64| count_of_counts.get(&c).copied().unwrap_or(0) as f64;
        let k = k as u64;
        if k == 0 {
            return Some(Discount::GoodTuring(Vec::new()));
        }
        if (1..=k + 1).any(|c| n(c) == 0.0) {
            return None;
        }
        let common = (k + 1) as f64 * n(k + 1) / n(1);
        if common >= 1.0 {
            return None;
        }
        let mut d = Vec::with_capacity(k as usize);
        for c in 1..=k {
            let cf = c as f64;
            let v = ((cf + 1.0) * n(c + 1) / (cf * n(c)) - common) / (1.0 - common);
            if !(v > 0.0 && v <= 1.0) {
                return None;
            }
            d.push(v);
        }
        Some(Discount::GoodTuring(d))
    }
}

/// Backoff trigram model over a closed vocabulary that always contains
/// `<s>`, `</s>` and `<unk>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigramModel {
    pub vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// log10 P(w), `LOG10_ZERO` for `<s>`.
    pub unigrams: Vec<f64>,
    pub bigrams: HashMap<(u32, u32), f64>,
    pub trigrams: HashMap<(u32, u32, u32), f64>,
    /// log10 backoff weights of unigram and bigram contexts.
    pub uni_backoff: HashMap<u32, f64>,
    pub bi_backoff: HashMap<(u32, u32), f64>,
}

type Counts = (
    BTreeMap<u32, u64>,
    BTreeMap<(u32, u32), u64>,
    BTreeMap<(u32, u32, u32), u64>,
);

impl TrigramModel {
    /// Trains on tokenised sentences. `extra_vocab` widens the vocabulary so
    /// models trained on different data share one word list.
    pub fn train(sentences: &[Vec<String>], extra_vocab: &BTreeSet<String>, cfg: &LmConfig) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::invalid("cannot train a language model on no sentences"));
        }
        if !(cfg.fallback_discount > 0.0 && cfg.fallback_discount < 1.0) {
            return Err(Error::invalid("fallback discount must lie in (0, 1)"));
        }
        let mut words: BTreeSet<String> = extra_vocab.clone();
        for s in sentences {
            words.extend(s.iter().cloned());
        }
        for sp in [BOS, EOS, UNK] {
            words.insert(sp.to_string());
        }
        let mut model = TrigramModel::with_vocab(words.into_iter().collect());
        let (c1, c2, c3) = model.count(sentences);
        model.estimate(&c1, &c2, &c3, cfg);
        Ok(model)
    }

    pub(crate) fn with_vocab(vocab: Vec<String>) -> Self {
        let index = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        TrigramModel {
            unigrams: vec![LOG10_ZERO; vocab.len()],
            vocab,
            index,
            bigrams: HashMap::new(),
            trigrams: HashMap::new(),
            uni_backoff: HashMap::new(),
            bi_backoff: HashMap::new(),
        }
    }

    pub fn id(&self, w: &str) -> u32 {
        self.index.get(w).copied().unwrap_or_else(|| self.index[UNK])
    }

    pub fn contains(&self, w: &str) -> bool {
        self.index.contains_key(w)
    }

    /// Token ids of a sentence wrapped in boundary tokens.
    pub fn wrap(&self, words: &[String]) -> Vec<u32> {
        let mut ids = Vec::with_capacity(words.len() + 2);
        ids.push(self.index[BOS]);
        ids.extend(words.iter().map(|w| self.id(w)));
        ids.push(self.index[EOS]);
        ids
    }

    fn count(&self, sentences: &[Vec<String>]) -> Counts {
        let mut c1 = BTreeMap::new();
        let mut c2 = BTreeMap::new();
        let mut c3 = BTreeMap::new();
        for s in sentences {
            let ids = self.wrap(s);
            for i in 1..ids.len() {
                *c1.entry(ids[i]).or_insert(0) += 1;
                *c2.entry((ids[i - 1], ids[i])).or_insert(0) += 1;
                if i >= 2 {
                    *c3.entry((ids[i - 2], ids[i - 1], ids[i])).or_insert(0) += 1;
                }
            }
        }
        (c1, c2, c3)
    }

    fn discount_for<K>(counts: &BTreeMap<K, u64>, order: usize, cfg: &LmConfig) -> Discount {
        let mut coc = BTreeMap::new();
        for &c in counts.values() {
            *coc.entry(c).or_insert(0u64) += 1;
        }
        Discount::good_turing(&coc, cfg.gt_max).unwrap_or_else(|| {
            log::info!(
                "order-{order} Good-Turing estimates unusable; using absolute discount {}",
                cfg.fallback_discount
            );
            Discount::Absolute(cfg.fallback_discount)
        })
    }

    fn estimate(&mut self, c1: &BTreeMap<u32, u64>, c2: &BTreeMap<(u32, u32), u64>, c3: &BTreeMap<(u32, u32, u32), u64>, cfg: &LmConfig) {
        let v = self.vocab.len();
        let bos = self.index[BOS];

        // unigrams: discounted mass to seen words, the rest shared by unseen ones
        let d1 = Self::discount_for(c1, 1, cfg);
        let total: u64 = c1.values().sum();
        let mut p1 = vec![0.0; v];
        for (&w, &c) in c1 {
            p1[w as usize] = d1.apply(c) / total as f64;
        }
        let seen: f64 = p1.iter().sum();
        let unseen: Vec<usize> = (0..v).filter(|&w| w as u32 != bos && !c1.contains_key(&(w as u32))).collect();
        if unseen.is_empty() {
            p1.iter_mut().for_each(|p| *p /= seen);
        } else {
            let share = (1.0 - seen) / unseen.len() as f64;
            for w in unseen {
                p1[w] = share;
            }
        }
        self.unigrams = p1
            .iter()
            .enumerate()
            .map(|(w, &p)| if w as u32 == bos || p <= 0.0 { LOG10_ZERO } else { p.log10() })
            .collect();

        // bigrams
        let d2 = Self::discount_for(c2, 2, cfg);
        let mut by_ctx: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
        for (&(h, w), &c) in c2 {
            by_ctx.entry(h).or_default().push((w, c));
        }
        for (h, seen) in by_ctx {
            let lower: Vec<f64> = seen.iter().map(|&(w, _)| p1[w as usize]).collect();
            let (probs, bo) = katz_context(&seen, &lower, &d2, cfg.fallback_discount);
            for ((w, _), p) in seen.iter().zip(probs) {
                self.bigrams.insert((h, *w), p.log10());
            }
            self.uni_backoff.insert(h, bo);
        }

        // trigrams
        let d3 = Self::discount_for(c3, 3, cfg);
        let mut by_ctx: BTreeMap<(u32, u32), Vec<(u32, u64)>> = BTreeMap::new();
        for (&(u, h, w), &c) in c3 {
            by_ctx.entry((u, h)).or_default().push((w, c));
        }
        for ((u, h), seen) in by_ctx {
            let lower: Vec<f64> = seen.iter().map(|&(w, _)| 10f64.powf(self.log10_bigram(h, w))).collect();
            let (probs, bo) = katz_context(&seen, &lower, &d3, cfg.fallback_discount);
            for ((w, _), p) in seen.iter().zip(probs) {
                self.trigrams.insert((u, h, *w), p.log10());
            }
            self.bi_backoff.insert((u, h), bo);
        }
    }

    fn log10_bigram(&self, h: u32, w: u32) -> f64 {
        match self.bigrams.get(&(h, w)) {
            Some(&p) => p,
            None => self.uni_backoff.get(&h).copied().unwrap_or(0.0) + self.unigrams[w as usize],
        }
    }

    /// log10 P(w | history); only the last two history tokens matter.
    pub fn log10_prob(&self, history: &[u32], w: u32) -> f64 {
        match *history {
            [] => self.unigrams[w as usize],
            [h] => self.log10_bigram(h, w),
            [.., u, h] => match self.trigrams.get(&(u, h, w)) {
                Some(&p) => p,
                None => self.bi_backoff.get(&(u, h)).copied().unwrap_or(0.0) + self.log10_bigram(h, w),
            },
        }
    }

    /// P(w | history) on the linear scale.
    pub fn prob(&self, history: &[&str], w: &str) -> f64 {
        let h: Vec<u32> = history.iter().map(|t| self.id(t)).collect();
        10f64.powf(self.log10_prob(&h, self.id(w)))
    }

    /// Natural-log likelihood of a sentence including the end token.
    pub fn ln_sentence(&self, words: &[String]) -> f64 {
        let ids = self.wrap(words);
        let mut total = 0.0;
        for i in 1..ids.len() {
            let lo = i.saturating_sub(2);
            total += self.log10_prob(&ids[lo..i], ids[i]);
        }
        total * std::f64::consts::LN_10
    }

    /// Words that can be predicted (everything but `<s>`).
    pub fn predictable(&self) -> impl Iterator<Item = u32> + '_ {
        let bos = self.index[BOS];
        (0..self.vocab.len() as u32).filter(move |&w| w != bos)
    }
}

/// Probabilities of the seen words of one context and the log10 backoff
/// weight. Falls back to absolute discounting in this context when the
/// order-wide discount leaves no mass, and renormalises the seen words when
/// the lower order already gives them everything.
fn katz_context(seen: &[(u32, u64)], lower: &[f64], d: &Discount, fallback: f64) -> (Vec<f64>, f64) {
    let total: u64 = seen.iter().map(|s| s.1).sum();
    let mut probs: Vec<f64> = seen.iter().map(|&(_, c)| d.apply(c) / total as f64).collect();
    let mut left = 1.0 - probs.iter().sum::<f64>();
    if left <= 1e-12 {
        let abs = Discount::Absolute(fallback);
        probs = seen.iter().map(|&(_, c)| abs.apply(c) / total as f64).collect();
        left = 1.0 - probs.iter().sum::<f64>();
    }
    let lower_left = 1.0 - lower.iter().sum::<f64>();
    if lower_left <= 1e-12 {
        let s: f64 = probs.iter().sum();
        return (probs.into_iter().map(|p| p / s).collect(), LOG10_ZERO);
    }
    (probs, (left / lower_left).log10())
}
