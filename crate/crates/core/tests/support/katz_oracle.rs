//! Direct Katz backoff evaluation from raw sentences. Every query rescans
//! the counts and re-sums over the vocabulary; nothing is cached, so it
//! shares no code paths with the library trainer.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

pub struct Oracle {
    pub vocab: Vec<String>,
    grams: [BTreeMap<Vec<String>, u64>; 3],
    discounts: [Disc; 3],
}

#[derive(Clone, Debug)]
enum Disc {
    Gt(Vec<f64>),
    Abs(f64),
}

impl Disc {
    fn of(&self, c: u64) -> f64 {
        match self {
            Disc::Gt(d) => {
                if (c as usize) <= d.len() {
                    d[c as usize - 1] * c as f64
                } else {
                    c as f64
                }
            }
            Disc::Abs(d) => c as f64 - d,
        }
    }
}

fn choose_discount(counts: &BTreeMap<Vec<String>, u64>, k: u64) -> Disc {
    let n = |r: u64| counts.values().filter(|&&c| c == r).count() as f64;
    let fallback = Disc::Abs(0.5);
    if (1..=k + 1).any(|r| n(r) == 0.0) {
        return fallback;
    }
    let a = (k + 1) as f64 * n(k + 1) / n(1);
    if a >= 1.0 {
        return fallback;
    }
    let mut d = Vec::new();
    for r in 1..=k {
        let rs = r as f64;
        let v = ((rs + 1.0) * n(r + 1) / (rs * n(r)) - a) / (1.0 - a);
        if v <= 0.0 || v > 1.0 {
            return fallback;
        }
        d.push(v);
    }
    Disc::Gt(d)
}

impl Oracle {
    pub fn new(sentences: &[Vec<&str>]) -> Self {
        let mut vocab: BTreeSet<String> = ["<s>", "</s>", "<unk>"].iter().map(|s| s.to_string()).collect();
        let mut grams: [BTreeMap<Vec<String>, u64>; 3] = Default::default();
        for s in sentences {
            let mut toks = vec!["<s>".to_string()];
            toks.extend(s.iter().map(|w| w.to_string()));
            toks.push("</s>".to_string());
            vocab.extend(toks.iter().cloned());
            for end in 1..toks.len() {
                for n in 1..=3usize {
                    if end + 1 >= n {
                        *grams[n - 1].entry(toks[end + 1 - n..=end].to_vec()).or_default() += 1;
                    }
                }
            }
        }
        let discounts = [
            choose_discount(&grams[0], 5),
            choose_discount(&grams[1], 5),
            choose_discount(&grams[2], 5),
        ];
        Oracle {
            vocab: vocab.into_iter().collect(),
            grams,
            discounts,
        }
    }

    fn count(&self, gram: &[String]) -> u64 {
        self.grams[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    fn targets(&self) -> impl Iterator<Item = &String> {
        self.vocab.iter().filter(|w| w.as_str() != "<s>")
    }

    fn unigram(&self, w: &str) -> f64 {
        if w == "<s>" {
            return 0.0;
        }
        let total: u64 = self.targets().map(|x| self.count(std::slice::from_ref(x))).sum();
        let seen_p = |x: &String| self.discounts[0].of(self.count(std::slice::from_ref(x))) / total as f64;
        let seen: Vec<&String> = self.targets().filter(|x| self.count(&[(*x).clone()]) > 0).collect();
        let unseen = self.targets().count() - seen.len();
        let c = self.count(&[w.to_string()]);
        let mass: f64 = seen.iter().map(|x| seen_p(x)).sum();
        if c > 0 {
            if unseen == 0 {
                seen_p(&w.to_string()) / mass
            } else {
                seen_p(&w.to_string())
            }
        } else {
            (1.0 - mass) / unseen as f64
        }
    }

    /// P(w | history) with history of length 0, 1 or 2.
    pub fn prob(&self, history: &[&str], w: &str) -> f64 {
        if history.is_empty() {
            return self.unigram(w);
        }
        let lower = |x: &str| self.prob(&history[1..], x);
        let ctx: Vec<String> = history.iter().map(|s| s.to_string()).collect();
        let gram = |x: &str| {
            let mut g = ctx.clone();
            g.push(x.to_string());
            g
        };
        let n = history.len();
        let ctx_total: u64 = self.targets().map(|x| self.count(&gram(x))).sum();
        if ctx_total == 0 {
            return lower(w);
        }
        let seen: Vec<&String> = self.targets().filter(|x| self.count(&gram(x)) > 0).collect();
        let mut disc = self.discounts[n].clone();
        let mut seen_mass: f64 = seen.iter().map(|x| disc.of(self.count(&gram(x))) / ctx_total as f64).sum();
        if 1.0 - seen_mass <= 1e-12 {
            disc = Disc::Abs(0.5);
            seen_mass = seen.iter().map(|x| disc.of(self.count(&gram(x))) / ctx_total as f64).sum();
        }
        let lower_seen: f64 = seen.iter().map(|x| lower(x)).sum();
        let c = self.count(&gram(w));
        if 1.0 - lower_seen <= 1e-12 {
            return if c > 0 {
                disc.of(c) / ctx_total as f64 / seen_mass
            } else {
                0.0
            };
        }
        if c > 0 {
            disc.of(c) / ctx_total as f64
        } else {
            (1.0 - seen_mass) / (1.0 - lower_seen) * lower(w)
        }
    }
}
