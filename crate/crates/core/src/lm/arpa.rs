use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::katz::{TrigramModel, LOG10_ZERO};
use super::tokenize::{BOS, EOS, UNK};
use crate::error::{Error, Result};
use crate::fsutil::{fmt_f64, read_to_string, write_atomic};

impl TrigramModel {
    /// ARPA backoff text. Entries are sorted by word string for stable output.
    pub fn to_arpa(&self) -> String {
        let w = |i: u32| self.vocab[i as usize].as_str();
        let mut bi: Vec<(&(u32, u32), &f64)> = self.bigrams.iter().collect();
        bi.sort_by(|a, b| (w(a.0 .0), w(a.0 .1)).cmp(&(w(b.0 .0), w(b.0 .1))));
        let mut tri: Vec<(&(u32, u32, u32), &f64)> = self.trigrams.iter().collect();
        tri.sort_by(|a, b| (w(a.0 .0), w(a.0 .1), w(a.0 .2)).cmp(&(w(b.0 .0), w(b.0 .1), w(b.0 .2))));

        let mut out = String::new();
        let _ = writeln!(out, "\n\\data\\");
        let _ = writeln!(out, "ngram 1={}", self.vocab.len());
        let _ = writeln!(out, "ngram 2={}", bi.len());
        let _ = writeln!(out, "ngram 3={}", tri.len());
        let _ = writeln!(out, "\n\\1-grams:");
        let mut uni: Vec<u32> = (0..self.vocab.len() as u32).collect();
        uni.sort_by_key(|&i| w(i));
        for i in uni {
            let _ = write!(out, "{}\t{}", fmt_f64(self.unigrams[i as usize]), w(i));
            if let Some(bo) = self.uni_backoff.get(&i) {
                let _ = write!(out, "\t{}", fmt_f64(*bo));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\n\\2-grams:");
        for (&(a, b), p) in bi {
            let _ = write!(out, "{}\t{} {}", fmt_f64(*p), w(a), w(b));
            if let Some(bo) = self.bi_backoff.get(&(a, b)) {
                let _ = write!(out, "\t{}", fmt_f64(*bo));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "\n\\3-grams:");
        for (&(a, b, c), p) in tri {
            let _ = writeln!(out, "{}\t{} {} {}", fmt_f64(*p), w(a), w(b), w(c));
        }
        let _ = writeln!(out, "\n\\end\\");
        out
    }

    pub fn from_arpa(text: &str, file: &str) -> Result<Self> {
        let mut section = 0usize;
        let mut uni: Vec<(String, f64, Option<f64>)> = Vec::new();
        let mut bi: Vec<(String, String, f64, Option<f64>)> = Vec::new();
        let mut tri: Vec<(String, String, String, f64)> = Vec::new();
        let mut ended = false;
        for (ln, line) in text.lines().enumerate() {
            let ln = ln as u64 + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "\\data\\" => {
                    section = 0;
                    continue;
                }
                "\\1-grams:" => {
                    section = 1;
                    continue;
                }
                "\\2-grams:" => {
                    section = 2;
                    continue;
                }
                "\\3-grams:" => {
                    section = 3;
                    continue;
                }
                "\\end\\" => {
                    ended = true;
                    break;
                }
                _ => {}
            }
            if section == 0 {
                if !line.starts_with("ngram ") {
                    return Err(Error::malformed(file, ln, "expected an ngram count line"));
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::malformed(file, ln, format!("bad number {s:?}")))
            };
            let n = section;
            if fields.len() != n + 1 && fields.len() != n + 2 {
                return Err(Error::malformed(file, ln, format!("expected {n} words and a probability")));
            }
            let p = num(fields[0])?;
            let bo = if fields.len() == n + 2 { Some(num(fields[n + 1])?) } else { None };
            match n {
                1 => uni.push((fields[1].to_string(), p, bo)),
                2 => bi.push((fields[1].to_string(), fields[2].to_string(), p, bo)),
                _ => {
                    if bo.is_some() {
                        return Err(Error::malformed(file, ln, "trigrams carry no backoff weight"));
                    }
                    tri.push((fields[1].to_string(), fields[2].to_string(), fields[3].to_string(), p))
                }
            }
        }
        if !ended {
            return Err(Error::malformed(file, text.lines().count() as u64, "missing \\end\\ marker"));
        }
        let mut vocab: Vec<String> = uni.iter().map(|u| u.0.clone()).collect();
        for sp in [BOS, EOS, UNK] {
            if !vocab.iter().any(|v| v == sp) {
                return Err(Error::malformed(file, 0, format!("vocabulary lacks {sp}")));
            }
        }
        vocab.sort();
        vocab.dedup();
        let mut m = TrigramModel::with_vocab(vocab);
        let id = |m: &TrigramModel, w: &str, ln: u64| -> Result<u32> {
            if m.contains(w) {
                Ok(m.id(w))
            } else {
                Err(Error::malformed(file, ln, format!("word {w:?} not in the unigram list")))
            }
        };
        for (w, p, bo) in &uni {
            let i = id(&m, w, 0)?;
            m.unigrams[i as usize] = if *p <= LOG10_ZERO { LOG10_ZERO } else { *p };
            if let Some(bo) = bo {
                m.uni_backoff.insert(i, *bo);
            }
        }
        let mut bigrams = HashMap::new();
        for (a, b, p, bo) in &bi {
            let k = (id(&m, a, 0)?, id(&m, b, 0)?);
            bigrams.insert(k, *p);
            if let Some(bo) = bo {
                m.bi_backoff.insert(k, *bo);
            }
        }
        m.bigrams = bigrams;
        for (a, b, c, p) in &tri {
            let k = (id(&m, a, 0)?, id(&m, b, 0)?, id(&m, c, 0)?);
            m.trigrams.insert(k, *p);
        }
        Ok(m)
    }

    pub fn save_arpa(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_arpa().as_bytes())
    }

    pub fn load_arpa(path: &Path) -> Result<Self> {
        Self::from_arpa(&read_to_string(path)?, &path.display().to_string())
    }
}
