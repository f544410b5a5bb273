mod support;

use std::collections::{BTreeMap, BTreeSet};

use prosact_core::lm::{
    nbest_likelihood, Discount, parse_nbest, train_lm, ClassMixture, LmConfig, NBestList, TrigramModel, DEFAULT_ACOUSTIC_SCALE,
};
use support::katz_oracle::Oracle;

fn owned(s: &[Vec<&str>]) -> Vec<Vec<String>> {
    s.iter().map(|v| v.iter().map(|w| w.to_string()).collect()).collect()
}

fn small_corpus() -> Vec<Vec<&'static str>> {
    [
        "i think so",
        "i think that is right",
        "do you think so",
        "yeah i know",
        "i know that",
        "yeah",
        "yeah right",
        "is that right",
        "you know i think so",
        "that is so right",
    ]
    .iter()
    .map(|s| s.split(' ').collect())
    .collect()
}

fn compare(sents: &[Vec<&str>]) -> (TrigramModel, Oracle) {
    let model = TrigramModel::train(&owned(sents), &BTreeSet::new(), &LmConfig::default()).unwrap();
    let oracle = Oracle::new(sents);
    assert_eq!(model.vocab, oracle.vocab);
    let v: Vec<&str> = oracle.vocab.iter().map(String::as_str).collect();
    for &u in &v {
        for &h in &v {
            for &w in &v {
                if w == "<s>" || h == "</s>" || u == "</s>" {
                    continue;
                }
                let a = model.prob(&[u, h], w);
                let b = oracle.prob(&[u, h], w);
                assert!((a - b).abs() <= 1e-9, "P({w}|{u} {h}) = {a} vs oracle {b}");
            }
            if h != "</s>" && u != "<s>" {
                let a = model.prob(&[h], u);
                let b = oracle.prob(&[h], u);
                assert!((a - b).abs() <= 1e-9, "P({u}|{h}) = {a} vs oracle {b}");
            }
        }
    }
    (model, oracle)
}

#[test]
fn small_corpus_matches_oracle() {
    let sents = small_corpus();
    let tokens: usize = sents.iter().map(|s| s.len()).sum();
    assert!(tokens <= 50);
    compare(&sents);
}

#[test]
fn repeated_pair_discounts_certain_bigram() {
    let sents = vec![vec!["a", "b"]; 3];
    let (model, _) = compare(&sents);
    // seen three times out of three, but mass is reserved for backoff
    let p = model.prob(&["a"], "b");
    assert!(p < 1.0 && p > 0.5, "{p}");
    assert!(model.prob(&["a"], "zzz") > 0.0);
    assert!(model.ln_sentence(&["a".into(), "b".into()]).is_finite());
}

/// Zipf-distributed sentences from a fixed linear congruential sequence.
fn zipf_corpus(sentences: usize, vocab: usize) -> Vec<Vec<String>> {
    let mut x: u64 = 12345;
    let mut next = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (x >> 33) as f64 / (1u64 << 31) as f64
    };
    let weights: Vec<f64> = (1..=vocab).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    (0..sentences)
        .map(|_| {
            let len = 1 + (next() * 6.0) as usize;
            (0..len)
                .map(|_| {
                    let mut u = next() * total;
                    let mut k = 0;
                    while u > weights[k] && k + 1 < vocab {
                        u -= weights[k];
                        k += 1;
                    }
                    format!("w{k}")
                })
                .collect()
        })
        .collect()
}

fn order_uses_good_turing(sents: &[Vec<String>], n: usize) -> bool {
    let mut counts: BTreeMap<Vec<&str>, u64> = BTreeMap::new();
    for s in sents {
        let mut t = vec!["<s>"];
        t.extend(s.iter().map(String::as_str));
        t.push("</s>");
        for e in 1..t.len() {
            if e + 1 >= n {
                *counts.entry(t[e + 1 - n..=e].to_vec()).or_default() += 1;
            }
        }
    }
    let mut coc = BTreeMap::new();
    for &c in counts.values() {
        *coc.entry(c).or_insert(0u64) += 1;
    }
    Discount::good_turing(&coc, 5).is_some()
}

/// Compares every word after the first `limit` observed histories of
/// `order - 1` words.
fn compare_observed(sents: &[Vec<String>], order: usize, limit: usize) {
    let refs: Vec<Vec<&str>> = sents.iter().map(|s| s.iter().map(String::as_str).collect()).collect();
    let model = TrigramModel::train(sents, &BTreeSet::new(), &LmConfig::default()).unwrap();
    let oracle = Oracle::new(&refs);
    let mut histories = BTreeSet::new();
    for s in &refs {
        let mut t = vec!["<s>"];
        t.extend(s.iter().copied());
        for w in t.windows(order - 1) {
            histories.insert(w.to_vec());
        }
    }
    for h in histories.into_iter().take(limit) {
        for w in oracle.vocab.iter().filter(|w| *w != "<s>") {
            let a = model.prob(&h, w);
            let b = oracle.prob(&h, w);
            assert!((a - b).abs() <= 1e-9, "P({w}|{h:?}) = {a} vs oracle {b}");
        }
    }
}

#[test]
fn good_turing_trigrams_match_oracle() {
    let sents = zipf_corpus(150, 40);
    assert!(order_uses_good_turing(&sents, 3));
    compare_observed(&sents, 3, 12);
}

#[test]
fn good_turing_bigrams_match_oracle() {
    let sents = zipf_corpus(400, 100);
    assert!(order_uses_good_turing(&sents, 2));
    compare_observed(&sents, 2, 40);
}

fn check_normalization(model: &TrigramModel) {
    let words: Vec<String> = model.vocab.clone();
    let targets: Vec<&str> = words.iter().filter(|w| *w != "<s>").map(String::as_str).collect();
    let histories: Vec<Vec<&str>> = std::iter::once(vec![])
        .chain(words.iter().map(|h| vec![h.as_str()]))
        .chain(words.iter().flat_map(|u| words.iter().map(move |h| vec![u.as_str(), h.as_str()])))
        .filter(|h| !h.contains(&"</s>"))
        .collect();
    for h in histories {
        let s: f64 = targets.iter().map(|w| model.prob(&h, w)).sum();
        assert!((s - 1.0).abs() < 1e-6, "context {h:?} sums to {s}");
    }
}

#[test]
fn every_context_normalizes() {
    let (model, _) = compare(&small_corpus());
    check_normalization(&model);
}

#[test]
fn shared_vocabulary_models_normalize() {
    let mut groups = BTreeMap::new();
    groups.insert("sd".to_string(), owned(&small_corpus()[..5]));
    groups.insert("qy".to_string(), owned(&small_corpus()[5..]));
    groups.insert("empty".to_string(), vec![]);
    let models = train_lm(&groups, &LmConfig::default()).unwrap();
    assert_eq!(models.len(), 2);
    assert_eq!(models["sd"].vocab, models["qy"].vocab);
    for m in models.values() {
        check_normalization(m);
    }
}

#[test]
fn arpa_round_trip() {
    let (model, _) = compare(&small_corpus());
    let text = model.to_arpa();
    let back = TrigramModel::from_arpa(&text, "mem").unwrap();
    assert_eq!(back.vocab, model.vocab);
    for (k, v) in &model.trigrams {
        assert!((back.trigrams[k] - v).abs() < 1e-6);
    }
    for (k, v) in &model.bigrams {
        assert!((back.bigrams[k] - v).abs() < 1e-6);
    }
    for (a, b) in back.unigrams.iter().zip(&model.unigrams) {
        assert!((a - b).abs() < 1e-6);
    }
    assert_eq!(back.to_arpa(), text);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.arpa");
    model.save_arpa(&p).unwrap();
    assert_eq!(TrigramModel::load_arpa(&p).unwrap(), model);
}

#[test]
fn malformed_arpa_reports_line() {
    let text = TrigramModel::train(&owned(&small_corpus()), &BTreeSet::new(), &LmConfig::default())
        .unwrap()
        .to_arpa()
        .replacen("\\2-grams:\n", "\\2-grams:\nnot-a-number a b\n", 1);
    let err = TrigramModel::from_arpa(&text, "bad.arpa").unwrap_err().to_string();
    assert!(err.starts_with("bad.arpa:"), "{err}");
}

fn two_class_models() -> (BTreeMap<String, TrigramModel>, Vec<ClassMixture>) {
    let mut groups = BTreeMap::new();
    groups.insert("x".to_string(), owned(&[vec!["yes", "yes", "ok"], vec!["yes", "ok"]]));
    groups.insert("y".to_string(), owned(&[vec!["no", "way"], vec!["no", "no", "way"]]));
    let models = train_lm(&groups, &LmConfig::default()).unwrap();
    let mixtures = vec![
        ClassMixture::from_counts("X", &[("x", 1.0)]).unwrap(),
        ClassMixture::from_counts("Y", &[("y", 1.0)]).unwrap(),
    ];
    (models, mixtures)
}

#[test]
fn nbest_hand_computed() {
    let (models, mixtures) = two_class_models();
    let list = parse_nbest("u1 1 -10 yes ok\nu1 2 -14 no way\n", "mem").unwrap().remove(0);
    let got = nbest_likelihood(&models, &mixtures, &list, 0.5).unwrap();
    for (c, tag) in ["x", "y"].iter().enumerate() {
        let m = &models[*tag];
        let a = (0.5 * -10.0 + m.ln_sentence(&["yes".into(), "ok".into()])).exp();
        let b = (0.5 * -14.0 + m.ln_sentence(&["no".into(), "way".into()])).exp();
        assert!((got[c] - (a + b).ln()).abs() < 1e-9);
    }
}

#[test]
fn nbest_order_and_duplicates() {
    let (models, mixtures) = two_class_models();
    let lists = parse_nbest("u 1 -3 yes ok\nu 2 -4 no way\nu 3 -9 yes\n", "mem").unwrap();
    let base = nbest_likelihood(&models, &mixtures, &lists[0], DEFAULT_ACOUSTIC_SCALE).unwrap();
    let mut rev = lists[0].clone();
    rev.hypotheses.reverse();
    assert_eq!(nbest_likelihood(&models, &mixtures, &rev, DEFAULT_ACOUSTIC_SCALE).unwrap(), base);

    let one = NBestList {
        utt_id: "u".into(),
        hypotheses: vec![lists[0].hypotheses[0].clone()],
    };
    let mut twice = one.clone();
    twice.hypotheses.push(one.hypotheses[0].clone());
    let a = nbest_likelihood(&models, &mixtures, &one, 1.0).unwrap();
    let b = nbest_likelihood(&models, &mixtures, &twice, 1.0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((y - x - 2f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn nbest_parse_errors() {
    assert!(parse_nbest("u 2 -1 a\nu 1 -1 b\n", "f").is_err());
    assert!(parse_nbest("u x -1 a\n", "f").is_err());
    assert!(parse_nbest("u 1 inf a\n", "f").is_err());
}
