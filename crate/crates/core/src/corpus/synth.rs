//! Seeded generator of labelled synthetic corpora with class-conditional
//! prosody and word grammars. Output goes through the same data model (and
//! file formats) as real corpora.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal as Gaussian, Poisson};
use serde::{Deserialize, Serialize};

use super::{
    span_frames, Channel, ConversationSide, Corpus, FrameTrack, Gender, Splits, TagMap,
    Utterance, Word, FRAME_PERIOD,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal {
    pub mean: f64,
    pub sd: f64,
}

impl Normal {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Normal { mean, sd }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.sd <= 0.0 {
            return self.mean;
        }
        Gaussian::new(self.mean, self.sd)
            .expect("finite normal parameters")
            .sample(rng)
    }
}

/// Unigram weights plus optional weighted bigram continuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordGrammar {
    pub unigrams: Vec<(String, f64)>,
    #[serde(default)]
    pub bigrams: Vec<(String, String, f64)>,
    /// Probability of following a bigram continuation when one exists.
    #[serde(default = "default_bigram_prob")]
    pub bigram_prob: f64,
}

fn default_bigram_prob() -> f64 {
    0.5
}

impl WordGrammar {
    fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<String> {
        let mut out: Vec<String> = Vec::with_capacity(n);
        for _ in 0..n {
            let cont: Vec<&(String, String, f64)> = match out.last() {
                Some(prev) => self.bigrams.iter().filter(|b| &b.0 == prev).collect(),
                None => Vec::new(),
            };
            let w = if !cont.is_empty() && rng.random::<f64>() < self.bigram_prob {
                weighted_pick(cont.iter().map(|b| (&b.1, b.2)), rng)
            } else {
                weighted_pick(self.unigrams.iter().map(|u| (&u.0, u.1)), rng)
            };
            out.push(w.clone());
        }
        out
    }
}

fn weighted_pick<'a, T>(items: impl Iterator<Item = (&'a T, f64)> + Clone, rng: &mut impl Rng) -> &'a T {
    let total: f64 = items.clone().map(|(_, w)| w.max(0.0)).sum();
    let mut x = rng.random::<f64>() * total;
    let mut last = None;
    for (item, w) in items {
        let w = w.max(0.0);
        last = Some(item);
        if x < w {
            return item;
        }
        x -= w;
    }
    last.expect("non-empty weighted choice")
}

/// Generative parameters of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// Dialog-act tags emitted for this class, with relative weights.
    pub tags: Vec<(String, f64)>,
    pub count: usize,
    /// Utterance duration in seconds.
    pub duration: Normal,
    /// F0 slope over the final 200 ms, Hz/s.
    pub end_grad: Normal,
    /// RMS level of speech frames.
    pub energy: Normal,
    /// Pauses (>= 100 ms) per second of utterance.
    pub pause_rate: Normal,
    pub grammar: WordGrammar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub trn: f64,
    pub hld: f64,
    pub dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<ClassSpec>,
    #[serde(default = "default_per_side")]
    pub utterances_per_side: usize,
    #[serde(default = "default_split")]
    pub split: SplitFractions,
    /// Per-frame F0 jitter, Hz.
    #[serde(default = "default_f0_noise")]
    pub f0_noise_hz: f64,
    /// Probability that a speech frame is unvoiced.
    #[serde(default = "default_unvoiced")]
    pub unvoiced_rate: f64,
    #[serde(default = "default_min_duration")]
    pub min_duration: f64,
}

fn default_per_side() -> usize {
    25
}
fn default_split() -> SplitFractions {
    SplitFractions {
        trn: 0.7,
        hld: 0.3,
        dev: 0.0,
    }
}
fn default_f0_noise() -> f64 {
    3.0
}
fn default_unvoiced() -> f64 {
    0.15
}
fn default_min_duration() -> f64 {
    0.3
}

fn grammar(own: &[&str], shared: &[&str], own_weight: f64) -> WordGrammar {
    let mut unigrams: Vec<(String, f64)> = own
        .iter()
        .map(|w| (w.to_string(), own_weight / own.len() as f64))
        .collect();
    unigrams.extend(
        shared
            .iter()
            .map(|w| (w.to_string(), (1.0 - own_weight) / shared.len() as f64)),
    );
    let bigrams = own
        .windows(2)
        .map(|p| (p[0].to_string(), p[1].to_string(), 1.0))
        .collect();
    WordGrammar {
        unigrams,
        bigrams,
        bigram_prob: 0.5,
    }
}

const SHARED_WORDS: &[&str] = &[
    "i", "you", "the", "a", "and", "it", "that", "uh", "um", "know", "like", "so", "well", "is",
    "to", "of", "we", "they", "yeah", "right",
];

impl SynthSpec {
    /// Seven classes (Statement, Question, Backchannel, Incomplete, Agreement,
    /// Appreciation, Other). Duration, energy and pause rate all encode the
    /// same four-way partition {S,Q} {I,O} {A,P} {B}; only the end-of-utterance
    /// F0 slope separates the classes inside each pair. Word grammars overlap.
    pub fn seven_class(per_class: usize) -> Self {
        struct Row {
            tag: &'static str,
            dur: f64,
            grad: f64,
            nrg: f64,
            pause: f64,
            words: [&'static str; 6],
        }
        let rows = [
            Row { tag: "sd", dur: 3.2, grad: -200.0, nrg: 0.8, pause: 1.2, words: ["think", "job", "house", "work", "years", "kids"] },
            Row { tag: "qy", dur: 3.2, grad: 200.0, nrg: 0.8, pause: 1.2, words: ["do", "have", "did", "does", "any", "ever"] },
            Row { tag: "b", dur: 0.8, grad: 0.0, nrg: 0.1, pause: 0.0, words: ["uh-huh", "yeah", "mhm", "right", "oh", "okay"] },
            Row { tag: "%-", dur: 2.2, grad: 200.0, nrg: 0.4, pause: 0.7, words: ["but", "then", "because", "if", "when", "or"] },
            Row { tag: "aa", dur: 1.4, grad: -200.0, nrg: 0.2, pause: 0.3, words: ["exactly", "yeah", "true", "agree", "sure", "right"] },
            Row { tag: "ba", dur: 1.4, grad: 200.0, nrg: 0.2, pause: 0.3, words: ["wow", "great", "nice", "imagine", "neat", "good"] },
            Row { tag: "h", dur: 2.2, grad: -200.0, nrg: 0.4, pause: 0.7, words: ["maybe", "guess", "sense", "sort", "kind", "dunno"] },
        ];
        let classes = rows
            .iter()
            .map(|r| ClassSpec {
                tags: vec![(r.tag.to_string(), 1.0)],
                count: per_class,
                duration: Normal::new(r.dur, 0.06 * r.dur),
                end_grad: Normal::new(r.grad, 120.0),
                energy: Normal::new(r.nrg, 0.1 * r.nrg),
                pause_rate: Normal::new(r.pause, 0.1 * r.pause),
                grammar: grammar(&r.words, SHARED_WORDS, 0.35),
            })
            .collect();
        SynthSpec {
            classes,
            utterances_per_side: default_per_side(),
            split: default_split(),
            f0_noise_hz: default_f0_noise(),
            unvoiced_rate: default_unvoiced(),
            min_duration: default_min_duration(),
        }
    }

    /// Two classes that differ only in the given parameters; words are shared.
    pub fn two_class(per_class: usize, a: (&str, Normal, Normal), b: (&str, Normal, Normal)) -> Self {
        let mk = |(tag, dur, grad): (&str, Normal, Normal)| ClassSpec {
            tags: vec![(tag.to_string(), 1.0)],
            count: per_class,
            duration: dur,
            end_grad: grad,
            energy: Normal::new(0.3, 0.03),
            pause_rate: Normal::new(0.3, 0.0),
            grammar: grammar(&[], SHARED_WORDS, 0.0),
        };
        SynthSpec {
            classes: vec![mk(a), mk(b)],
            utterances_per_side: default_per_side(),
            split: default_split(),
            f0_noise_hz: default_f0_noise(),
            unvoiced_rate: default_unvoiced(),
            min_duration: default_min_duration(),
        }
    }

    fn check(&self, tags: &TagMap) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::invalid("synthetic spec has no classes"));
        }
        if self.utterances_per_side == 0 {
            return Err(Error::invalid("utterances_per_side must be positive"));
        }
        for (i, c) in self.classes.iter().enumerate() {
            if c.tags.is_empty() || c.grammar.unigrams.is_empty() {
                return Err(Error::invalid(format!("class {i} needs tags and a unigram grammar")));
            }
            for (t, _) in &c.tags {
                tags.class_of(t)?;
            }
        }
        for i in 0..self.classes.len() {
            for j in i + 1..self.classes.len() {
                let (a, b) = (&self.classes[i], &self.classes[j]);
                if a.duration == b.duration
                    && a.end_grad == b.end_grad
                    && a.energy == b.energy
                    && a.pause_rate == b.pause_rate
                    && a.grammar == b.grammar
                {
                    log::warn!("synthetic classes {i} and {j} have identical generative parameters");
                }
            }
        }
        Ok(())
    }
}

struct Speaker {
    gender: Gender,
    base_f0: f64,
    syllable_hz: f64,
}

/// Generates a corpus deterministically from `seed`.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<Corpus> {
    synth_corpus_with(spec, seed, &TagMap::builtin())
}

pub fn synth_corpus_with(spec: &SynthSpec, seed: u64, tags: &TagMap) -> Result<Corpus> {
    spec.check(tags)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = spec
        .classes
        .iter()
        .enumerate()
        .flat_map(|(i, c)| std::iter::repeat_n(i, c.count))
        .collect();
    order.shuffle(&mut rng);

    let mut sides = Vec::new();
    let chunks: Vec<&[usize]> = order.chunks(spec.utterances_per_side).collect();
    let mut genders = Vec::with_capacity(chunks.len() + 1);
    for _ in 0..chunks.len() + 1 {
        genders.push(if rng.random::<bool>() { Gender::F } else { Gender::M });
    }
    for (n, chunk) in chunks.iter().enumerate() {
        let conv = n / 2;
        let channel = if n % 2 == 0 { Channel::A } else { Channel::B };
        let partner = if n % 2 == 0 { n + 1 } else { n - 1 };
        let gender = genders[n];
        let speaker = Speaker {
            gender,
            base_f0: match gender {
                Gender::M => Normal::new(115.0, 10.0).sample(&mut rng),
                Gender::F => Normal::new(210.0, 15.0).sample(&mut rng),
            },
            syllable_hz: rng.random_range(3.5..5.5),
        };
        let conv_id = format!("sw{conv:04}");
        let side = synth_side(spec, tags, &speaker, chunk, &conv_id, channel, &mut rng)?;
        sides.push(ConversationSide {
            listener_gender: genders[partner],
            speaker_id: Some(format!("spk{n:04}")),
            ..side
        });
    }

    let mut convs: Vec<String> = sides.iter().map(|s| s.conv_id.clone()).collect();
    convs.dedup();
    convs.shuffle(&mut rng);
    let total = spec.split.trn + spec.split.hld + spec.split.dev;
    let n_trn = ((spec.split.trn / total) * convs.len() as f64).round() as usize;
    let n_hld = ((spec.split.hld / total) * convs.len() as f64).round() as usize;
    let mut assignment = BTreeMap::new();
    for (i, c) in convs.iter().enumerate() {
        let name = if i < n_trn {
            super::SplitName::TRN
        } else if i < n_trn + n_hld {
            super::SplitName::HLD
        } else {
            super::SplitName::DEV
        };
        assignment.insert(c.clone(), name);
    }
    let mut splits = Splits::default();
    for s in &sides {
        splits.get_mut(assignment[&s.conv_id]).insert(s.key());
    }

    let corpus = Corpus {
        sides,
        splits: Some(splits),
    };
    corpus.validate()?;
    Ok(corpus)
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

fn synth_side(
    spec: &SynthSpec,
    tags: &TagMap,
    speaker: &Speaker,
    classes: &[usize],
    conv_id: &str,
    channel: Channel,
    rng: &mut ChaCha8Rng,
) -> Result<ConversationSide> {
    struct Planned {
        utt: Utterance,
        grad: f64,
        energy: f64,
    }
    let mut planned = Vec::new();
    let mut t = round_ms(rng.random_range(0.3..1.5));
    for (k, &ci) in classes.iter().enumerate() {
        let c = &spec.classes[ci];
        let tag = weighted_pick(c.tags.iter().map(|(t, w)| (t, *w)), rng).clone();
        let da_class = tags.class_of(&tag)?.to_string();
        let dur = round_ms(c.duration.sample(rng).max(spec.min_duration));
        let start = t;
        let end = round_ms(start + dur);

        // pauses between words, each 150-500 ms, at most 40% of the utterance
        let rate = c.pause_rate.sample(rng).max(0.0);
        let mut n_pauses = if rate * dur > 0.0 {
            Poisson::new(rate * dur).map(|p| p.sample(rng) as usize).unwrap_or(0)
        } else {
            0
        };
        let mut pauses: Vec<f64> = (0..n_pauses).map(|_| round_ms(rng.random_range(0.15..0.5))).collect();
        while pauses.iter().sum::<f64>() > 0.4 * dur {
            pauses.pop();
        }
        let speech = dur - pauses.iter().sum::<f64>();
        let n_words = ((speech / 0.25).round() as usize).max(1);
        if pauses.len() >= n_words {
            pauses.truncate(n_words - 1);
        }
        n_pauses = pauses.len();
        let mut gap_slots: Vec<usize> = (0..n_words - 1).collect();
        gap_slots.shuffle(rng);
        let mut gap_after = vec![0.0; n_words];
        for (slot, p) in gap_slots.iter().take(n_pauses).zip(&pauses) {
            gap_after[*slot] = *p;
        }
        let speech_total = dur - pauses.iter().sum::<f64>();
        let tokens = c.grammar.sample(n_words, rng);
        let mut words = Vec::with_capacity(n_words);
        let mut wt = start;
        for (i, tok) in tokens.into_iter().enumerate() {
            let ws = round_ms(wt);
            let we = if i + 1 == n_words {
                end
            } else {
                round_ms(wt + speech_total / n_words as f64)
            };
            words.push(Word {
                token: tok,
                start: ws,
                end: we,
            });
            wt = we + gap_after[i];
        }
        planned.push(Planned {
            utt: Utterance {
                utt_id: format!("{conv_id}_{channel}_{k:04}"),
                da_tag: tag,
                da_class,
                start,
                end,
                words,
                events: None,
            },
            grad: c.end_grad.sample(rng),
            energy: c.energy.sample(rng).max(0.01),
        });
        t = round_ms(end + rng.random_range(0.2..2.5));
    }

    let n_frames = ((t + 1.0) / FRAME_PERIOD).ceil() as usize;
    let floor = 0.01;
    let mut f0 = vec![0.0; n_frames];
    let mut rms: Vec<f64> = (0..n_frames)
        .map(|_| floor * (1.0 + 0.1 * rng.random::<f64>()))
        .collect();
    let mut speech = vec![false; n_frames];
    let jitter = Normal::new(0.0, spec.f0_noise_hz);
    let phase: f64 = rng.random_range(0.0..1.0);
    for p in &planned {
        let u = &p.utt;
        let rise_start = (u.end - 0.2).max(u.start);
        let declination = -2.0;
        for w in &u.words {
            for i in span_frames(w.start, w.end) {
                if i >= n_frames {
                    break;
                }
                speech[i] = true;
                let tf = i as f64 * FRAME_PERIOD;
                let syl = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * (speaker.syllable_hz * tf + phase)).sin();
                rms[i] = p.energy * (0.6 + 0.4 * syl) * (1.0 + 0.05 * jitter_unit(rng));
                if rng.random::<f64>() < spec.unvoiced_rate {
                    continue;
                }
                let body = speaker.base_f0 + declination * (tf.min(rise_start) - u.start);
                let tail = if tf > rise_start { p.grad * (tf - rise_start) } else { 0.0 };
                f0[i] = (body + tail + jitter.sample(rng)).max(50.0);
            }
        }
    }

    // SNR in dB, then mapped through the side's CDF over speech frames.
    let snr: Vec<f64> = rms.iter().map(|&r| 20.0 * (r / floor).log10()).collect();
    let mut speech_snr: Vec<f64> = snr
        .iter()
        .zip(&speech)
        .filter(|(_, &s)| s)
        .map(|(&v, _)| v)
        .collect();
    speech_snr.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let snr_cdf = snr
        .iter()
        .map(|&v| {
            if speech_snr.is_empty() {
                return 0.0;
            }
            let below = speech_snr.partition_point(|&x| x <= v);
            below as f64 / speech_snr.len() as f64
        })
        .collect();

    Ok(ConversationSide {
        conv_id: conv_id.to_string(),
        side: channel,
        speaker_gender: speaker.gender,
        listener_gender: speaker.gender,
        speaker_id: None,
        frames: FrameTrack {
            f0,
            rms,
            snr_cdf,
            rate: None,
        },
        utterances: planned.into_iter().map(|p| p.utt).collect(),
    })
}

fn jitter_unit(rng: &mut impl Rng) -> f64 {
    rng.random::<f64>() * 2.0 - 1.0
}
