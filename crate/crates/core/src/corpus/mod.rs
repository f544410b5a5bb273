//! Conversation-side data model, file formats, dataset partitions, class
//! balancing and the synthetic corpus generator.

mod downsample;
mod io;
mod split;
pub mod synth;
pub mod tags;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use downsample::{class_counts, downsample};
pub use io::{load_corpus, load_corpus_with, write_corpus};
pub use split::{SplitName, Splits};
pub use tags::{TagInfo, TagMap};

use crate::error::{Error, Result};

/// Every track is sampled on a fixed 10 ms grid.
pub const FRAME_PERIOD: f64 = 0.010;

/// Index of the frame containing time `t` (seconds). A small tolerance keeps
/// decimal times such as 0.29 s from landing one frame early.
pub fn time_to_frame(t: f64) -> usize {
    let f = (t / FRAME_PERIOD + 1e-6).floor();
    if f <= 0.0 {
        0
    } else {
        f as usize
    }
}

/// Frame range `[floor(start), floor(end))` covered by a time span.
pub fn span_frames(start: f64, end: f64) -> std::ops::Range<usize> {
    time_to_frame(start)..time_to_frame(end)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    A,
    B,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::A => "A",
            Channel::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
        }
    }
}

/// Frame-level acoustic measurements for one conversation side.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameTrack {
    /// Hz; 0.0 marks an unvoiced frame.
    pub f0: Vec<f64>,
    pub rms: Vec<f64>,
    /// SNR mapped through the side's cumulative distribution, in [0, 1].
    pub snr_cdf: Vec<f64>,
    /// Optional precomputed speaking-rate track; `None` entries are undefined frames.
    pub rate: Option<Vec<Option<f64>>>,
}

impl FrameTrack {
    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * FRAME_PERIOD
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.f0.len();
        if self.rms.len() != n || self.snr_cdf.len() != n {
            return Err("frame series lengths differ".into());
        }
        if let Some(rate) = &self.rate {
            if rate.len() != n {
                return Err("rate series length differs".into());
            }
        }
        if let Some(i) = self.f0.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(format!("frame {i}: f0 must be finite and >= 0"));
        }
        if let Some(i) = self.rms.iter().position(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(format!("frame {i}: rms must be finite and >= 0"));
        }
        if let Some(i) = self.snr_cdf.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(format!("frame {i}: snr_cdf outside [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    #[serde(rename = "w")]
    pub token: String,
    #[serde(rename = "s")]
    pub start: f64,
    #[serde(rename = "e")]
    pub end: f64,
}

/// Intonational events produced by an external event recognizer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Events {
    pub num_accents: u32,
    pub num_boundaries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalb_amp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalb_tilt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finalb_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub utt_id: String,
    pub da_tag: String,
    pub da_class: String,
    pub start: f64,
    pub end: f64,
    pub words: Vec<Word>,
    pub events: Option<Events>,
}

impl Utterance {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn frames(&self) -> std::ops::Range<usize> {
        span_frames(self.start, self.end)
    }

    pub fn transcript(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.token.as_str())
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.start.is_finite() && self.end.is_finite() && self.start >= 0.0) {
            return Err("times must be finite and non-negative".into());
        }
        if self.start >= self.end {
            return Err(format!("start {} is not before end {}", self.start, self.end));
        }
        let mut prev_end = self.start;
        for w in &self.words {
            if w.start < self.start - 1e-9 || w.end > self.end + 1e-9 {
                return Err(format!("word {:?} lies outside the utterance span", w.token));
            }
            if w.start > w.end {
                return Err(format!("word {:?} ends before it starts", w.token));
            }
            if w.start < prev_end - 1e-9 {
                return Err(format!("word {:?} overlaps the previous word", w.token));
            }
            prev_end = w.end;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationSide {
    pub conv_id: String,
    pub side: Channel,
    pub speaker_gender: Gender,
    pub listener_gender: Gender,
    pub speaker_id: Option<String>,
    pub frames: FrameTrack,
    pub utterances: Vec<Utterance>,
}

impl ConversationSide {
    /// `conv_id/side`, the identifier used in split files.
    pub fn key(&self) -> String {
        side_key(&self.conv_id, self.side)
    }

    /// Checks ordering, overlap and track coverage of the utterances.
    pub fn validate(&self) -> Result<()> {
        self.frames
            .validate()
            .map_err(|msg| Error::invalid(format!("side {}: {msg}", self.key())))?;
        let track_end = self.frames.duration();
        let mut prev_end = f64::NEG_INFINITY;
        for u in &self.utterances {
            u.validate()
                .map_err(|msg| Error::invalid(format!("utterance {}: {msg}", u.utt_id)))?;
            if u.start < prev_end - 1e-9 {
                return Err(Error::Overlap {
                    side: self.key(),
                    utt_id: u.utt_id.clone(),
                });
            }
            if u.end > track_end + 1e-9 {
                return Err(Error::SpanOutsideTrack {
                    utt_id: u.utt_id.clone(),
                    start: u.start,
                    end: u.end,
                    track_end,
                });
            }
            prev_end = u.end;
        }
        Ok(())
    }
}

pub fn side_key(conv_id: &str, side: Channel) -> String {
    format!("{conv_id}/{side}")
}

/// A validated collection of conversation sides plus optional partitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub sides: Vec<ConversationSide>,
    pub splits: Option<Splits>,
}

impl Corpus {
    pub fn validate(&self) -> Result<()> {
        for side in &self.sides {
            side.validate()?;
        }
        if let Some(splits) = &self.splits {
            splits.validate(self)?;
        }
        Ok(())
    }

    pub fn num_utterances(&self) -> usize {
        self.sides.iter().map(|s| s.utterances.len()).sum()
    }

    pub fn utterances(&self) -> impl Iterator<Item = (&ConversationSide, &Utterance)> {
        self.sides
            .iter()
            .flat_map(|s| s.utterances.iter().map(move |u| (s, u)))
    }

    pub fn side(&self, key: &str) -> Option<&ConversationSide> {
        self.sides.iter().find(|s| s.key() == key)
    }

    /// Utterances on the sides of one split; all utterances when the corpus
    /// carries no split file.
    pub fn utterances_in(
        &self,
        split: SplitName,
    ) -> Result<Vec<(&ConversationSide, &Utterance)>> {
        let Some(splits) = &self.splits else {
            return Err(Error::invalid("corpus has no split file"));
        };
        let keys = splits.get(split);
        Ok(self
            .utterances()
            .filter(|(s, _)| keys.contains(&s.key()))
            .collect())
    }

    /// Utterance counts per (split, class, tag); the split is `None` for
    /// sides outside every split or when the corpus has no split file.
    pub fn label_counts(&self) -> BTreeMap<(Option<SplitName>, String, String), usize> {
        let mut out = BTreeMap::new();
        for side in &self.sides {
            let key = side.key();
            let split = self.splits.as_ref().and_then(|sp| {
                [SplitName::TRN, SplitName::HLD, SplitName::DEV]
                    .into_iter()
                    .find(|&n| sp.get(n).contains(&key))
            });
            for u in &side.utterances {
                *out.entry((split, u.da_class.clone(), u.da_tag.clone())).or_insert(0) += 1;
            }
        }
        out
    }

    /// Hook for discarding utterances, e.g. ones with unreliable boundary
    /// times. No default criterion is applied.
    pub fn retain_utterances(&mut self, mut keep: impl FnMut(&ConversationSide, &Utterance) -> bool) {
        for side in &mut self.sides {
            let snapshot = side.clone();
            side.utterances.retain(|u| keep(&snapshot, u));
        }
    }
}
