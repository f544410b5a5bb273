use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SplitName {
    TRN,
    HLD,
    DEV,
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::TRN => "TRN",
            SplitName::HLD => "HLD",
            SplitName::DEV => "DEV",
        })
    }
}

impl FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TRN" => Ok(SplitName::TRN),
            "HLD" => Ok(SplitName::HLD),
            "DEV" => Ok(SplitName::DEV),
            _ => Err(Error::invalid(format!("unknown split {s:?} (expected TRN, HLD or DEV)"))),
        }
    }
}

/// Training / held-out / development partition of conversation sides,
/// keyed by `conv_id/side`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Splits {
    #[serde(rename = "TRN", default)]
    pub trn: BTreeSet<String>,
    #[serde(rename = "HLD", default)]
    pub hld: BTreeSet<String>,
    #[serde(rename = "DEV", default)]
    pub dev: BTreeSet<String>,
}

impl Splits {
    pub fn get(&self, name: SplitName) -> &BTreeSet<String> {
        match name {
            SplitName::TRN => &self.trn,
            SplitName::HLD => &self.hld,
            SplitName::DEV => &self.dev,
        }
    }

    pub fn get_mut(&mut self, name: SplitName) -> &mut BTreeSet<String> {
        match name {
            SplitName::TRN => &mut self.trn,
            SplitName::HLD => &mut self.hld,
            SplitName::DEV => &mut self.dev,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Splits must be disjoint in sides, reference only known sides, and,
    /// when every side carries a speaker id, share no speakers.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        let names = [SplitName::TRN, SplitName::HLD, SplitName::DEV];
        let mut owner: BTreeMap<&str, SplitName> = BTreeMap::new();
        for name in names {
            for key in self.get(name) {
                if let Some(prev) = owner.insert(key, name) {
                    return Err(Error::invalid(format!("side {key} is in both {prev} and {name}")));
                }
                if corpus.side(key).is_none() {
                    return Err(Error::invalid(format!("split {name} names unknown side {key}")));
                }
            }
        }
        let mut speaker_split: BTreeMap<&str, SplitName> = BTreeMap::new();
        for side in &corpus.sides {
            let (Some(spk), Some(&split)) = (side.speaker_id.as_deref(), owner.get(side.key().as_str()))
            else {
                continue;
            };
            match speaker_split.insert(spk, split) {
                Some(prev) if prev != split => {
                    return Err(Error::invalid(format!(
                        "speaker {spk} appears in both {prev} and {split}"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
