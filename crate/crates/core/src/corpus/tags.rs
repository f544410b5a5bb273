//! Dialog-act tag vocabulary and its grouping into the seven coarse classes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATEMENT: &str = "Statement";
pub const QUESTION: &str = "Question";
pub const BACKCHANNEL: &str = "Backchannel";
pub const INCOMPLETE: &str = "Incomplete";
pub const AGREEMENT: &str = "Agreement";
pub const APPRECIATION: &str = "Appreciation";
pub const OTHER: &str = "Other";

/// The seven grouped classes in their conventional order.
pub const SEVEN_CLASSES: [&str; 7] = [
    STATEMENT,
    QUESTION,
    BACKCHANNEL,
    INCOMPLETE,
    AGREEMENT,
    APPRECIATION,
    OTHER,
];

/// (tag, name, training count). Two rows share the `%` family: abandoned /
/// turn-exit utterances are tagged `%-`, uninterpretable ones `%`.
const SWBD_TAGS: &[(&str, &str, u64)] = &[
    ("sd", "Statement-non-opinion", 72_824),
    ("b", "Acknowledge (Backchannel)", 37_096),
    ("sv", "Statement-opinion", 25_197),
    ("aa", "Agree/Accept", 10_820),
    ("%-", "Abandoned or Turn-Exit", 10_569),
    ("ba", "Appreciation", 4_633),
    ("qy", "Yes-No-Question", 4_624),
    ("x", "Non-verbal", 3_548),
    ("ny", "Yes-Answer", 2_934),
    ("fc", "Conventional-closing", 2_486),
    ("%", "Uninterpretable", 2_158),
    ("qw", "Wh-Question", 1_911),
    ("nn", "No-Answer", 1_340),
    ("bk", "Acknowledge-Answer", 1_277),
    ("h", "Hedge", 1_182),
    ("qy^d", "Declarative Yes-No-Question", 1_174),
    ("o,fo", "Other", 1_074),
    ("bh", "Backchannel-Question", 1_019),
    ("^q", "Quotation", 934),
    ("bf", "Summarize/Reformulate", 919),
    ("na", "Affirmative Non-Yes Answers", 836),
    ("ad", "Action-directive", 719),
    ("^2", "Collaborative Completion", 699),
    ("b^m", "Repeat-phrase", 660),
    ("qo", "Open-Question", 632),
    ("qh", "Rhetorical-Questions", 557),
    ("^h", "Hold before Answer/Agreement", 540),
    ("ar", "Reject", 338),
    ("ng", "Negative Non-No Answers", 292),
    ("br", "Signal-non-understanding", 288),
    ("no", "Other Answers", 279),
    ("fp", "Conventional-opening", 220),
    ("qrr", "Or-Clause", 207),
    ("arp,nd", "Dispreferred Answers", 205),
    ("t3", "Third-party-talk", 115),
    ("oo,cc,co", "Offers, Options & Commits", 109),
    ("t1", "Self-talk", 102),
    ("bd", "Downplayer", 100),
    ("aap/am", "Maybe/Accept-part", 98),
    ("^g", "Tag-Question", 93),
    ("qw^d", "Declarative Wh-Question", 80),
    ("fa", "Apology", 76),
    ("ft", "Thanking", 67),
];

fn builtin_class(tag: &str) -> &'static str {
    match tag {
        "sd" | "sv" => STATEMENT,
        "qy" | "qw" | "qy^d" | "qw^d" | "qo" => QUESTION,
        "b" => BACKCHANNEL,
        "%" | "%-" => INCOMPLETE,
        "aa" => AGREEMENT,
        "ba" => APPRECIATION,
        _ => OTHER,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagInfo {
    pub class: String,
    #[serde(default)]
    pub count: u64,
}

/// Mapping from fine-grained DA tags to grouped classes, with the tag counts
/// used as default within-class mixture weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TagMap {
    tags: BTreeMap<String, TagInfo>,
    classes: Vec<String>,
}

impl Default for TagMap {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TagMap {
    pub fn builtin() -> Self {
        let tags = SWBD_TAGS
            .iter()
            .map(|&(tag, _, count)| {
                (
                    tag.to_string(),
                    TagInfo {
                        class: builtin_class(tag).to_string(),
                        count,
                    },
                )
            })
            .collect();
        TagMap {
            tags,
            classes: SEVEN_CLASSES.iter().map(|c| c.to_string()).collect(),
        }
    }

    /// Builds a map from explicit entries. Class order follows first appearance
    /// in `class_order`, then any remaining classes alphabetically.
    pub fn new(tags: BTreeMap<String, TagInfo>, class_order: &[String]) -> Self {
        let mut classes: Vec<String> = class_order.to_vec();
        for info in tags.values() {
            if !classes.contains(&info.class) {
                classes.push(info.class.clone());
            }
        }
        TagMap { tags, classes }
    }

    /// Reads an override file: `{"classes": [...], "tags": {tag: {class, count}}}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            #[serde(default)]
            classes: Vec<String>,
            tags: BTreeMap<String, TagInfo>,
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: File = serde_json::from_str(&text)?;
        Ok(Self::new(f.tags, &f.classes))
    }

    pub fn class_of(&self, tag: &str) -> Result<&str> {
        self.tags
            .get(tag)
            .map(|i| i.class.as_str())
            .ok_or_else(|| Error::UnknownTag {
                tag: tag.to_string(),
            })
    }

    pub fn count(&self, tag: &str) -> Option<u64> {
        self.tags.get(tag).map(|i| i.count)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn tags(&self) -> impl Iterator<Item = (&str, &TagInfo)> {
        self.tags.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Tags grouped into `class`, in tag order.
    pub fn members(&self, class: &str) -> Vec<&str> {
        self.tags
            .iter()
            .filter(|(_, i)| i.class == class)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping() {
        let m = TagMap::builtin();
        assert_eq!(m.class_of("qy").unwrap(), QUESTION);
        assert_eq!(m.class_of("qw^d").unwrap(), QUESTION);
        assert_eq!(m.class_of("sv").unwrap(), STATEMENT);
        assert_eq!(m.class_of("%-").unwrap(), INCOMPLETE);
        assert_eq!(m.class_of("bk").unwrap(), OTHER);
        assert!(matches!(m.class_of("zz"), Err(Error::UnknownTag { .. })));
        assert_eq!(m.count("sd"), Some(72_824));
        assert_eq!(m.count("sv"), Some(25_197));
        assert_eq!(m.members(STATEMENT), vec!["sd", "sv"]);
        assert_eq!(m.classes().len(), 7);
    }
}
