use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::tags::{AGREEMENT, BACKCHANNEL, INCOMPLETE, QUESTION, STATEMENT};
use crate::corpus::TagMap;
use crate::error::{Error, Result};
use crate::fsutil::read_to_string;

pub const BUILTIN_TASKS: [&str; 5] = [
    "seven-way",
    "q-vs-s",
    "four-way-question",
    "incomplete-vs-rest",
    "backchannel-vs-agreement",
];

/// One target class: utterances match by fine tag or by grouped class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskClass {
    pub name: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub groups: Vec<String>,
}

/// A classification task over a labelled corpus. Utterances matching no
/// class go to `rest` when set and are dropped otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub classes: Vec<TaskClass>,
    #[serde(default)]
    pub rest: Option<String>,
}

fn by_groups(name: &str, groups: &[&str]) -> TaskClass {
    TaskClass {
        name: name.to_string(),
        tags: Vec::new(),
        groups: groups.iter().map(|s| s.to_string()).collect(),
    }
}

fn by_tags(name: &str, tags: &[&str]) -> TaskClass {
    TaskClass {
        name: name.to_string(),
        tags: tags.iter().map(|s| s.to_string()).collect(),
        groups: Vec::new(),
    }
}

impl TaskSpec {
    /// Built-in task by name; `seven-way` takes its classes from `tags`.
    pub fn builtin(name: &str, tags: &TagMap) -> Result<Self> {
        let (classes, rest) = match name {
            "seven-way" => (
                tags.classes().iter().map(|c| by_groups(c, &[c])).collect(),
                None,
            ),
            "q-vs-s" => (vec![by_groups(STATEMENT, &[STATEMENT]), by_groups(QUESTION, &[QUESTION])], None),
            "four-way-question" => (
                vec![
                    by_tags("S", &["sd", "sv"]),
                    by_tags("QY", &["qy"]),
                    by_tags("QW", &["qw"]),
                    by_tags("QD", &["qy^d"]),
                ],
                None,
            ),
            "incomplete-vs-rest" => (
                vec![by_groups(INCOMPLETE, &[INCOMPLETE])],
                Some(format!("Non-{INCOMPLETE}")),
            ),
            "backchannel-vs-agreement" => (
                vec![by_groups(BACKCHANNEL, &[BACKCHANNEL]), by_groups(AGREEMENT, &[AGREEMENT])],
                None,
            ),
            _ => {
                return Err(Error::invalid(format!(
                    "unknown task {name:?} (built-in: {})",
                    BUILTIN_TASKS.join(", ")
                )))
            }
        };
        let spec = TaskSpec {
            name: name.to_string(),
            classes,
            rest,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let spec: TaskSpec = serde_json::from_str(&read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let names = self.class_names();
        let unique: BTreeSet<&String> = names.iter().collect();
        if names.len() < 2 {
            return Err(Error::invalid(format!("task {} needs at least two classes", self.name)));
        }
        if unique.len() != names.len() {
            return Err(Error::invalid(format!("task {} repeats a class name", self.name)));
        }
        if let Some(c) = self.classes.iter().find(|c| c.tags.is_empty() && c.groups.is_empty()) {
            return Err(Error::invalid(format!("class {} matches nothing", c.name)));
        }
        Ok(())
    }

    /// Class names in report order, `rest` last.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.classes.iter().map(|c| c.name.clone()).collect();
        names.extend(self.rest.iter().cloned());
        names
    }

    /// Class index of an utterance with fine tag `tag` and grouped class
    /// `group`; the first matching class wins.
    pub fn label(&self, tag: &str, group: &str) -> Option<usize> {
        self.classes
            .iter()
            .position(|c| c.tags.iter().any(|t| t == tag) || c.groups.iter().any(|g| g == group))
            .or(self.rest.as_ref().map(|_| self.classes.len()))
    }
}
