//! The prosodic feature inventory and per-utterance feature vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Duration,
    Pause,
    F0,
    Energy,
    Enrate,
    Gender,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Duration,
        FeatureGroup::Pause,
        FeatureGroup::F0,
        FeatureGroup::Energy,
        FeatureGroup::Enrate,
        FeatureGroup::Gender,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Duration => "Duration",
            FeatureGroup::Pause => "Pause",
            FeatureGroup::F0 => "F0",
            FeatureGroup::Energy => "Energy",
            FeatureGroup::Enrate => "Enrate",
            FeatureGroup::Gender => "Gender",
        }
    }

    /// Short label used in sweep tables (Dur, Pau, F0, Nrg, Enr, Gen).
    pub fn short(self) -> &'static str {
        match self {
            FeatureGroup::Duration => "Dur",
            FeatureGroup::Pause => "Pau",
            FeatureGroup::F0 => "F0",
            FeatureGroup::Energy => "Nrg",
            FeatureGroup::Enrate => "Enr",
            FeatureGroup::Gender => "Gen",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s) || g.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown feature group {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: &'static str,
    pub group: FeatureGroup,
    pub kind: FeatureKind,
}

const fn num(name: &'static str, group: FeatureGroup) -> FeatureDef {
    FeatureDef {
        name,
        group,
        kind: FeatureKind::Numeric,
    }
}

const fn cat(name: &'static str, group: FeatureGroup) -> FeatureDef {
    FeatureDef {
        name,
        group,
        kind: FeatureKind::Categorical,
    }
}

use FeatureGroup::*;

/// Column order of every feature matrix.
pub const FEATURES: &[FeatureDef] = &[
    num("ling_dur", Duration),
    num("ling_dur_minus_min10pause", Duration),
    num("cont_speech_frames", Duration),
    num("f0_num_utt", Duration),
    num("f0_num_good_utt", Duration),
    num("regr_dur", Duration),
    num("regr_num_frames", Duration),
    num("numacc_utt", Duration),
    num("numbound_utt", Duration),
    num("min10pause_count_n_ldur", Pause),
    num("total_min10pause_dur_n_ldur", Pause),
    num("mean_min10pause_dur_utt", Pause),
    num("mean_min10pause_dur_ncv", Pause),
    num("cont_speech_frames_n", Pause),
    num("f0_mean_good_utt", F0),
    num("f0_mean_n", F0),
    num("f0_mean_ratio", F0),
    num("f0_mean_zcv", F0),
    num("f0_sd_good_utt", F0),
    num("f0_sd_n", F0),
    num("f0_max_n", F0),
    num("f0_max_utt", F0),
    num("max_f0_smooth", F0),
    num("f0_min_utt", F0),
    num("f0_percent_good_utt", F0),
    num("utt_grad", F0),
    num("pen_grad", F0),
    num("end_grad", F0),
    num("end_f0_mean", F0),
    num("pen_f0_mean", F0),
    num("abs_f0_diff", F0),
    num("rel_f0_diff", F0),
    num("norm_end_f0_mean", F0),
    num("norm_pen_f0_mean", F0),
    num("norm_f0_diff", F0),
    num("regr_start_f0", F0),
    num("finalb_amp", F0),
    cat("finalb_label", F0),
    num("finalb_tilt", F0),
    num("numacc_n_ldur", F0),
    num("numacc_n_rdur", F0),
    num("numbound_n_ldur", F0),
    num("numbound_n_rdur", F0),
    num("utt_nrg_mean", Energy),
    num("abs_nrg_diff", Energy),
    num("end_nrg_mean", Energy),
    num("pen_nrg_mean", Energy),
    num("norm_nrg_diff", Energy),
    num("rel_nrg_diff", Energy),
    num("snr_mean_utt", Energy),
    num("snr_sd_utt", Energy),
    num("snr_diff_utt", Energy),
    num("snr_min_utt", Energy),
    num("snr_max_utt", Energy),
    num("mean_enr_utt", Enrate),
    num("mean_enr_utt_norm", Enrate),
    num("stdev_enr_utt", Enrate),
    num("min_enr_utt", Enrate),
    num("max_enr_utt", Enrate),
    cat("speaker_gender", Gender),
    cat("listener_gender", Gender),
];

/// Features that come from the external event recognizer rather than the tracks.
pub const EVENT_FEATURES: &[&str] = &[
    "numacc_utt",
    "numbound_utt",
    "finalb_amp",
    "finalb_label",
    "finalb_tilt",
    "numacc_n_ldur",
    "numacc_n_rdur",
    "numbound_n_ldur",
    "numbound_n_rdur",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURES.iter().position(|f| f.name == name)
}

pub fn feature_def(name: &str) -> Option<&'static FeatureDef> {
    FEATURES.iter().find(|f| f.name == name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Num(f64),
    Cat(String),
}

impl FeatureValue {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            FeatureValue::Num(v) => Some(*v),
            FeatureValue::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            FeatureValue::Cat(s) => Some(s),
            FeatureValue::Num(_) => None,
        }
    }
}

/// Values for every entry of [`FEATURES`]; `None` is MISSING.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<Option<FeatureValue>>,
}

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector {
            values: vec![None; FEATURES.len()],
        }
    }
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureValue> {
        feature_index(name).and_then(|i| self.values[i].as_ref())
    }

    pub fn num(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(FeatureValue::as_num)
    }

    pub fn at(&self, index: usize) -> Option<&FeatureValue> {
        self.values.get(index).and_then(Option::as_ref)
    }

    /// Sets a numeric feature; non-finite values are stored as MISSING.
    pub fn set_num(&mut self, name: &str, value: Option<f64>) {
        let v = value.filter(|v| v.is_finite()).map(FeatureValue::Num);
        self.set(name, v);
    }

    pub fn set_cat(&mut self, name: &str, value: Option<&str>) {
        self.set(name, value.map(|s| FeatureValue::Cat(s.to_string())));
    }

    pub fn set(&mut self, name: &str, value: Option<FeatureValue>) {
        let i = feature_index(name).unwrap_or_else(|| panic!("unknown feature {name}"));
        self.values[i] = value;
    }

    pub(crate) fn set_at(&mut self, index: usize, value: Option<FeatureValue>) {
        self.values[index] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static FeatureDef, Option<&FeatureValue>)> {
        FEATURES.iter().zip(self.values.iter().map(Option::as_ref))
    }
}
