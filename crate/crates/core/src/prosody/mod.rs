//! Prosodic feature extraction from frame-level tracks and word alignments.
//!
//! Features never look at word identities; word times are used only to locate
//! pauses and speech regions. All F0 and energy normalisations are computed
//! per conversation side.

mod extract;
mod features;
mod side;
mod table;

pub use extract::{
    extract_duration, extract_energy, extract_enrate, extract_f0, extract_gender, extract_pause,
    extract_utterance, f0_regression, UttRegions, MEDIAN_WINDOW, REGION_FRAMES,
};
pub use features::{
    feature_def, feature_index, FeatureDef, FeatureGroup, FeatureKind, FeatureValue,
    FeatureVector, EVENT_FEATURES, FEATURES,
};
pub use side::{
    continuous_speech, estimate_rate, f0_mode, f0_stats, min10_pauses, side_stats, speech_mask,
    F0Stats, SideContext, SideStats, F0_BIN_HZ, F0_MIN_RATIO,
};
pub use table::{extract_all, extract_side, extract_split, FeatureRow, FeatureTable};
