//! Conversation-side statistics and frame masks shared by all utterances of a side.

use serde::Serialize;

use crate::corpus::{span_frames, ConversationSide};
use crate::numeric::{max, mean, population_sd};

/// F0 histogram bin width in Hz. Bin `k` is centred on `k * F0_BIN_HZ`.
pub const F0_BIN_HZ: f64 = 2.0;
/// Triangular 5-bin kernel applied to the F0 histogram before taking the mode.
const HISTOGRAM_KERNEL: [f64; 5] = [1.0, 2.0, 3.0, 2.0, 1.0];
/// f0_min is this fraction of the histogram mode.
pub const F0_MIN_RATIO: f64 = 0.75;
/// Pauses shorter than this many frames are ignored.
pub const MIN_PAUSE_FRAMES: usize = 10;
/// Minimum pause length in seconds.
pub const MIN_PAUSE_SECS: f64 = 0.100;
/// Continuous-speech regions must span at least this many frames.
pub const CONT_SPEECH_MIN_FRAMES: usize = 100;
/// Speaking-rate regions bridge pauses shorter than this and drop speech shorter than this.
pub const ENRATE_REGION_FRAMES: usize = 100;
/// Half of the 2 s speaking-rate analysis window, in frames.
pub const ENRATE_HALF_WINDOW: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F0Stats {
    pub f0_mode: f64,
    pub f0_min_threshold: f64,
    pub f0_mean_good: f64,
    pub f0_sd_good: f64,
    /// Largest raw voiced F0 on the side.
    pub f0_max: f64,
}

impl F0Stats {
    pub fn is_good(&self, f0: f64) -> bool {
        f0 > self.f0_min_threshold
    }
}

/// Normalisation statistics gathered over one conversation side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideStats {
    /// `None` flags a side without voiced frames; its F0 features are MISSING.
    pub f0: Option<F0Stats>,
    pub enrate_mean: Option<f64>,
    /// Mean duration of pauses of at least 100 ms inside the side's utterances.
    pub mean_pause_dur: Option<f64>,
    /// RMS mean and standard deviation over frames inside utterances.
    pub rms_mean: Option<f64>,
    pub rms_sd: Option<f64>,
}

impl SideStats {
    pub fn is_flagged(&self) -> bool {
        self.f0.is_none()
    }
}

/// Mode of the smoothed 2 Hz histogram of voiced F0 values; ties go to the lower bin.
pub fn f0_mode(f0: &[f64]) -> Option<f64> {
    let bins: Vec<usize> = f0
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| (v / F0_BIN_HZ + 0.5).floor() as usize)
        .collect();
    let top = *bins.iter().max()?;
    let mut hist = vec![0.0; top + 1];
    for b in bins {
        hist[b] += 1.0;
    }
    let half = HISTOGRAM_KERNEL.len() / 2;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..hist.len() {
        let mut s = 0.0;
        for (j, w) in HISTOGRAM_KERNEL.iter().enumerate() {
            let idx = k as isize + j as isize - half as isize;
            if idx >= 0 && (idx as usize) < hist.len() {
                s += w * hist[idx as usize];
            }
        }
        if s > best_val {
            best_val = s;
            best = k;
        }
    }
    Some(best as f64 * F0_BIN_HZ)
}

/// F0 statistics of a side; `None` when no frame is voiced.
pub fn f0_stats(f0: &[f64]) -> Option<F0Stats> {
    let mode = f0_mode(f0)?;
    let threshold = F0_MIN_RATIO * mode;
    let good: Vec<f64> = f0.iter().copied().filter(|&v| v > threshold).collect();
    let voiced: Vec<f64> = f0.iter().copied().filter(|&v| v > 0.0).collect();
    Some(F0Stats {
        f0_mode: mode,
        f0_min_threshold: threshold,
        f0_mean_good: mean(&good).unwrap_or(f64::NAN),
        f0_sd_good: population_sd(&good).unwrap_or(f64::NAN),
        f0_max: max(&voiced).unwrap_or(f64::NAN),
    })
}

/// Durations (s) of gaps of at least 100 ms between adjacent words.
pub fn min10_pauses(words: &[crate::corpus::Word]) -> Vec<f64> {
    words
        .windows(2)
        .map(|w| w[1].start - w[0].end)
        .filter(|&g| g >= MIN_PAUSE_SECS - 1e-9)
        .collect()
}

/// Frames covered by a word anywhere on the side.
pub fn speech_mask(side: &ConversationSide) -> Vec<bool> {
    let n = side.frames.len();
    let mut mask = vec![false; n];
    for u in &side.utterances {
        for w in &u.words {
            let r = span_frames(w.start, w.end);
            for m in &mut mask[r.start.min(n)..r.end.min(n)] {
                *m = true;
            }
        }
    }
    mask
}

/// Fills interior gaps shorter than `max_gap` frames, then keeps only runs of
/// at least `min_run` frames.
pub fn bridge_and_filter(mask: &[bool], max_gap: usize, min_run: usize) -> Vec<bool> {
    let n = mask.len();
    let mut out = mask.to_vec();
    let mut i = 0;
    let mut seen_speech = false;
    while i < n {
        if out[i] {
            seen_speech = true;
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !out[i] {
            i += 1;
        }
        if seen_speech && i < n && i - start < max_gap {
            for v in &mut out[start..i] {
                *v = true;
            }
        }
    }
    let mut i = 0;
    while i < n {
        if !out[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && out[i] {
            i += 1;
        }
        if i - start < min_run {
            for v in &mut out[start..i] {
                *v = false;
            }
        }
    }
    out
}

/// Frames belonging to regions of at least one second of continuous speech,
/// pauses under 10 frames ignored.
pub fn continuous_speech(speech: &[bool]) -> Vec<bool> {
    bridge_and_filter(speech, MIN_PAUSE_FRAMES, CONT_SPEECH_MIN_FRAMES)
}

/// Energy-based stand-in for the speaking-rate track. Within speech regions
/// (pauses under 1 s bridged, regions under 1 s dropped), peaks of the
/// smoothed RMS envelope are counted in a 2 s window centred on each frame and
/// reported as peaks per second. Frames whose window does not fit inside the
/// region are undefined.
pub fn estimate_rate(rms: &[f64], speech: &[bool]) -> Vec<Option<f64>> {
    let n = rms.len();
    let regions = bridge_and_filter(speech, ENRATE_REGION_FRAMES, ENRATE_REGION_FRAMES);
    // ~25 ms window over 10 ms frames, then a 5-point moving average.
    let env = moving_average(rms, 1);
    let smooth = moving_average(&env, 2);
    let mut peaks = vec![0u32; n];
    for i in 1..n.saturating_sub(1) {
        if regions[i] && smooth[i] > smooth[i - 1] && smooth[i] >= smooth[i + 1] {
            peaks[i] = 1;
        }
    }
    let mut prefix = vec![0u32; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + peaks[i];
    }
    let mut out = vec![None; n];
    let window_secs = 2.0 * ENRATE_HALF_WINDOW as f64 * crate::corpus::FRAME_PERIOD;
    let mut i = 0;
    while i < n {
        if !regions[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && regions[i] {
            i += 1;
        }
        let end = i;
        for c in start + ENRATE_HALF_WINDOW..=end.saturating_sub(ENRATE_HALF_WINDOW) {
            if c >= end {
                break;
            }
            let lo = c - ENRATE_HALF_WINDOW;
            let hi = c + ENRATE_HALF_WINDOW;
            out[c] = Some((prefix[hi] - prefix[lo]) as f64 / window_secs);
        }
    }
    out
}

fn moving_average(xs: &[f64], half: usize) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            xs[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Side-level quantities computed once and shared by every utterance.
#[derive(Debug, Clone)]
pub struct SideContext<'a> {
    pub side: &'a ConversationSide,
    pub stats: SideStats,
    pub cont_speech: Vec<bool>,
    pub rate: Vec<Option<f64>>,
}

impl<'a> SideContext<'a> {
    pub fn new(side: &'a ConversationSide) -> Self {
        let speech = speech_mask(side);
        let cont_speech = continuous_speech(&speech);
        let rate = match &side.frames.rate {
            Some(r) => r.clone(),
            None => estimate_rate(&side.frames.rms, &speech),
        };
        let defined: Vec<f64> = rate.iter().flatten().copied().collect();
        let pauses: Vec<f64> = side
            .utterances
            .iter()
            .flat_map(|u| min10_pauses(&u.words))
            .collect();
        let n = side.frames.len();
        let utt_rms: Vec<f64> = side
            .utterances
            .iter()
            .flat_map(|u| {
                let r = u.frames();
                side.frames.rms[r.start.min(n)..r.end.min(n)].iter().copied()
            })
            .collect();
        let stats = SideStats {
            f0: f0_stats(&side.frames.f0),
            enrate_mean: mean(&defined),
            mean_pause_dur: mean(&pauses),
            rms_mean: mean(&utt_rms),
            rms_sd: population_sd(&utt_rms),
        };
        SideContext {
            side,
            stats,
            cont_speech,
            rate,
        }
    }
}

/// Normalisation statistics for one side.
pub fn side_stats(side: &ConversationSide) -> SideStats {
    SideContext::new(side).stats
}
