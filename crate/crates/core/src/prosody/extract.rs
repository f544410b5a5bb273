//! Per-utterance feature extraction, grouped as duration, pause, F0, energy,
//! speaking-rate and gender features.

use std::ops::Range;

use crate::corpus::{ConversationSide, Utterance, FRAME_PERIOD};
use crate::numeric::{least_squares, max, mean, median_smooth, min, population_sd, LineFit};

use super::features::FeatureVector;
use super::side::{min10_pauses, SideContext};

/// Length of the end and penultimate regions, in frames (200 ms).
pub const REGION_FRAMES: usize = 20;
/// Median smoothing window for the smoothed F0 maximum.
pub const MEDIAN_WINDOW: usize = 5;

/// Frame ranges of an utterance and its final regions, clipped to the track.
#[derive(Debug, Clone)]
pub struct UttRegions {
    pub whole: Range<usize>,
    pub end: Range<usize>,
    pub penultimate: Range<usize>,
}

impl UttRegions {
    pub fn new(utt: &Utterance, track_len: usize) -> Self {
        let r = utt.frames();
        let whole = r.start.min(track_len)..r.end.min(track_len);
        let end_start = whole.end.saturating_sub(REGION_FRAMES).max(whole.start);
        let pen_start = end_start.saturating_sub(REGION_FRAMES).max(whole.start);
        UttRegions {
            end: end_start..whole.end,
            penultimate: pen_start..end_start,
            whole,
        }
    }
}

/// Least-squares fit over the good-F0 frames of `range`, with time in seconds
/// relative to the range start so the result is translation invariant.
pub fn f0_regression(f0: &[f64], range: Range<usize>, threshold: f64) -> Option<LineFit<f64>> {
    let pts = good_points(f0, range, threshold);
    least_squares(&pts)
}

fn good_points(f0: &[f64], range: Range<usize>, threshold: f64) -> Vec<(f64, f64)> {
    let base = range.start;
    range
        .filter(|&i| f0[i] > threshold)
        .map(|i| ((i - base) as f64 * FRAME_PERIOD, f0[i]))
        .collect()
}

fn good_values(f0: &[f64], range: Range<usize>, threshold: f64) -> Vec<f64> {
    f0[range].iter().copied().filter(|&v| v > threshold).collect()
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn log_ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    ratio(a, b).filter(|&r| r > 0.0).map(f64::ln)
}

/// Duration features: utterance length, pause-free length, continuous-speech
/// frames, voiced/good-F0 frame counts, regression extent, event counts.
pub fn extract_duration(utt: &Utterance, ctx: &SideContext, out: &mut FeatureVector) {
    let f0 = &ctx.side.frames.f0;
    let regions = UttRegions::new(utt, f0.len());
    let ling_dur = utt.duration();
    let pause_total: f64 = min10_pauses(&utt.words).iter().sum();
    out.set_num("ling_dur", Some(ling_dur));
    out.set_num("ling_dur_minus_min10pause", Some(ling_dur - pause_total));
    let cont = ctx.cont_speech[regions.whole.clone()].iter().filter(|&&b| b).count();
    out.set_num("cont_speech_frames", Some(cont as f64));
    let voiced = f0[regions.whole.clone()].iter().filter(|&&v| v > 0.0).count();
    out.set_num("f0_num_utt", Some(voiced as f64));
    if let Some(s) = &ctx.stats.f0 {
        let good = good_values(f0, regions.whole.clone(), s.f0_min_threshold).len();
        out.set_num("f0_num_good_utt", Some(good as f64));
        out.set_num("regr_num_frames", Some(good as f64));
        let fit = f0_regression(f0, regions.whole.clone(), s.f0_min_threshold);
        out.set_num("regr_dur", fit.map(|f| f.span));
    }
    if let Some(ev) = &utt.events {
        out.set_num("numacc_utt", Some(ev.num_accents as f64));
        out.set_num("numbound_utt", Some(ev.num_boundaries as f64));
    }
}

/// Pause features from word-alignment gaps of at least 100 ms.
pub fn extract_pause(utt: &Utterance, ctx: &SideContext, out: &mut FeatureVector) {
    let ling_dur = utt.duration();
    let pauses = min10_pauses(&utt.words);
    let total: f64 = pauses.iter().sum();
    out.set_num("min10pause_count_n_ldur", Some(pauses.len() as f64 / ling_dur));
    out.set_num("total_min10pause_dur_n_ldur", Some(total / ling_dur));
    let mean_pause = mean(&pauses);
    out.set_num("mean_min10pause_dur_utt", mean_pause);
    out.set_num("mean_min10pause_dur_ncv", ratio(mean_pause, ctx.stats.mean_pause_dur));
    let regions = UttRegions::new(utt, ctx.side.frames.len());
    let cont = ctx.cont_speech[regions.whole].iter().filter(|&&b| b).count();
    out.set_num("cont_speech_frames_n", Some(cont as f64 / ling_dur));
}

/// F0 level, range, slope and final-region features, plus event-derived ones.
pub fn extract_f0(utt: &Utterance, ctx: &SideContext, out: &mut FeatureVector) {
    let f0 = &ctx.side.frames.f0;
    let regions = UttRegions::new(utt, f0.len());
    let ling_dur = utt.duration();

    let mut regr_dur = None;
    if let Some(s) = &ctx.stats.f0 {
        let thr = s.f0_min_threshold;
        let side_sd = Some(s.f0_sd_good).filter(|&v| v > 0.0);
        let voiced: Vec<f64> = f0[regions.whole.clone()].iter().copied().filter(|&v| v > 0.0).collect();
        let good = good_values(f0, regions.whole.clone(), thr);

        let mean_good = mean(&good);
        let sd_good = population_sd(&good);
        out.set_num("f0_mean_good_utt", mean_good);
        out.set_num("f0_sd_good_utt", sd_good);
        out.set_num("f0_mean_n", diff(mean_good, Some(s.f0_mean_good)));
        out.set_num("f0_mean_ratio", ratio(mean_good, Some(s.f0_mean_good)));
        out.set_num(
            "f0_mean_zcv",
            ratio(diff(mean_good, Some(s.f0_mean_good)), side_sd),
        );
        out.set_num("f0_sd_n", log_ratio(sd_good, side_sd));
        let max_utt = max(&voiced);
        out.set_num("f0_max_n", log_ratio(max_utt, Some(s.f0_max)));
        out.set_num("f0_max_utt", max_utt);
        out.set_num("f0_min_utt", min(&voiced));
        out.set_num("max_f0_smooth", smoothed_max(&f0[regions.whole.clone()]));
        out.set_num(
            "f0_percent_good_utt",
            ratio(Some(good.len() as f64), Some(voiced.len() as f64)),
        );

        let fit = f0_regression(f0, regions.whole.clone(), thr);
        regr_dur = fit.map(|f| f.span);
        out.set_num("utt_grad", fit.map(|f| f.gradient));
        out.set_num("regr_start_f0", fit.map(|f| f.start_value));
        out.set_num(
            "pen_grad",
            f0_regression(f0, regions.penultimate.clone(), thr).map(|f| f.gradient),
        );
        out.set_num(
            "end_grad",
            f0_regression(f0, regions.end.clone(), thr).map(|f| f.gradient),
        );
        let end_mean = mean(&good_values(f0, regions.end.clone(), thr));
        let pen_mean = mean(&good_values(f0, regions.penultimate.clone(), thr));
        out.set_num("end_f0_mean", end_mean);
        out.set_num("pen_f0_mean", pen_mean);
        out.set_num("abs_f0_diff", diff(end_mean, pen_mean));
        out.set_num("rel_f0_diff", ratio(end_mean, pen_mean));
        let side_mean = Some(s.f0_mean_good);
        out.set_num("norm_end_f0_mean", ratio(diff(end_mean, side_mean), side_sd));
        out.set_num("norm_pen_f0_mean", ratio(diff(pen_mean, side_mean), side_sd));
        out.set_num("norm_f0_diff", ratio(diff(end_mean, pen_mean), side_sd));
    }

    if let Some(ev) = &utt.events {
        out.set_num("finalb_amp", ev.finalb_amp);
        out.set_num("finalb_tilt", ev.finalb_tilt);
        out.set_cat("finalb_label", ev.finalb_label.as_deref());
        let acc = Some(ev.num_accents as f64);
        let bnd = Some(ev.num_boundaries as f64);
        out.set_num("numacc_n_ldur", ratio(acc, Some(ling_dur)));
        out.set_num("numbound_n_ldur", ratio(bnd, Some(ling_dur)));
        out.set_num("numacc_n_rdur", ratio(acc, regr_dur));
        out.set_num("numbound_n_rdur", ratio(bnd, regr_dur));
    }
}

/// Maximum of the median-smoothed contour, smoothing each voiced run separately.
fn smoothed_max(f0: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut i = 0;
    while i < f0.len() {
        if f0[i] <= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        while i < f0.len() && f0[i] > 0.0 {
            i += 1;
        }
        let run = median_smooth(&f0[start..i], MEDIAN_WINDOW);
        let m = max(&run);
        best = match (best, m) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
    }
    best
}

/// RMS energy and SNR-CDF features.
pub fn extract_energy(utt: &Utterance, ctx: &SideContext, out: &mut FeatureVector) {
    let frames = &ctx.side.frames;
    let regions = UttRegions::new(utt, frames.len());
    let rms = &frames.rms;
    out.set_num("utt_nrg_mean", mean(&rms[regions.whole.clone()]));
    let end = mean(&rms[regions.end.clone()]);
    let pen = mean(&rms[regions.penultimate.clone()]);
    out.set_num("end_nrg_mean", end);
    out.set_num("pen_nrg_mean", pen);
    out.set_num("abs_nrg_diff", diff(end, pen));
    out.set_num("rel_nrg_diff", ratio(end, pen));
    let side_sd = ctx.stats.rms_sd.filter(|&v| v > 0.0);
    out.set_num("norm_nrg_diff", ratio(diff(end, pen), side_sd));

    let snr = &frames.snr_cdf[regions.whole];
    let (lo, hi) = (min(snr), max(snr));
    out.set_num("snr_mean_utt", mean(snr));
    out.set_num("snr_sd_utt", population_sd(snr));
    out.set_num("snr_diff_utt", diff(hi, lo));
    out.set_num("snr_min_utt", lo);
    out.set_num("snr_max_utt", hi);
}

/// Speaking-rate features over the utterance's defined rate frames.
pub fn extract_enrate(utt: &Utterance, ctx: &SideContext, out: &mut FeatureVector) {
    let regions = UttRegions::new(utt, ctx.rate.len());
    let vals: Vec<f64> = ctx.rate[regions.whole].iter().flatten().copied().collect();
    let m = mean(&vals);
    out.set_num("mean_enr_utt", m);
    out.set_num("mean_enr_utt_norm", ratio(m, ctx.stats.enrate_mean));
    out.set_num("stdev_enr_utt", population_sd(&vals));
    out.set_num("min_enr_utt", min(&vals));
    out.set_num("max_enr_utt", max(&vals));
}

pub fn extract_gender(side: &ConversationSide, out: &mut FeatureVector) {
    out.set_cat("speaker_gender", Some(side.speaker_gender.as_str()));
    out.set_cat("listener_gender", Some(side.listener_gender.as_str()));
}

/// Every feature group for one utterance.
pub fn extract_utterance(utt: &Utterance, ctx: &SideContext) -> FeatureVector {
    let mut v = FeatureVector::new();
    extract_duration(utt, ctx, &mut v);
    extract_pause(utt, ctx, &mut v);
    extract_f0(utt, ctx, &mut v);
    extract_energy(utt, ctx, &mut v);
    extract_enrate(utt, ctx, &mut v);
    extract_gender(ctx.side, &mut v);
    v
}
