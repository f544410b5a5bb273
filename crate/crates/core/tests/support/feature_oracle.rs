//! Hand-designed conversation side and a from-scratch recomputation of every
//! track-derived feature. All positions are integer frames; nothing here
//! calls into the extraction code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use prosact_core::corpus::{Channel, ConversationSide, FrameTrack, Gender, Utterance, Word};

pub const PLATEAU_HZ: f64 = 150.0;
pub const PLATEAU_FRAMES: usize = 300;
/// 0.75 of the plateau, which is the histogram mode by construction.
pub const THRESHOLD: f64 = 112.5;

#[derive(Clone, Copy)]
pub enum F0Shape {
    /// `a + b·k` Hz at frame offset `k` inside words.
    Ramp { a: f64, b: f64 },
    /// Constant, then rising by `rise` Hz per frame over the final 20 frames.
    FlatThenRise { level: f64, rise: f64 },
    Unvoiced,
}

#[derive(Clone, Copy)]
pub enum Snr {
    Const(f64),
    /// `k / (len − 1)` over the utterance.
    Ramp,
}

#[derive(Clone, Copy)]
pub enum Rate {
    Const(f64),
    Alternate(f64, f64),
    Undefined,
}

#[derive(Clone)]
pub struct UttDesign {
    pub len: usize,
    /// Word spans as frame offsets from the utterance start.
    pub words: Vec<(usize, usize)>,
    pub f0: F0Shape,
    /// Offsets forced to 90 Hz (voiced, below the good-F0 threshold).
    pub creak: Vec<usize>,
    /// RMS for the whole utterance, then optional penultimate and end overrides.
    pub rms: (f64, Option<f64>, Option<f64>),
    pub snr: Snr,
    pub rate: Rate,
}

pub fn designs() -> Vec<UttDesign> {
    let d = |len, words: &[(usize, usize)], f0, rms, snr, rate| UttDesign {
        len,
        words: words.to_vec(),
        f0,
        creak: Vec::new(),
        rms,
        snr,
        rate,
    };
    let mut v = vec![
        d(250, &[(0, 100), (140, 250)], F0Shape::Ramp { a: 160.0, b: 0.2 }, (0.5, None, None), Snr::Const(0.7), Rate::Const(4.0)),
        d(200, &[(0, 50), (55, 120), (150, 200)], F0Shape::Ramp { a: 180.0, b: -0.3 }, (0.3, Some(0.4), Some(0.8)), Snr::Ramp, Rate::Alternate(3.0, 5.0)),
        d(400, &[(0, 150), (350, 400)], F0Shape::Ramp { a: 140.0, b: 0.05 }, (0.25, None, None), Snr::Const(0.5), Rate::Undefined),
        d(15, &[(0, 15)], F0Shape::Ramp { a: 200.0, b: 1.0 }, (0.45, None, None), Snr::Ramp, Rate::Const(5.5)),
        d(200, &[(0, 200)], F0Shape::Ramp { a: 170.0, b: 0.1 }, (0.6, None, None), Snr::Const(0.3), Rate::Const(3.5)),
        d(100, &[(0, 30), (45, 100)], F0Shape::Unvoiced, (0.2, None, None), Snr::Const(0.4), Rate::Const(4.2)),
        d(260, &[(0, 80), (90, 160), (175, 260)], F0Shape::FlatThenRise { level: 120.0, rise: 2.0 }, (0.35, None, None), Snr::Ramp, Rate::Alternate(2.0, 6.0)),
        d(150, &[(0, 150)], F0Shape::Ramp { a: 210.0, b: -0.5 }, (0.4, Some(0.5), Some(0.25)), Snr::Const(0.9), Rate::Const(4.8)),
        d(300, &[(0, 70), (75, 140), (160, 220), (250, 300)], F0Shape::Ramp { a: 130.0, b: 0.25 }, (0.55, None, None), Snr::Ramp, Rate::Const(6.0)),
        d(120, &[(10, 110)], F0Shape::Ramp { a: 190.0, b: -0.1 }, (0.35, None, None), Snr::Const(0.6), Rate::Const(3.0)),
    ];
    v[4].creak = vec![50, 51, 120];
    v
}

/// Frame at which utterance `k` starts.
pub fn utt_start(k: usize) -> usize {
    400 + 500 * k
}

pub fn build_side(designs: &[UttDesign], offset_frames: usize) -> ConversationSide {
    let n = offset_frames + utt_start(designs.len()) + 100;
    let mut f0 = vec![0.0; n];
    let mut rms = vec![0.01; n];
    let mut snr = vec![0.05; n];
    let mut rate = vec![None; n];
    for i in 0..PLATEAU_FRAMES {
        f0[offset_frames + i] = PLATEAU_HZ;
        rms[offset_frames + i] = 0.2;
        rate[offset_frames + i] = Some(5.0);
    }
    let mut utterances = Vec::new();
    for (k, d) in designs.iter().enumerate() {
        let s = offset_frames + utt_start(k);
        for &(ws, we) in &d.words {
            for o in ws..we {
                f0[s + o] = match d.f0 {
                    F0Shape::Ramp { a, b } => a + b * o as f64,
                    F0Shape::FlatThenRise { level, rise } => {
                        let rise_from = d.len.saturating_sub(20);
                        if o >= rise_from {
                            level + rise * (o - rise_from + 1) as f64
                        } else {
                            level
                        }
                    }
                    F0Shape::Unvoiced => 0.0,
                };
            }
        }
        for &o in &d.creak {
            f0[s + o] = 90.0;
        }
        for o in 0..d.len {
            let (base, pen, end) = d.rms;
            rms[s + o] = if o + 20 >= d.len {
                end.unwrap_or(base)
            } else if o + 40 >= d.len {
                pen.unwrap_or(base)
            } else {
                base
            };
            snr[s + o] = match d.snr {
                Snr::Const(c) => c,
                Snr::Ramp => o as f64 / (d.len - 1) as f64,
            };
            rate[s + o] = match d.rate {
                Rate::Const(r) => Some(r),
                Rate::Alternate(x, y) => Some(if o % 2 == 0 { x } else { y }),
                Rate::Undefined => None,
            };
        }
        let t = |f: usize| f as f64 / 100.0;
        utterances.push(Utterance {
            utt_id: format!("u{k}"),
            da_tag: "sd".into(),
            da_class: "Statement".into(),
            start: t(s),
            end: t(s + d.len),
            words: d
                .words
                .iter()
                .enumerate()
                .map(|(j, &(ws, we))| Word {
                    token: format!("w{j}"),
                    start: t(s + ws),
                    end: t(s + we),
                })
                .collect(),
            events: None,
        });
    }
    ConversationSide {
        conv_id: "hand".into(),
        side: Channel::A,
        speaker_gender: Gender::F,
        listener_gender: Gender::M,
        speaker_id: None,
        frames: FrameTrack {
            f0,
            rms,
            snr_cdf: snr,
            rate: Some(rate),
        },
        utterances,
    }
}

fn avg(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn psd(xs: &[f64]) -> Option<f64> {
    let m = avg(xs)?;
    Some((xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt())
}

fn div(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

fn sub(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn ln_div(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    div(a, b).filter(|r| *r > 0.0).map(f64::ln)
}

/// Slope, value at the first point and x-extent from the normal equations.
fn fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let den = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / den;
    let icpt = (sy - slope * sx) / n;
    let x0 = points[0].0;
    Some((slope, icpt + slope * x0, points[points.len() - 1].0 - x0))
}

fn median5_root(run: &[f64]) -> Vec<f64> {
    let mut cur = run.to_vec();
    loop {
        let next: Vec<f64> = (0..cur.len())
            .map(|i| {
                let mut w: Vec<f64> = (0..5)
                    .map(|k| {
                        let j = i as i64 + k - 2;
                        cur[j.clamp(0, cur.len() as i64 - 1) as usize]
                    })
                    .collect();
                w.sort_by(f64::total_cmp);
                w[2]
            })
            .collect();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Expected value of every non-event feature for each utterance of `side`.
pub fn expected(side: &ConversationSide) -> Vec<BTreeMap<&'static str, Option<f64>>> {
    let tr = &side.frames;
    let f0 = &tr.f0;
    let n = f0.len();
    let frame = |t: f64| (t * 100.0).round() as usize;

    let good_all: Vec<f64> = f0.iter().copied().filter(|&v| v > THRESHOLD).collect();
    let side_mean = avg(&good_all);
    let side_sd = psd(&good_all).filter(|&s| s > 0.0);
    let side_max = f0.iter().copied().filter(|&v| v > 0.0).reduce(f64::max);

    // speech runs from words, interior gaps < 10 frames merged, runs >= 100 kept
    let mut speech = vec![false; n];
    for u in &side.utterances {
        for w in &u.words {
            for m in &mut speech[frame(w.start)..frame(w.end)] {
                *m = true;
            }
        }
    }
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if speech[i] {
            let s = i;
            while i < n && speech[i] {
                i += 1;
            }
            match runs.last_mut() {
                Some(last) if s - last.1 < 10 => last.1 = i,
                _ => runs.push((s, i)),
            }
        } else {
            i += 1;
        }
    }
    let mut cont = vec![false; n];
    for &(s, e) in runs.iter().filter(|(s, e)| e - s >= 100) {
        for c in &mut cont[s..e] {
            *c = true;
        }
    }

    let pauses_of = |u: &Utterance| -> Vec<f64> {
        u.words
            .windows(2)
            .map(|w| frame(w[1].start) - frame(w[0].end))
            .filter(|&g| g >= 10)
            .map(|g| g as f64 / 100.0)
            .collect()
    };
    let all_pauses: Vec<f64> = side.utterances.iter().flat_map(&pauses_of).collect();
    let side_pause = avg(&all_pauses);
    let utt_rms: Vec<f64> = side
        .utterances
        .iter()
        .flat_map(|u| tr.rms[frame(u.start)..frame(u.end)].to_vec())
        .collect();
    let side_rms_sd = psd(&utt_rms).filter(|&s| s > 0.0);
    let rate = tr.rate.as_ref().unwrap();
    let side_rate = avg(&rate.iter().flatten().copied().collect::<Vec<_>>());

    let mut out = Vec::new();
    for u in &side.utterances {
        let (s, e) = (frame(u.start), frame(u.end));
        let end_s = e.saturating_sub(20).max(s);
        let pen_s = end_s.saturating_sub(20).max(s);
        let ldur = (e - s) as f64 / 100.0;
        let mut m: BTreeMap<&'static str, Option<f64>> = BTreeMap::new();

        let voiced: Vec<f64> = f0[s..e].iter().copied().filter(|&v| v > 0.0).collect();
        let good_in = |a: usize, b: usize| -> Vec<f64> { f0[a..b].iter().copied().filter(|&v| v > THRESHOLD).collect() };
        let pts_in = |a: usize, b: usize| -> Vec<(f64, f64)> {
            (a..b).filter(|&i| f0[i] > THRESHOLD).map(|i| (i as f64 * 0.01, f0[i])).collect()
        };
        let good = good_in(s, e);
        let whole_fit = fit(&pts_in(s, e));
        let pauses = pauses_of(u);
        let total: f64 = pauses.iter().sum();
        let cont_n = cont[s..e].iter().filter(|&&c| c).count() as f64;

        m.insert("ling_dur", Some(ldur));
        m.insert("ling_dur_minus_min10pause", Some(ldur - total));
        m.insert("cont_speech_frames", Some(cont_n));
        m.insert("f0_num_utt", Some(voiced.len() as f64));
        m.insert("f0_num_good_utt", Some(good.len() as f64));
        m.insert("regr_num_frames", Some(good.len() as f64));
        m.insert("regr_dur", whole_fit.map(|f| f.2));

        m.insert("min10pause_count_n_ldur", Some(pauses.len() as f64 / ldur));
        m.insert("total_min10pause_dur_n_ldur", Some(total / ldur));
        m.insert("mean_min10pause_dur_utt", avg(&pauses));
        m.insert("mean_min10pause_dur_ncv", div(avg(&pauses), side_pause));
        m.insert("cont_speech_frames_n", Some(cont_n / ldur));

        let mg = avg(&good);
        let sg = psd(&good);
        let vmax = voiced.iter().copied().reduce(f64::max);
        m.insert("f0_mean_good_utt", mg);
        m.insert("f0_sd_good_utt", sg);
        m.insert("f0_mean_n", sub(mg, side_mean));
        m.insert("f0_mean_ratio", div(mg, side_mean));
        m.insert("f0_mean_zcv", div(sub(mg, side_mean), side_sd));
        m.insert("f0_sd_n", ln_div(sg, side_sd));
        m.insert("f0_max_n", ln_div(vmax, side_max));
        m.insert("f0_max_utt", vmax);
        m.insert("f0_min_utt", voiced.iter().copied().reduce(f64::min));
        let mut smooth_max: Option<f64> = None;
        let mut i = s;
        while i < e {
            if f0[i] > 0.0 {
                let rs = i;
                while i < e && f0[i] > 0.0 {
                    i += 1;
                }
                for v in median5_root(&f0[rs..i]) {
                    smooth_max = Some(smooth_max.map_or(v, |m| m.max(v)));
                }
            } else {
                i += 1;
            }
        }
        m.insert("max_f0_smooth", smooth_max);
        m.insert("f0_percent_good_utt", div(Some(good.len() as f64), Some(voiced.len() as f64)));
        m.insert("utt_grad", whole_fit.map(|f| f.0));
        m.insert("regr_start_f0", whole_fit.map(|f| f.1));
        m.insert("pen_grad", fit(&pts_in(pen_s, end_s)).map(|f| f.0));
        m.insert("end_grad", fit(&pts_in(end_s, e)).map(|f| f.0));
        let em = avg(&good_in(end_s, e));
        let pm = avg(&good_in(pen_s, end_s));
        m.insert("end_f0_mean", em);
        m.insert("pen_f0_mean", pm);
        m.insert("abs_f0_diff", sub(em, pm));
        m.insert("rel_f0_diff", div(em, pm));
        m.insert("norm_end_f0_mean", div(sub(em, side_mean), side_sd));
        m.insert("norm_pen_f0_mean", div(sub(pm, side_mean), side_sd));
        m.insert("norm_f0_diff", div(sub(em, pm), side_sd));

        let er = avg(&tr.rms[end_s..e]);
        let pr = avg(&tr.rms[pen_s..end_s]);
        m.insert("utt_nrg_mean", avg(&tr.rms[s..e]));
        m.insert("end_nrg_mean", er);
        m.insert("pen_nrg_mean", pr);
        m.insert("abs_nrg_diff", sub(er, pr));
        m.insert("rel_nrg_diff", div(er, pr));
        m.insert("norm_nrg_diff", div(sub(er, pr), side_rms_sd));
        let snr = &tr.snr_cdf[s..e];
        let lo = snr.iter().copied().reduce(f64::min);
        let hi = snr.iter().copied().reduce(f64::max);
        m.insert("snr_mean_utt", avg(snr));
        m.insert("snr_sd_utt", psd(snr));
        m.insert("snr_diff_utt", sub(hi, lo));
        m.insert("snr_min_utt", lo);
        m.insert("snr_max_utt", hi);

        let rv: Vec<f64> = rate[s..e].iter().flatten().copied().collect();
        m.insert("mean_enr_utt", avg(&rv));
        m.insert("mean_enr_utt_norm", div(avg(&rv), side_rate));
        m.insert("stdev_enr_utt", psd(&rv));
        m.insert("min_enr_utt", rv.iter().copied().reduce(f64::min));
        m.insert("max_enr_utt", rv.iter().copied().reduce(f64::max));
        out.push(m);
    }
    out
}

/// `|a − b| ≤ tol·max(|a|, |b|)`, with an absolute floor for values near zero.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
}

/// Mismatches between the extractor and the oracle, plus a count of the
/// values compared.
pub fn compare(side: &ConversationSide, tol: f64) -> (Vec<String>, usize) {
    let rows = prosact_core::prosody::extract_side(side);
    let want = expected(side);
    let mut bad = Vec::new();
    let mut checked = 0;
    for (row, exp) in rows.iter().zip(&want) {
        for (name, e) in exp {
            checked += 1;
            let got = row.values.num(name);
            let ok = match (got, *e) {
                (None, None) => true,
                (Some(g), Some(e)) => close(g, e, tol),
                _ => false,
            };
            if !ok {
                bad.push(format!("{} {name}: got {got:?}, expected {e:?}", row.utt_id));
            }
        }
        for (name, e) in [("speaker_gender", side.speaker_gender), ("listener_gender", side.listener_gender)] {
            checked += 1;
            let got = row.values.get(name).and_then(|v| v.as_cat());
            if got != Some(e.as_str()) {
                bad.push(format!("{} {name}: got {got:?}", row.utt_id));
            }
        }
    }
    (bad, checked)
}

/// Random utterance layouts whose voiced F0 stays inside [156, 199] Hz. With
/// any mode up to 200 Hz every voiced frame stays above threshold, also after
/// moderate shifts and scalings of the track.
pub fn random_designs(seed: u64, n: usize) -> Vec<UttDesign> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(10..=450);
            let mut words = Vec::new();
            let mut o = rng.random_range(0..5.min(len));
            while o < len {
                let w = rng.random_range(5..=80).min(len - o);
                words.push((o, o + w));
                o += w + rng.random_range(0..40);
            }
            let a = rng.random_range(160.0..195.0);
            let span = (len - 1).max(1) as f64;
            let f0 = match rng.random_range(0..6) {
                0 => F0Shape::Unvoiced,
                1 => F0Shape::FlatThenRise {
                    level: rng.random_range(156.0..175.0),
                    rise: rng.random_range(0.0..1.2),
                },
                _ => F0Shape::Ramp {
                    a,
                    b: rng.random_range((156.0 - a) / span..(199.0 - a) / span),
                },
            };
            let base = rng.random_range(0.05..1.0);
            let rms = (
                base,
                rng.random_bool(0.5).then(|| rng.random_range(0.05..1.0)),
                rng.random_bool(0.5).then(|| rng.random_range(0.05..1.0)),
            );
            let snr = if rng.random_bool(0.5) { Snr::Ramp } else { Snr::Const(rng.random_range(0.0..1.0)) };
            let rate = match rng.random_range(0..3) {
                0 => Rate::Undefined,
                1 => Rate::Const(rng.random_range(2.0..7.0)),
                _ => Rate::Alternate(rng.random_range(2.0..4.0), rng.random_range(4.0..7.0)),
            };
            UttDesign {
                len,
                words,
                f0,
                creak: Vec::new(),
                rms,
                snr,
                rate,
            }
        })
        .collect()
}

/// Side from [`random_designs`] with the mode-fixing plateau moved to 170 Hz,
/// inside the utterance F0 range.
pub fn random_side(seed: u64, n: usize) -> ConversationSide {
    let mut side = build_side(&random_designs(seed, n), 0);
    for v in &mut side.frames.f0[..PLATEAU_FRAMES] {
        *v = 170.0;
    }
    side
}
