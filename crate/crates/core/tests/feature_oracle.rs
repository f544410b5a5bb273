mod support;

use prosact_core::prosody::{extract_side, f0_mode, FEATURES, EVENT_FEATURES};
use support::feature_oracle::{build_side, compare, designs, expected, PLATEAU_HZ};

#[test]
fn plateau_fixes_the_mode() {
    let side = build_side(&designs(), 0);
    assert_eq!(f0_mode(&side.frames.f0), Some(PLATEAU_HZ));
}

#[test]
fn oracle_covers_every_track_feature() {
    let side = build_side(&designs(), 0);
    let exp = expected(&side);
    let n_cat = 2;
    assert_eq!(exp[0].len() + EVENT_FEATURES.len() + n_cat, FEATURES.len());
}

#[test]
fn extractor_matches_oracle() {
    let side = build_side(&designs(), 0);
    side.validate().unwrap();
    let (bad, checked) = compare(&side, 1e-6);
    assert!(checked > 500);
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn hand_values() {
    let side = build_side(&designs(), 0);
    let rows = extract_side(&side);
    let v = |u: usize, name: &str| rows[u].values.num(name);
    let near = |a: Option<f64>, b: f64| a.is_some_and(|a| (a - b).abs() < 1e-9);

    assert!(near(v(0, "ling_dur"), 2.5));
    assert!(near(v(0, "ling_dur_minus_min10pause"), 2.1));
    assert!(near(v(0, "min10pause_count_n_ldur"), 0.4));
    assert!(near(v(0, "cont_speech_frames"), 210.0));
    assert!(near(v(0, "utt_grad"), 20.0));
    assert!(near(v(0, "regr_start_f0"), 160.0));

    assert!(near(v(1, "rel_nrg_diff"), 2.0));
    assert!(near(v(1, "snr_diff_utt"), 1.0));
    assert!(near(v(1, "snr_mean_utt"), 0.5));
    assert!(near(v(1, "mean_enr_utt"), 4.0));
    assert!(near(v(1, "stdev_enr_utt"), 1.0));
    assert!(near(v(1, "mean_min10pause_dur_utt"), 0.3));

    assert!(near(v(2, "cont_speech_frames"), 150.0));
    assert_eq!(v(2, "mean_enr_utt"), None);

    assert_eq!(v(3, "pen_f0_mean"), None);
    assert_eq!(v(3, "pen_nrg_mean"), None);
    assert!(near(v(3, "end_grad"), 100.0));

    assert!(near(v(4, "f0_min_utt"), 90.0));
    assert!(near(v(4, "f0_percent_good_utt"), 197.0 / 200.0));

    assert_eq!(v(5, "f0_mean_good_utt"), None);
    assert_eq!(v(5, "f0_percent_good_utt"), None);
    assert!(near(v(5, "f0_num_utt"), 0.0));

    assert!(near(v(7, "utt_grad"), -50.0));
    assert!(near(v(7, "end_grad"), -50.0));
    assert!(near(v(7, "rel_nrg_diff"), 0.5));
}

#[test]
fn features_ignore_absolute_position() {
    let a = extract_side(&build_side(&designs(), 0));
    let b = extract_side(&build_side(&designs(), 137));
    for (ra, rb) in a.iter().zip(&b) {
        for (def, va) in ra.values.iter() {
            let vb = rb.values.get(def.name);
            match (va.and_then(|x| x.as_num()), vb.and_then(|x| x.as_num())) {
                (Some(x), Some(y)) => assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{} {}", ra.utt_id, def.name),
                (x, y) => assert_eq!(x.is_some(), y.is_some(), "{} {}", ra.utt_id, def.name),
            }
        }
    }
}
