//! Published results on the original telephone-speech corpus, shipped for
//! side-by-side display in reports. They cannot be recomputed from local or
//! synthetic data.

use std::fmt::Write as _;

/// First line of every rendered reference file.
pub const NOTICE: &str = "# reference values from the original corpus study; not recomputable from local data";

/// Accuracy table: columns are held-out on true words, development on true
/// words and development on recognizer N-best lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultTable {
    pub samples: [u32; 3],
    pub chance: f64,
    pub tree: [f64; 3],
    pub words: [f64; 3],
    pub words_tree: [f64; 3],
    pub efficiency: Option<f64>,
    pub tree_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub task: &'static str,
    pub results: Option<ResultTable>,
    /// Tree accuracy when no full table was published.
    pub tree_accuracy: Option<f64>,
    pub usage_by_group: &'static [(&'static str, f64)],
    /// (group, feature, usage) as published.
    pub usage_by_feature: &'static [(&'static str, &'static str, f64)],
}

#[allow(clippy::approx_constant)] // 0.318 is a usage share, not 1/π
pub const REFERENCES: &[Reference] = &[
    Reference {
        task: "seven-way",
        results: Some(ResultTable {
            samples: [2737, 287, 287],
            chance: 14.29,
            tree: [41.15, 38.03, 38.03],
            words: [67.61, 70.30, 58.77],
            words_tree: [69.98, 71.14, 60.12],
            efficiency: Some(16.8),
            tree_accuracy: 41.15,
        }),
        tree_accuracy: Some(41.15),
        usage_by_group: &[
            ("Duration", 0.554),
            ("F0", 0.126),
            ("Pause", 0.121),
            ("Energy", 0.104),
            ("Enrate", 0.094),
        ],
        usage_by_feature: &[
            ("Duration", "regr_num_frames", 0.180),
            ("Duration", "ling_dur", 0.141),
            ("Pause", "cont_speech_frames_utt_n", 0.121),
            ("Enrate", "stdev_enr_utt", 0.081),
            ("Enrate", "ling_dur_minus_min10pause", 0.077),
            ("Pause", "cont_speech_frames_utt", 0.073),
            ("Energy", "snr_max_utt", 0.049),
            ("Energy", "snr_mean_utt", 0.043),
            ("Duration", "regr_dur", 0.041),
            ("F0", "f0_mean_zcv", 0.036),
            ("F0", "f0_mean_n", 0.027),
            ("Duration", "f0_num_good_utt", 0.021),
            ("Duration", "f0_num_utt", 0.019),
            ("F0", "norm_end_f0_mean", 0.017),
            ("F0", "numacc_n_rdur", 0.016),
            ("F0", "f0_sd_good_utt", 0.015),
            ("Energy", "mean_enr_utt", 0.009),
            ("F0", "f0_max_n", 0.006),
            ("Energy", "snr_sd_utt", 0.006),
            ("Energy", "rel_nrg_diff", 0.005),
            ("Enrate", "mean_enr_utt_norm", 0.004),
            ("F0", "regr_start_f0", 0.003),
            ("F0", "finalb_amp", 0.003),
        ],
    },
    Reference {
        task: "q-vs-s",
        results: Some(ResultTable {
            samples: [1852, 266, 266],
            chance: 50.0,
            tree: [74.21, 75.97, 75.97],
            words: [83.65, 85.85, 75.43],
            words_tree: [85.64, 87.58, 79.76],
            efficiency: Some(20.9),
            tree_accuracy: 74.21,
        }),
        tree_accuracy: Some(74.21),
        usage_by_group: &[],
        usage_by_feature: &[
            ("Duration", "regr_dur", 0.332),
            ("Pause", "cont_speech_frames_n", 0.323),
            ("F0", "f0_mean_n", 0.168),
            ("F0", "f0_mean_zcv", 0.088),
            ("Enrate", "stdev_enr_utt", 0.065),
            ("F0", "end_grad", 0.024),
        ],
    },
    Reference {
        task: "four-way-question",
        results: None,
        tree_accuracy: Some(47.15),
        usage_by_group: &[("F0", 0.432), ("Duration", 0.318), ("Pause", 0.213), ("Enrate", 0.037)],
        usage_by_feature: &[],
    },
    Reference {
        task: "incomplete-vs-rest",
        results: Some(ResultTable {
            samples: [2646, 366, 366],
            chance: 50.0,
            tree: [72.16, 72.01, 72.01],
            words: [88.44, 89.91, 82.38],
            words_tree: [88.74, 90.49, 84.56],
            efficiency: None,
            tree_accuracy: 72.16,
        }),
        tree_accuracy: Some(72.16),
        usage_by_group: &[
            ("Duration", 0.557),
            ("Energy", 0.182),
            ("Enrate", 0.130),
            ("F0", 0.087),
            ("Pause", 0.044),
        ],
        usage_by_feature: &[],
    },
    Reference {
        task: "backchannel-vs-agreement",
        results: Some(ResultTable {
            samples: [2520, 214, 214],
            chance: 50.0,
            tree: [68.77, 72.88, 72.88],
            words: [68.63, 80.99, 78.22],
            words_tree: [76.90, 84.74, 81.70],
            efficiency: Some(12.21),
            tree_accuracy: 68.77,
        }),
        tree_accuracy: Some(68.77),
        usage_by_group: &[],
        usage_by_feature: &[],
    },
];

pub fn reference(task: &str) -> Option<&'static Reference> {
    REFERENCES.iter().find(|r| r.task == task)
}

impl Reference {
    /// CSV rendering with the [`NOTICE`] line first.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{NOTICE}\n");
        if let Some(t) = &self.results {
            out.push_str("metric,HLD true words,DEV true words,DEV N-best\n");
            let s = t.samples;
            let _ = writeln!(out, "samples,{},{},{}", s[0], s[1], s[2]);
            let _ = writeln!(out, "chance (%),{0:.2},{0:.2},{0:.2}", t.chance);
            for (name, row) in [("tree (%)", t.tree), ("words (%)", t.words), ("words+tree (%)", t.words_tree)] {
                let _ = writeln!(out, "{name},{:.2},{:.2},{:.2}", row[0], row[1], row[2]);
            }
            if let Some(e) = t.efficiency {
                let _ = writeln!(out, "tree efficiency (%),{e:.2},,");
            }
        } else if let Some(a) = self.tree_accuracy {
            let _ = writeln!(out, "metric,value\ntree (%),{a:.2}");
        }
        if !self.usage_by_group.is_empty() {
            out.push_str("\ngroup,usage\n");
            for (g, u) in self.usage_by_group {
                let _ = writeln!(out, "{g},{u:.3}");
            }
        }
        if !self.usage_by_feature.is_empty() {
            out.push_str("\ngroup,feature,usage\n");
            for (g, f, u) in self.usage_by_feature {
                let _ = writeln!(out, "{g},{f},{u:.3}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_usage_tables_sum_near_one() {
        for r in REFERENCES {
            if !r.usage_by_group.is_empty() {
                let s: f64 = r.usage_by_group.iter().map(|x| x.1).sum();
                assert!((s - 1.0).abs() < 0.01, "{} {s}", r.task);
            }
        }
    }

    #[test]
    fn every_task_renders_with_notice() {
        for r in REFERENCES {
            assert!(r.to_csv().starts_with(NOTICE));
        }
        let csv = reference("seven-way").unwrap().to_csv();
        assert!(csv.contains("chance (%),14.29,14.29,14.29"));
        assert!(csv.contains("tree (%),41.15,38.03,38.03"));
        assert!(reference("custom").is_none());
    }
}
