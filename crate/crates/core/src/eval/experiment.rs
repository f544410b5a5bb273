use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion_csv, efficiency, efficiency_leaf, evaluate, EvalResult};
use super::reference::reference;
use super::stats::{binomial_test, sign_test, SignTestResult};
use super::task::TaskSpec;
use crate::corpus::{downsample, Corpus, SplitName, TagMap, Utterance};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::fusion::{default_grid, tune_lambda, ScoreTable, TuneReport, UttScores};
use crate::lm::{nbest_likelihood, normalize_words, train_lm, ClassMixture, LmConfig, NBestList, DEFAULT_ACOUSTIC_SCALE};
use crate::prosody::{extract_all, FeatureTable};
use crate::trees::{
    decide, feature_sweep, grow, prune_cv_report, usage, Dataset, PruneReport, SweepMode, TreeConfig, TreeModel,
    UsageReport,
};

/// Two-tailed level at which a sweep run counts as a significant drop.
pub const SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Top-level seed; downsampling and fold seeds are derived from it.
    pub seed: u64,
    pub tree: TreeConfig,
    pub lm: LmConfig,
    pub lambda_grid: Vec<f64>,
    /// Weight of the recognizer's natural-log acoustic score in N-best sums.
    pub acoustic_scale: f64,
    pub sweeps: Vec<SweepMode>,
    pub train_split: SplitName,
    pub test_split: SplitName,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            tree: TreeConfig::default(),
            lm: LmConfig::default(),
            lambda_grid: default_grid(),
            acoustic_scale: DEFAULT_ACOUSTIC_SCALE,
            sweeps: vec![SweepMode::LeaveOneOut, SweepMode::LeaveOneIn],
            train_split: SplitName::TRN,
            test_split: SplitName::HLD,
        }
    }
}

/// Word-based results under one test condition (true words or N-best).
#[derive(Debug, Clone)]
pub struct Condition {
    pub name: String,
    pub scores: ScoreTable,
    pub words: EvalResult,
    pub fused: EvalResult,
    pub tuning: TuneReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub mode: SweepMode,
    pub name: String,
    pub groups: Vec<String>,
    pub leaves: usize,
    pub accuracy: f64,
    pub efficiency: f64,
    /// Against the all-groups tree of the same sweep; `None` for that tree.
    pub sign: Option<SignTestResult>,
    pub significant_drop: bool,
}

#[derive(Debug, Clone)]
pub struct TaskReport {
    pub task: TaskSpec,
    pub classes: Vec<String>,
    pub config: ExperimentConfig,
    pub n_train: usize,
    pub tree: TreeModel,
    pub prune: PruneReport,
    pub tree_result: EvalResult,
    pub tree_efficiency_leaf: f64,
    pub tree_binomial_p: f64,
    pub conditions: Vec<Condition>,
    pub sweeps: Vec<SweepRow>,
    pub usage: UsageReport,
}

struct Labelled<'a> {
    utt: &'a Utterance,
    label: usize,
}

fn labelled<'a>(corpus: &'a Corpus, split: SplitName, task: &TaskSpec) -> Result<Vec<Labelled<'a>>> {
    Ok(corpus
        .utterances_in(split)?
        .into_iter()
        .filter_map(|(_, utt)| {
            task.label(&utt.da_tag, &utt.da_class)
                .map(|label| Labelled { utt, label })
        })
        .collect())
}

/// Downsampled rows of `items` as (table row, label) pairs.
fn balanced(
    items: &[Labelled<'_>],
    classes: &[String],
    rows: &HashMap<&str, usize>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let names: Vec<&str> = items.iter().map(|x| classes[x.label].as_str()).collect();
    let kept = downsample(&names, classes, seed)?;
    let table_rows = kept.iter().map(|&i| rows[items[i].utt.utt_id.as_str()]).collect();
    let labels = kept.iter().map(|&i| items[i].label).collect();
    Ok((kept, table_rows, labels))
}

/// One mixture per task class over every known tag that the task maps to
/// it, weighted by tag-map counts (1 for tags the map does not list).
pub fn task_mixtures(task: &TaskSpec, tags: &TagMap, extra: &BTreeMap<String, String>) -> Result<Vec<ClassMixture>> {
    let mut known: BTreeMap<&str, (&str, f64)> = BTreeMap::new();
    for (t, info) in tags.tags() {
        known.insert(t, (info.class.as_str(), info.count.max(1) as f64));
    }
    for (t, group) in extra {
        known.entry(t.as_str()).or_insert((group.as_str(), 1.0));
    }
    task.class_names()
        .iter()
        .enumerate()
        .map(|(ci, name)| {
            let counts: Vec<(&str, f64)> = known
                .iter()
                .filter(|(t, (g, _))| task.label(t, g) == Some(ci))
                .map(|(t, (_, c))| (*t, *c))
                .collect();
            if counts.is_empty() {
                return Err(Error::EmptyClass(name.clone()));
            }
            ClassMixture::from_counts(name, &counts)
        })
        .collect()
}

fn condition(
    name: &str,
    classes: &[String],
    log_word: Vec<Vec<f64>>,
    ids: &[&str],
    posteriors: &[Vec<f64>],
    labels: &[usize],
    grid: &[f64],
) -> Result<Condition> {
    let scores = ScoreTable {
        classes: classes.to_vec(),
        rows: ids
            .iter()
            .zip(log_word)
            .zip(posteriors)
            .map(|((id, w), p)| UttScores {
                utt_id: id.to_string(),
                log_word: w,
                tree_posterior: p.clone(),
            })
            .collect(),
    };
    let tuning = tune_lambda(&scores, labels, grid)?;
    let k = classes.len();
    let words = evaluate(labels, &scores.word_decisions(), k)?;
    let fused = evaluate(labels, &scores.decisions(tuning.best_lambda)?, k)?;
    Ok(Condition {
        name: name.to_string(),
        scores,
        words,
        fused,
        tuning,
    })
}

/// Runs a complete task: downsampling, tree training and pruning, word
/// scoring, fusion, metrics, sweeps and usage. `nbest` adds a second word
/// condition scored on recognizer hypotheses.
pub fn run_task(
    corpus: &Corpus,
    task: &TaskSpec,
    tags: &TagMap,
    cfg: &ExperimentConfig,
    nbest: Option<&[NBestList]>,
) -> Result<TaskReport> {
    task.validate()?;
    let classes = task.class_names();
    let train = labelled(corpus, cfg.train_split, task)?;
    let test = labelled(corpus, cfg.test_split, task)?;

    let table: FeatureTable = extract_all(corpus);
    let rows: HashMap<&str, usize> = table.rows.iter().enumerate().map(|(i, r)| (r.utt_id.as_str(), i)).collect();
    if rows.len() != table.rows.len() {
        return Err(Error::invalid("utterance ids are not unique"));
    }

    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train_seed, test_seed, tree_seed) = (seeds.next_u64(), seeds.next_u64(), seeds.next_u64());
    let tree_cfg = TreeConfig {
        seed: tree_seed,
        ..cfg.tree.clone()
    };

    let (_, train_rows, train_labels) = balanced(&train, &classes, &rows, train_seed)?;
    let (test_kept, test_rows, test_labels) = balanced(&test, &classes, &rows, test_seed)?;
    let train_ds = Dataset::from_table(&table, &train_rows, train_labels, classes.clone())?;
    let test_ds = Dataset::from_table(&table, &test_rows, test_labels.clone(), classes.clone())?;
    log::info!(
        "task {}: {} training and {} test datapoints over {} classes",
        task.name,
        train_ds.len(),
        test_ds.len(),
        classes.len()
    );

    let grown = grow(&train_ds, &tree_cfg)?;
    let (tree, prune) = prune_cv_report(&grown, &train_ds, &tree_cfg)?;
    let posteriors = tree.classify_dataset(&test_ds)?;
    let k = classes.len();
    let prior = empirical_prior(&test_labels, k);
    let tree_pred: Vec<usize> = posteriors.iter().map(|p| decide(p)).collect();
    let mut tree_result = evaluate(&test_labels, &tree_pred, k)?;
    tree_result.efficiency = Some(efficiency(&prior, &posteriors, &test_labels)?);
    let tree_efficiency_leaf = efficiency_leaf(&prior, &posteriors)?;
    let correct = tree_pred.iter().zip(&test_labels).filter(|(a, b)| a == b).count() as u64;
    let tree_binomial_p = binomial_test(correct, test_labels.len() as u64, 1.0 / k as f64)?;

    let mut groups: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut tag_groups: BTreeMap<String, String> = BTreeMap::new();
    for (_, utt) in corpus.utterances_in(cfg.train_split)? {
        groups
            .entry(utt.da_tag.clone())
            .or_default()
            .push(normalize_words(&utt.transcript().collect::<Vec<_>>()));
        tag_groups.entry(utt.da_tag.clone()).or_insert_with(|| utt.da_class.clone());
    }
    let models = train_lm(&groups, &cfg.lm)?;
    let mixtures = task_mixtures(task, tags, &tag_groups)?;

    let test_items: Vec<&Labelled<'_>> = test_kept.iter().map(|&i| &test[i]).collect();
    let ids: Vec<&str> = test_items.iter().map(|x| x.utt.utt_id.as_str()).collect();
    let true_words: Vec<Vec<f64>> = test_items
        .par_iter()
        .map(|x| {
            let words = normalize_words(&x.utt.transcript().collect::<Vec<_>>());
            mixtures.iter().map(|m| m.ln_likelihood(&models, &words)).collect()
        })
        .collect();
    let mut conditions = vec![condition(
        "true words",
        &classes,
        true_words,
        &ids,
        &posteriors,
        &test_labels,
        &cfg.lambda_grid,
    )?];
    if let Some(lists) = nbest {
        let by_id: HashMap<&str, &NBestList> = lists.iter().map(|l| (l.utt_id.as_str(), l)).collect();
        let scored: Vec<Vec<f64>> = ids
            .par_iter()
            .map(|id| {
                let list = by_id
                    .get(id)
                    .ok_or_else(|| Error::invalid(format!("no N-best list for utterance {id}")))?;
                nbest_likelihood(&models, &mixtures, list, cfg.acoustic_scale)
            })
            .collect::<Result<_>>()?;
        conditions.push(condition("N-best", &classes, scored, &ids, &posteriors, &test_labels, &cfg.lambda_grid)?);
    }

    let mut sweeps = Vec::new();
    for &mode in &cfg.sweeps {
        sweeps.extend(sweep_rows(&train_ds, &test_ds, &prior, mode, &tree_cfg)?);
    }
    let usage = usage(&tree, &train_ds)?;

    Ok(TaskReport {
        task: task.clone(),
        classes,
        config: cfg.clone(),
        n_train: train_ds.len(),
        tree,
        prune,
        tree_result,
        tree_efficiency_leaf,
        tree_binomial_p,
        conditions,
        sweeps,
        usage,
    })
}

fn empirical_prior(labels: &[usize], k: usize) -> Vec<f64> {
    let mut p = vec![0.0; k];
    for &l in labels {
        p[l] += 1.0;
    }
    p.iter().map(|c| c / labels.len() as f64).collect()
}

fn sweep_rows(
    train: &Dataset,
    test: &Dataset,
    prior: &[f64],
    mode: SweepMode,
    cfg: &TreeConfig,
) -> Result<Vec<SweepRow>> {
    let runs = feature_sweep(train, mode, cfg)?;
    let mut outcomes = Vec::with_capacity(runs.len());
    for run in &runs {
        let post = run.model.classify_dataset(test)?;
        let correct: Vec<bool> = post.iter().zip(&test.labels).map(|(p, &l)| decide(p) == l).collect();
        let eff = efficiency(prior, &post, &test.labels)?;
        outcomes.push((correct, eff));
    }
    let base = &outcomes[0].0;
    let base_acc = fraction(base);
    runs.iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(i, (run, (correct, eff)))| {
            let accuracy = fraction(correct);
            let sign = if i == 0 { None } else { Some(sign_test(base, correct)?) };
            let significant_drop = sign
                .as_ref()
                .is_some_and(|s| s.p_two_tailed < SIGNIFICANCE && accuracy < base_acc);
            Ok(SweepRow {
                mode,
                name: run.name.clone(),
                groups: run.groups.iter().map(|g| g.to_string()).collect(),
                leaves: run.model.num_leaves(),
                accuracy,
                efficiency: *eff,
                sign,
                significant_drop,
            })
        })
        .collect()
}

fn fraction(xs: &[bool]) -> f64 {
    xs.iter().filter(|&&x| x).count() as f64 / xs.len() as f64
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn mode_name(mode: SweepMode) -> &'static str {
    match mode {
        SweepMode::LeaveOneOut => "leave-one-out",
        SweepMode::LeaveOneIn => "leave-one-in",
        SweepMode::LeaveTwoIn => "leave-two-in",
    }
}

fn slug(name: &str) -> String {
    name.to_ascii_lowercase().replace(|c: char| !c.is_ascii_alphanumeric(), "_")
}

#[derive(Serialize)]
struct Manifest<'a> {
    task: &'a TaskSpec,
    classes: &'a [String],
    config: &'a ExperimentConfig,
    files: &'a [String],
}

impl TaskReport {
    pub fn chance(&self) -> f64 {
        1.0 / self.classes.len() as f64
    }

    /// Accuracy table: one column per word condition.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("metric");
        for c in &self.conditions {
            let _ = write!(out, ",{}", c.name);
        }
        out.push('\n');
        let row = |out: &mut String, name: &str, f: &dyn Fn(&Condition) -> String| {
            out.push_str(name);
            for c in &self.conditions {
                let _ = write!(out, ",{}", f(c));
            }
            out.push('\n');
        };
        row(&mut out, "samples", &|c| c.words.n.to_string());
        row(&mut out, "chance (%)", &|_| pct(self.chance()));
        row(&mut out, "tree (%)", &|_| pct(self.tree_result.accuracy));
        row(&mut out, "words (%)", &|c| pct(c.words.accuracy));
        row(&mut out, "words+tree (%)", &|c| pct(c.fused.accuracy));
        row(&mut out, "lambda", &|c| format!("{:.1}", c.tuning.best_lambda));
        out
    }

    pub fn tree_metrics_csv(&self) -> String {
        let r = &self.tree_result;
        let mut out = String::from("metric,value\n");
        let _ = writeln!(out, "train_samples,{}", self.n_train);
        let _ = writeln!(out, "test_samples,{}", r.n);
        let _ = writeln!(out, "accuracy,{:.6}", r.accuracy);
        let _ = writeln!(out, "chance,{:.6}", r.chance);
        let _ = writeln!(out, "binomial_p,{:e}", self.tree_binomial_p);
        let _ = writeln!(out, "efficiency,{:.6}", r.efficiency.unwrap_or(f64::NAN));
        let _ = writeln!(out, "efficiency_leaf,{:.6}", self.tree_efficiency_leaf);
        let _ = writeln!(out, "leaves,{}", self.tree.num_leaves());
        out
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from(
            "mode,run,groups,leaves,accuracy,efficiency,n_differ,n_all_better,p_two_tailed,significant_drop\n",
        );
        for s in &self.sweeps {
            let (nd, nb, p) = match &s.sign {
                Some(t) => (t.n_differ.to_string(), t.n_first_better.to_string(), format!("{:e}", t.p_two_tailed)),
                None => (String::new(), String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.6},{nd},{nb},{p},{}",
                mode_name(s.mode),
                s.name,
                s.groups.join("+"),
                s.leaves,
                s.accuracy,
                s.efficiency,
                s.significant_drop
            );
        }
        out
    }

    pub fn prune_csv(&self) -> String {
        let mut out = String::from("alpha,cv_bits,chosen\n");
        for (i, (a, b)) in self.prune.alphas.iter().zip(&self.prune.cv_bits).enumerate() {
            let _ = writeln!(out, "{a:.6},{b:.6},{}", i == self.prune.chosen);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task: {}", self.task.name);
        let _ = writeln!(out, "classes: {}", self.classes.join(", "));
        let _ = writeln!(out, "seed: {}", self.config.seed);
        let _ = writeln!(out, "training datapoints: {}", self.n_train);
        let _ = writeln!(out, "test datapoints: {}", self.tree_result.n);
        let _ = writeln!(out, "tree leaves: {}", self.tree.num_leaves());
        let _ = writeln!(
            out,
            "tree accuracy: {}% (chance {}%, binomial p = {:.3e})",
            pct(self.tree_result.accuracy),
            pct(self.chance()),
            self.tree_binomial_p
        );
        if let Some(e) = self.tree_result.efficiency {
            let _ = writeln!(out, "tree efficiency: {}%", pct(e));
        }
        for c in &self.conditions {
            let _ = writeln!(
                out,
                "{}: words {}%, words+tree {}% at lambda {:.1}",
                c.name,
                pct(c.words.accuracy),
                pct(c.fused.accuracy),
                c.tuning.best_lambda
            );
        }
        let drops: Vec<&str> = self
            .sweeps
            .iter()
            .filter(|s| s.significant_drop)
            .map(|s| s.name.as_str())
            .collect();
        let _ = writeln!(
            out,
            "significant drops (p < {SIGNIFICANCE}): {}",
            if drops.is_empty() { "none".to_string() } else { drops.join(", ") }
        );
        out.push_str("usage by group:\n");
        for (g, u) in &self.usage.by_group {
            let _ = writeln!(out, "  {g:<10} {u:.3}");
        }
        out
    }

    /// Writes every report table into `dir` and returns the file names in
    /// the order written, ending with `manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut files: Vec<(String, String)> = vec![
            ("results.csv".into(), self.results_csv()),
            ("tree_metrics.csv".into(), self.tree_metrics_csv()),
            ("prune.csv".into(), self.prune_csv()),
            ("confusion_tree.csv".into(), confusion_csv(&self.classes, &self.tree_result.confusion)),
        ];
        for c in &self.conditions {
            let s = slug(&c.name);
            files.push((format!("scores_{s}.csv"), c.scores.to_csv()));
            files.push((format!("lambda_curve_{s}.csv"), c.tuning.to_csv()));
            files.push((format!("confusion_words_{s}.csv"), confusion_csv(&self.classes, &c.words.confusion)));
            files.push((format!("confusion_fused_{s}.csv"), confusion_csv(&self.classes, &c.fused.confusion)));
        }
        if !self.sweeps.is_empty() {
            files.push(("sweep.csv".into(), self.sweep_csv()));
        }
        files.push(("usage_groups.csv".into(), self.usage.groups_csv()));
        files.push(("usage_features.csv".into(), self.usage.features_csv()));
        files.push(("tree.json".into(), self.tree.to_json()?));
        files.push(("tree.txt".into(), self.tree.render()));
        if let Some(r) = reference(&self.task.name) {
            files.push(("reference.csv".into(), r.to_csv()));
        }
        files.push(("summary.txt".into(), self.summary()));

        let mut names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
        names.push("manifest.json".into());
        let unique: BTreeSet<&String> = names.iter().collect();
        debug_assert_eq!(unique.len(), names.len());
        for (name, text) in &files {
            write_atomic(&dir.join(name), text.as_bytes())?;
        }
        let manifest = Manifest {
            task: &self.task,
            classes: &self.classes,
            config: &self.config,
            files: &names,
        };
        write_atomic(
            &dir.join("manifest.json"),
            (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes(),
        )?;
        Ok(names)
    }
}
