mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prosact_core::corpus::synth::{synth_corpus_with, SynthSpec};
use prosact_core::corpus::{load_corpus_with, write_corpus, Corpus, SplitName, TagMap};
use prosact_core::eval::{
    binomial_test, confusion_csv, decision_indices, decisions_csv, efficiency, evaluate, join_scores, kappa,
    read_decisions, read_labels, run_task, sign_test, task_dataset, task_mixtures, ClassRow, ClassScores, Decision,
    TaskSpec,
};
use prosact_core::fsutil::{read_to_string, write_atomic};
use prosact_core::fusion::{tune_lambda, ScoreTable};
use prosact_core::lm::{
    load_models, nbest_likelihood, normalize_words, read_mixtures, read_nbest, save_models, synth_nbest,
    train_lm, write_mixtures, write_nbest, ClassMixture, TrigramModel,
};
use prosact_core::prosody::{extract_split, FeatureTable};
use prosact_core::trees::{decide, grow, prune_cv_report, usage, Dataset, TreeModel};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "prosact", version, about = "Dialog-act classification from prosody and words")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every stochastic step.
    #[arg(long, global = true, env = "PROSACT_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, env = "PROSACT_WORKERS")]
    workers: Option<usize>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, env = "PROSACT_CONFIG")]
    config: Option<PathBuf>,
    /// Directory receiving all outputs.
    #[arg(long, global = true, env = "PROSACT_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Tag-to-class map replacing the built-in one.
    #[arg(long, global = true, env = "PROSACT_TAGS")]
    tags: Option<PathBuf>,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// More logging; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Default)]
struct TaskArgs {
    /// Built-in task: seven-way, q-vs-s, four-way-question,
    /// incomplete-vs-rest, backchannel-vs-agreement.
    #[arg(long, env = "PROSACT_TASK")]
    task: Option<String>,
    /// Custom task definition (JSON).
    #[arg(long)]
    task_file: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic corpus.
    Synth {
        /// Utterances per class for the built-in seven-class design.
        #[arg(long, default_value_t = 500)]
        per_class: usize,
        /// Generator parameters (JSON) replacing the seven-class design.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Also write simulated N-best lists of this size.
        #[arg(long, default_value_t = 0)]
        nbest_size: usize,
        #[arg(long, default_value_t = 0.2)]
        nbest_error_rate: f64,
    },
    /// Extract prosodic features into features.csv.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        /// Restrict to one split (TRN, HLD, DEV).
        #[arg(long)]
        split: Option<SplitName>,
    },
    /// Count utterances per split, class and tag into stats.csv.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Grow a tree on a feature file (tree.json, tree.txt).
    TrainTree {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        tree: TreeArgs,
        /// Train on all rows instead of a class-balanced sample.
        #[arg(long)]
        no_downsample: bool,
        /// Prune by cross-validation right away.
        #[arg(long)]
        prune: bool,
    },
    /// Prune a grown tree on the data it was grown on.
    PruneTree {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        tree_args: TreeArgs,
        #[arg(long)]
        no_downsample: bool,
    },
    /// Posteriors and decisions of a tree (posteriors.csv, tree_decisions.csv).
    ClassifyTree {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        /// Classify a class-balanced sample only.
        #[arg(long)]
        downsample: bool,
    },
    /// Feature and feature-group usage of a tree.
    Usage {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        no_downsample: bool,
    },
    /// Train one trigram model per tag (<tag>.arpa) and task mixtures (mixtures.json).
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: Option<SplitName>,
        #[command(flatten)]
        task: TaskArgs,
        /// Good-Turing cutoff.
        #[arg(long)]
        gt_max: Option<u32>,
    },
    /// Class log-likelihoods of true transcripts (word_scores.csv).
    ScoreWords {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        mixtures: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: Option<SplitName>,
        #[command(flatten)]
        task: TaskArgs,
    },
    /// Class log-likelihoods summed over N-best lists (nbest_scores.csv).
    ScoreNbest {
        #[arg(long)]
        lm: PathBuf,
        #[arg(long)]
        mixtures: PathBuf,
        #[arg(long)]
        nbest: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: Option<SplitName>,
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        acoustic_scale: Option<f64>,
    },
    /// Combine word scores and tree posteriors (scores.csv, fused_decisions.csv).
    Fuse {
        #[arg(long)]
        word_scores: PathBuf,
        #[arg(long)]
        posteriors: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Accuracy over the lambda grid (lambda_curve.csv).
    TuneLambda {
        #[arg(long)]
        word_scores: PathBuf,
        #[arg(long)]
        posteriors: PathBuf,
        /// Comma-separated grid replacing the configured one.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Metrics and significance tests for decision files.
    Evaluate {
        #[arg(long)]
        decisions: Option<PathBuf>,
        /// Second decision file for a paired Sign test.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Tree posteriors for the efficiency metric.
        #[arg(long)]
        posteriors: Option<PathBuf>,
        /// Two `utt_id,label` files for Cohen's kappa.
        #[arg(long, num_args = 2)]
        ratings: Option<Vec<PathBuf>>,
        #[command(flatten)]
        task: TaskArgs,
    },
    /// Full experiment for one task, written as a report directory.
    RunTask {
        /// Built-in task name, or `custom` with --task-file.
        task: String,
        #[arg(long)]
        task_file: Option<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        /// Recognizer N-best lists for an additional word condition.
        #[arg(long)]
        nbest: Option<PathBuf>,
        #[arg(long)]
        test_split: Option<SplitName>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet {
        log::LevelFilter::Error
    } else {
        match cli.global.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("PROSACT_LOG")
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    let g = &cli.global;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(w) = g.workers {
        cfg.workers = Some(w);
    }
    if let Some(d) = &g.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = &g.tags {
        cfg.tags = Some(t.clone());
    }
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring worker threads")?;
    }
    let tags = cfg.tag_map()?;
    let out = cfg.out_dir.clone();

    match cli.command {
        Command::Synth {
            per_class,
            spec,
            nbest_size,
            nbest_error_rate,
        } => {
            let spec = match spec {
                Some(p) => serde_json::from_str(&read_to_string(&p)?).with_context(|| format!("parsing {}", p.display()))?,
                None => SynthSpec::seven_class(per_class),
            };
            let corpus = synth_corpus_with(&spec, cfg.seed, &tags)?;
            write_corpus(&corpus, &out)?;
            if nbest_size > 0 {
                let refs: Vec<(String, Vec<String>)> = corpus
                    .utterances()
                    .map(|(_, u)| (u.utt_id.clone(), normalize_words(&u.transcript().collect::<Vec<_>>())))
                    .collect();
                let mut vocab: Vec<String> = refs.iter().flat_map(|r| r.1.iter().cloned()).collect();
                vocab.sort();
                vocab.dedup();
                let lists = synth_nbest(&refs, &vocab, nbest_size, nbest_error_rate, cfg.seed ^ 0x6e62);
                write_nbest(&lists, &out.join("nbest.txt"))?;
            }
            log::info!("wrote {} utterances to {}", corpus.num_utterances(), out.display());
        }
        Command::Extract { corpus, split } => {
            let corpus = load(&corpus, &tags)?;
            let table = extract_split(&corpus, split)?;
            write_atomic(&out.join("features.csv"), table.to_csv().as_bytes())?;
            log::info!("extracted {} rows", table.rows.len());
        }
        Command::Stats { corpus } => {
            let corpus = load(&corpus, &tags)?;
            let mut text = String::from("split,class,tag,count\n");
            for ((split, class, tag), n) in corpus.label_counts() {
                let split = split.map(|s| s.to_string()).unwrap_or_default();
                text.push_str(&format!("{split},{class},{},{n}\n", csv_field(&tag)));
            }
            write_atomic(&out.join("stats.csv"), text.as_bytes())?;
            log::info!("{} sides, {} utterances", corpus.sides.len(), corpus.num_utterances());
        }
        Command::TrainTree {
            features,
            task,
            tree,
            no_downsample,
            prune,
        } => {
            apply_tree(&mut cfg, &tree);
            let spec = task_spec(&cfg, &task, &tags)?;
            let (ds, _) = dataset(&features, &spec, (!no_downsample).then_some(cfg.seed))?;
            let tcfg = tree_config(&cfg);
            let mut model = grow(&ds, &tcfg)?;
            if prune {
                let (pruned, report) = prune_cv_report(&model, &ds, &tcfg)?;
                write_atomic(&out.join("prune.csv"), prune_csv(&report).as_bytes())?;
                model = pruned;
            }
            save_tree(&model, &out)?;
            log::info!("tree with {} leaves on {} datapoints", model.num_leaves(), ds.len());
        }
        Command::PruneTree {
            tree,
            features,
            task,
            tree_args,
            no_downsample,
        } => {
            apply_tree(&mut cfg, &tree_args);
            let model = TreeModel::load(&tree)?;
            let spec = task_spec(&cfg, &task, &tags)?;
            let (ds, _) = dataset(&features, &spec, (!no_downsample).then_some(cfg.seed))?;
            let (pruned, report) = prune_cv_report(&model, &ds, &tree_config(&cfg))?;
            write_atomic(&out.join("prune.csv"), prune_csv(&report).as_bytes())?;
            save_tree(&pruned, &out)?;
            log::info!("pruned {} to {} leaves", model.num_leaves(), pruned.num_leaves());
        }
        Command::ClassifyTree {
            tree,
            features,
            task,
            downsample,
        } => {
            let model = TreeModel::load(&tree)?;
            let spec = task_spec(&cfg, &task, &tags)?;
            check_classes(&model.classes, &spec.class_names())?;
            let table = FeatureTable::read_csv(&features)?;
            let (ds, rows) = task_dataset(&table, &spec, downsample.then_some(cfg.seed))?;
            let posts = model.classify_dataset(&ds)?;
            let mut scores = ClassScores {
                classes: model.classes.clone(),
                rows: Vec::with_capacity(rows.len()),
            };
            let mut decisions = Vec::with_capacity(rows.len());
            for ((&r, p), &label) in rows.iter().zip(&posts).zip(&ds.labels) {
                let utt = &table.rows[r].utt_id;
                let reference = Some(model.classes[label].clone());
                decisions.push(Decision {
                    utt_id: utt.clone(),
                    reference: reference.clone(),
                    hypothesis: model.classes[decide(p)].clone(),
                });
                scores.rows.push(ClassRow {
                    utt_id: utt.clone(),
                    reference,
                    values: p.clone(),
                });
            }
            scores.save(&out.join("posteriors.csv"))?;
            write_atomic(&out.join("tree_decisions.csv"), decisions_csv(&decisions).as_bytes())?;
            log::info!("classified {} utterances", rows.len());
        }
        Command::Usage {
            tree,
            features,
            task,
            no_downsample,
        } => {
            let model = TreeModel::load(&tree)?;
            let spec = task_spec(&cfg, &task, &tags)?;
            check_classes(&model.classes, &spec.class_names())?;
            let (ds, _) = dataset(&features, &spec, (!no_downsample).then_some(cfg.seed))?;
            let report = usage(&model, &ds)?;
            write_atomic(&out.join("usage_groups.csv"), report.groups_csv().as_bytes())?;
            write_atomic(&out.join("usage_features.csv"), report.features_csv().as_bytes())?;
        }
        Command::TrainLm {
            corpus,
            split,
            task,
            gt_max,
        } => {
            if let Some(k) = gt_max {
                cfg.lm.gt_max = k;
            }
            let corpus = load(&corpus, &tags)?;
            let spec = task_spec(&cfg, &task, &tags)?;
            let split = split.unwrap_or(cfg.train_split);
            let mut groups: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
            let mut seen: BTreeMap<String, String> = BTreeMap::new();
            for (_, u) in corpus.utterances_in(split)? {
                groups
                    .entry(u.da_tag.clone())
                    .or_default()
                    .push(normalize_words(&u.transcript().collect::<Vec<_>>()));
                seen.entry(u.da_tag.clone()).or_insert_with(|| u.da_class.clone());
            }
            let models = train_lm(&groups, &cfg.lm)?;
            save_models(&models, &out)?;
            write_mixtures(&task_mixtures(&spec, &tags, &seen)?, &out.join("mixtures.json"))?;
            log::info!("trained {} tag models on {split}", models.len());
        }
        Command::ScoreWords {
            lm,
            mixtures,
            corpus,
            split,
            task,
        } => {
            let (corpus, spec, models, mixtures) = word_inputs(&cfg, &task, &tags, &corpus, &lm, &mixtures)?;
            let split = split.unwrap_or(cfg.test_split);
            let mut scores = ClassScores {
                classes: spec.class_names(),
                rows: Vec::new(),
            };
            for (_, u) in corpus.utterances_in(split)? {
                let Some(label) = spec.label(&u.da_tag, &u.da_class) else { continue };
                let words = normalize_words(&u.transcript().collect::<Vec<_>>());
                scores.rows.push(ClassRow {
                    utt_id: u.utt_id.clone(),
                    reference: Some(scores.classes[label].clone()),
                    values: mixtures.iter().map(|m| m.ln_likelihood(&models, &words)).collect(),
                });
            }
            write_word_outputs(&scores, &out, "word")?;
        }
        Command::ScoreNbest {
            lm,
            mixtures,
            nbest,
            corpus,
            split,
            task,
            acoustic_scale,
        } => {
            let (corpus, spec, models, mixtures) = word_inputs(&cfg, &task, &tags, &corpus, &lm, &mixtures)?;
            let scale = acoustic_scale.unwrap_or(cfg.acoustic_scale);
            let lists = read_nbest(&nbest)?;
            let by_id: BTreeMap<&str, _> = lists.iter().map(|l| (l.utt_id.as_str(), l)).collect();
            let split = split.unwrap_or(cfg.test_split);
            let mut scores = ClassScores {
                classes: spec.class_names(),
                rows: Vec::new(),
            };
            let mut missing = 0;
            for (_, u) in corpus.utterances_in(split)? {
                let Some(label) = spec.label(&u.da_tag, &u.da_class) else { continue };
                let Some(list) = by_id.get(u.utt_id.as_str()) else {
                    missing += 1;
                    continue;
                };
                scores.rows.push(ClassRow {
                    utt_id: u.utt_id.clone(),
                    reference: Some(scores.classes[label].clone()),
                    values: nbest_likelihood(&models, &mixtures, list, scale)?,
                });
            }
            if missing > 0 {
                log::warn!("{missing} utterances have no N-best list and were skipped");
            }
            write_word_outputs(&scores, &out, "nbest")?;
        }
        Command::Fuse {
            word_scores,
            posteriors,
            lambda,
        } => {
            let lambda = lambda.unwrap_or(cfg.lambda);
            let posteriors = ClassScores::load(&posteriors)?;
            let (table, _) = join_scores(&ClassScores::load(&word_scores)?, &posteriors)?;
            table.save(&out.join("scores.csv"))?;
            let decisions = to_decisions(&table, &posteriors, &table.decisions(lambda)?);
            write_atomic(&out.join("fused_decisions.csv"), decisions_csv(&decisions).as_bytes())?;
            log::info!("fused {} utterances at lambda {lambda}", table.rows.len());
        }
        Command::TuneLambda {
            word_scores,
            posteriors,
            grid,
        } => {
            let grid = grid.unwrap_or(cfg.lambda_grid.clone());
            let (table, labels) = join_scores(&ClassScores::load(&word_scores)?, &ClassScores::load(&posteriors)?)?;
            let (table, labels) = labelled_only(table, labels)?;
            let report = tune_lambda(&table, &labels, &grid)?;
            write_atomic(&out.join("lambda_curve.csv"), report.to_csv().as_bytes())?;
            log::info!(
                "best lambda {} with accuracy {:.4}",
                report.best_lambda,
                report.best_accuracy
            );
        }
        Command::Evaluate {
            decisions,
            compare,
            posteriors,
            ratings,
            task,
        } => evaluate_cmd(&cfg, &task, &tags, decisions, compare, posteriors, ratings, &out)?,
        Command::RunTask {
            task,
            task_file,
            corpus,
            nbest,
            test_split,
        } => {
            if let Some(s) = test_split {
                cfg.test_split = s;
            }
            cfg.task = task.clone();
            if task_file.is_some() {
                cfg.task_file = task_file;
            } else if task == "custom" && cfg.task_file.is_none() {
                bail!("task `custom` needs --task-file");
            }
            let spec = cfg.task_spec(&tags)?;
            let corpus = load(&corpus, &tags)?;
            let lists = nbest.map(|p| read_nbest(&p)).transpose()?;
            let report = run_task(&corpus, &spec, &tags, &cfg.experiment(), lists.as_deref())?;
            let files = report.write(&out)?;
            eprint!("{}", report.summary());
            log::info!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn load(dir: &Path, tags: &TagMap) -> Result<Corpus> {
    load_corpus_with(dir, tags).with_context(|| format!("loading corpus {}", dir.display()))
}

fn task_spec(cfg: &RunConfig, args: &TaskArgs, tags: &TagMap) -> Result<TaskSpec> {
    let mut cfg = cfg.clone();
    if let Some(t) = &args.task {
        cfg.task = t.clone();
        cfg.task_file = None;
    }
    if let Some(f) = &args.task_file {
        cfg.task_file = Some(f.clone());
    }
    cfg.task_spec(tags)
}

fn apply_tree(cfg: &mut RunConfig, args: &TreeArgs) {
    if let Some(v) = args.min_leaf {
        cfg.tree.min_leaf = v;
    }
    if let Some(v) = args.folds {
        cfg.tree.folds = v;
    }
    if args.max_depth.is_some() {
        cfg.tree.max_depth = args.max_depth;
    }
}

fn tree_config(cfg: &RunConfig) -> prosact_core::trees::TreeConfig {
    prosact_core::trees::TreeConfig {
        seed: cfg.seed,
        ..cfg.tree.clone()
    }
}

fn dataset(features: &Path, spec: &TaskSpec, seed: Option<u64>) -> Result<(Dataset, Vec<usize>)> {
    let table = FeatureTable::read_csv(features)?;
    Ok(task_dataset(&table, spec, seed)?)
}

fn check_classes(model: &[String], task: &[String]) -> Result<()> {
    if model != task {
        bail!(
            "tree classes [{}] differ from task classes [{}]",
            model.join(", "),
            task.join(", ")
        );
    }
    Ok(())
}

fn save_tree(model: &TreeModel, out: &Path) -> Result<()> {
    model.save(&out.join("tree.json"))?;
    write_atomic(&out.join("tree.txt"), model.render().as_bytes())?;
    Ok(())
}

fn prune_csv(r: &prosact_core::trees::PruneReport) -> String {
    let mut s = String::from("alpha,cv_bits,chosen\n");
    for (i, (a, b)) in r.alphas.iter().zip(&r.cv_bits).enumerate() {
        s.push_str(&format!("{a:.6},{b:.6},{}\n", i == r.chosen));
    }
    s
}

type WordInputs = (Corpus, TaskSpec, BTreeMap<String, TrigramModel>, Vec<ClassMixture>);

fn word_inputs(
    cfg: &RunConfig,
    task: &TaskArgs,
    tags: &TagMap,
    corpus: &Path,
    lm: &Path,
    mixtures: &Path,
) -> Result<WordInputs> {
    let corpus = load(corpus, tags)?;
    let spec = task_spec(cfg, task, tags)?;
    let models = load_models(lm)?;
    let mixtures = read_mixtures(mixtures, &spec.class_names())?;
    if let Some(m) = mixtures.iter().find(|m| !m.members.iter().any(|t| models.contains_key(&t.tag))) {
        bail!("class {} has no trained member model in {}", m.class, lm.display());
    }
    Ok((corpus, spec, models, mixtures))
}

fn write_word_outputs(scores: &ClassScores, out: &Path, stem: &str) -> Result<()> {
    scores.save(&out.join(format!("{stem}_scores.csv")))?;
    let decisions: Vec<Decision> = scores
        .rows
        .iter()
        .map(|r| Decision {
            utt_id: r.utt_id.clone(),
            reference: r.reference.clone(),
            hypothesis: scores.classes[prosact_core::lm::decide_scores(&r.values).best].clone(),
        })
        .collect();
    write_atomic(&out.join(format!("{stem}_decisions.csv")), decisions_csv(&decisions).as_bytes())?;
    log::info!("scored {} utterances", scores.rows.len());
    Ok(())
}

fn to_decisions(table: &ScoreTable, posteriors: &ClassScores, best: &[usize]) -> Vec<Decision> {
    table
        .rows
        .iter()
        .zip(&posteriors.rows)
        .zip(best)
        .map(|((r, p), &b)| Decision {
            utt_id: r.utt_id.clone(),
            reference: p.reference.clone(),
            hypothesis: table.classes[b].clone(),
        })
        .collect()
}

fn labelled_only(mut table: ScoreTable, labels: Vec<Option<usize>>) -> Result<(ScoreTable, Vec<usize>)> {
    let mut keep = Vec::new();
    let mut rows = Vec::new();
    for (r, l) in table.rows.into_iter().zip(labels) {
        if let Some(l) = l {
            rows.push(r);
            keep.push(l);
        }
    }
    if keep.is_empty() {
        bail!("no utterance carries a reference class");
    }
    table.rows = rows;
    Ok((table, keep))
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cmd(
    cfg: &RunConfig,
    task: &TaskArgs,
    tags: &TagMap,
    decisions: Option<PathBuf>,
    compare: Option<PathBuf>,
    posteriors: Option<PathBuf>,
    ratings: Option<Vec<PathBuf>>,
    out: &Path,
) -> Result<()> {
    if decisions.is_none() && ratings.is_none() {
        bail!("evaluate needs --decisions or --ratings");
    }
    if let Some(path) = decisions {
        let classes = task_spec(cfg, task, tags)?.class_names();
        let rows = read_decisions(&path)?;
        let (labels, preds) = decision_indices(&rows, &classes)?;
        let mut result = evaluate(&labels, &preds, classes.len())?;
        if let Some(p) = posteriors {
            let post = ClassScores::load(&p)?;
            check_classes(&post.classes, &classes)?;
            let (dists, truth): (Vec<Vec<f64>>, Vec<usize>) = post
                .rows
                .iter()
                .zip(post.labels())
                .filter_map(|(r, l)| l.map(|l| (r.values.clone(), l)))
                .unzip();
            let prior = prior_of(&truth, classes.len());
            result.efficiency = Some(efficiency(&prior, &dists, &truth)?);
        }
        let correct = labels.iter().zip(&preds).filter(|(a, b)| a == b).count() as u64;
        let p = binomial_test(correct, labels.len() as u64, result.chance)?;
        let mut text = result.to_csv();
        text.push_str(&format!("binomial_p,{p:e}\n"));
        if let Some(other) = compare {
            let first = correctness(&rows);
            let second = correctness(&read_decisions(&other)?);
            let (a, b): (Vec<bool>, Vec<bool>) = first
                .iter()
                .filter_map(|(id, ok)| second.get(id).map(|o| (*ok, *o)))
                .unzip();
            if a.is_empty() {
                bail!("the decision files share no labelled utterance");
            }
            let s = sign_test(&a, &b)?;
            text.push_str(&format!(
                "sign_n_differ,{}\nsign_n_first_better,{}\nsign_p_one_tailed,{:e}\nsign_p_two_tailed,{:e}\n",
                s.n_differ, s.n_first_better, s.p_one_tailed, s.p_two_tailed
            ));
        }
        write_atomic(&out.join("evaluation.csv"), text.as_bytes())?;
        write_atomic(&out.join("confusion.csv"), confusion_csv(&classes, &result.confusion).as_bytes())?;
        log::info!("accuracy {:.4} over {} utterances", result.accuracy, result.n);
    }
    if let Some(files) = ratings {
        let a = read_labels(&files[0])?;
        let b = read_labels(&files[1])?;
        let (x, y): (Vec<&str>, Vec<&str>) = a
            .iter()
            .filter_map(|(id, la)| b.get(id).map(|lb| (la.as_str(), lb.as_str())))
            .unzip();
        let k = kappa(&x, &y)?;
        write_atomic(&out.join("kappa.csv"), format!("items,kappa\n{},{k:.6}\n", x.len()).as_bytes())?;
        log::info!("kappa {k:.4} over {} shared items", x.len());
    }
    Ok(())
}

fn prior_of(labels: &[usize], k: usize) -> Vec<f64> {
    let mut p = vec![0.0; k];
    for &l in labels {
        p[l] += 1.0 / labels.len() as f64;
    }
    p
}

fn correctness(rows: &[Decision]) -> BTreeMap<String, bool> {
    rows.iter()
        .filter_map(|d| d.reference.as_ref().map(|r| (d.utt_id.clone(), *r == d.hypothesis)))
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
