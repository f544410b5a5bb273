//! Runs the seven-way task on a synthetic corpus without the CLI.
//! Arguments: utterances per class (default 500), seed (default 1).

use prosact_core::corpus::synth::{synth_corpus, SynthSpec};
use prosact_core::eval::{run_task, ExperimentConfig, TaskSpec};
use prosact_core::corpus::TagMap;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let t = std::time::Instant::now();
    let corpus = synth_corpus(&SynthSpec::seven_class(n), seed).unwrap();
    let tags = TagMap::builtin();
    let task = TaskSpec::builtin("seven-way", &tags).unwrap();
    let cfg = ExperimentConfig { seed, ..Default::default() };
    let r = run_task(&corpus, &task, &tags, &cfg, None).unwrap();
    print!("{}", r.summary());
    print!("{}", r.sweep_csv());
    println!("elapsed {:?}", t.elapsed());
}
