#![allow(dead_code)]

pub mod text_cases;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clonelog::config::RunConfig;
use clonelog::corpus::{LsdSequence, Vocabulary};
use clonelog::eval::ScoreReport;
use clonelog::ingest::{extract_all, scan_tree, MethodDefinition};
use clonelog::lm::{Example, RecurrentModel};
use clonelog::pipeline::{cmd_run, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn seq(s: &str) -> LsdSequence {
    LsdSequence::from_tokens(s.split_whitespace().map(String::from).collect())
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// The CloudStack training descriptions: "successfully" is followed by
/// "deleted" four times and by "created" once.
pub fn cloudstack_train() -> Vec<LsdSequence> {
    let mut train = vec![seq("successfully deleted condition")];
    train.extend(std::iter::repeat_n(seq("elastistor volume successfully deleted"), 3));
    train.push(seq("successfully created floating ip"));
    train
}

pub fn cloudstack_vocab() -> Vocabulary {
    Vocabulary::build(&cloudstack_train(), 1).unwrap()
}

/// Largest relative difference between the analytic gradient and
/// Richardson-extrapolated central differences, over every parameter.
/// Parameters are first moved to a random point so that no gradient is
/// vanishingly small.
pub fn max_gradient_error(model: &mut RecurrentModel, examples: &[Example], seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in model.params_mut() {
        *p = rng.gen_range(-0.8..0.8);
    }
    let (_, grad) = model.loss_and_gradient(examples);
    let mut worst: f64 = 0.0;
    for i in 0..grad.len() {
        let p = model.params()[i];
        let mut central = |h: f64| {
            model.params_mut()[i] = p + h;
            let up = model.loss_and_gradient(examples).0;
            model.params_mut()[i] = p - h;
            let down = model.loss_and_gradient(examples).0;
            (up - down) / (2.0 * h)
        };
        let h = 1e-3;
        let numeric = (4.0 * central(h / 2.0) - central(h)) / 3.0;
        model.params_mut()[i] = p;
        let scale = grad[i].abs().max(numeric.abs());
        if scale > 1e-12 {
            let r = (grad[i] - numeric).abs() / scale;
            worst = worst.max(r);
        }
    }
    worst
}

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Every method under a fixture directory, in id order.
pub fn fixture_methods(rel: &str) -> Vec<MethodDefinition> {
    let cfg = RunConfig::default();
    let scan = scan_tree(&fixture(rel), &cfg.ingest.include_globs).unwrap();
    let mut methods = extract_all(&scan.files, &cfg.lwk).methods;
    methods.sort_by(|a, b| a.id.cmp(&b.id));
    methods
}

pub fn method_named<'a>(methods: &'a [MethodDefinition], name: &str) -> &'a MethodDefinition {
    methods.iter().find(|m| m.name == name).unwrap_or_else(|| panic!("no method {name}"))
}

/// The ten hand-labelled pairs `pairNNa` / `pairNNb`; only pair 07 differs
/// in the level of its first logging statement.
pub fn verbosity_pairs() -> Vec<(MethodDefinition, MethodDefinition)> {
    let methods = fixture_methods("verbosity");
    (1..=10)
        .map(|k| {
            let a = method_named(&methods, &format!("pair{k:02}a")).clone();
            let b = method_named(&methods, &format!("pair{k:02}b")).clone();
            (a, b)
        })
        .collect()
}

/// Runs every stage on the bundled corpus into `out`.
pub fn run_corpus_pipeline(out: &Path, cfg: RunConfig) -> ScoreReport {
    let ctx = Context::new(cfg, out).unwrap();
    cmd_run(&ctx, &fixture("corpus")).unwrap()
}

/// Bigram counts taken straight from the strings, start marked by "<s>".
pub fn bigram_oracle(train: &[LsdSequence]) -> HashMap<(String, String), u32> {
    let mut counts = HashMap::new();
    for s in train {
        let mut prev = "<s>".to_string();
        for t in &s.tokens {
            *counts.entry((prev.clone(), t.clone())).or_insert(0) += 1;
            prev = t.clone();
        }
    }
    counts
}
