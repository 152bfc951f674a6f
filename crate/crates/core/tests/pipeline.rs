mod common;

use std::fs;
use std::path::Path;

use clonelog::config::RunConfig;
use clonelog::lm::{ModelKind, Variant};
use clonelog::pipeline::{self, Context};
use clonelog::Error;
use common::{fixture, run_corpus_pipeline};

const STAGE_FILES: [&str; 9] = [
    pipeline::METHODS,
    pipeline::FEATURES,
    pipeline::PAIRS,
    pipeline::LSD_TRAIN,
    pipeline::LSD_TEST,
    pipeline::VOCAB,
    pipeline::MODEL,
    pipeline::REPORT_CSV,
    pipeline::REPORT_MD,
];

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_stage_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_corpus_pipeline(a.path(), RunConfig::default());
    run_corpus_pipeline(b.path(), RunConfig::default());
    for name in STAGE_FILES {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name} differs");
    }
}

#[test]
fn every_output_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::default();
    let hash = cfg.hash();
    run_corpus_pipeline(dir.path(), cfg);
    for name in STAGE_FILES {
        let bytes = read(dir.path(), name);
        let head = String::from_utf8_lossy(&bytes[..bytes.len().min(400)]).into_owned();
        assert!(head.contains(&hash), "{name} lacks the hash");
    }
}

#[test]
fn report_regenerates_identically_from_stage_files() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus_pipeline(dir.path(), RunConfig::default());
    let before = read(dir.path(), pipeline::REPORT_CSV);
    let ctx = Context::new(RunConfig::default(), dir.path()).unwrap();
    pipeline::cmd_evaluate(&ctx).unwrap();
    assert_eq!(read(dir.path(), pipeline::REPORT_CSV), before);
}

#[test]
fn stages_refuse_files_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus_pipeline(dir.path(), RunConfig::default());
    let other = Context::new(RunConfig { seed: 7, ..RunConfig::default() }, dir.path()).unwrap();
    for result in [
        pipeline::cmd_features(&other).map(drop),
        pipeline::cmd_corpus(&other).map(drop),
        pipeline::cmd_train(&other, ModelKind::Ngram).map(drop),
        pipeline::cmd_evaluate(&other).map(drop),
    ] {
        assert!(matches!(result, Err(Error::ConfigMismatch { .. })), "{result:?}");
    }
}

#[test]
fn missing_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = Context::new(RunConfig::default(), dir.path()).unwrap();
    assert!(matches!(pipeline::cmd_features(&ctx), Err(Error::Io { .. })));
}

#[test]
fn ngram_model_runs_the_same_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.lm.kind = ModelKind::Ngram;
    cfg.lm.ngram_order = 2;
    let report = run_corpus_pipeline(dir.path(), cfg);
    let d = report.description.unwrap();
    assert!(d.variants[&Variant::NoNlp].bleu[0] <= d.variants[&Variant::Nlp1].bleu[0]);
}

#[test]
fn suggestions_for_snippets() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus_pipeline(dir.path(), RunConfig::default());
    let ctx = Context::new(RunConfig::default(), dir.path()).unwrap();
    let mode = ctx.cfg.experiment.detection_mode;

    let doc = pipeline::cmd_suggest(&ctx, &fixture("snippets/ReleaseAddress.java"), mode, Variant::Nlp3).unwrap();
    let s = &doc.suggestions[0];
    assert!(s.needs_log);
    assert!(s.clones.iter().any(|c| c.candidate_id.contains("FloatingIpReleaser")));
    let d = &s.descriptions[0];
    assert!(!d.candidates.is_empty() && d.candidates.len() <= 3);
    assert_eq!(d.candidates[0], "successfully deleted floating ip");

    let doc = pipeline::cmd_suggest(&ctx, &fixture("snippets/Clamp.java"), mode, Variant::Nlp3).unwrap();
    let s = &doc.suggestions[0];
    assert!(!s.needs_log);
    assert!(s.clones.is_empty() && s.descriptions.is_empty());
}

/// Set `UPDATE_GOLDEN=1` to rewrite the snapshot after checking the new
/// values by hand.
#[test]
fn report_matches_the_golden_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus_pipeline(dir.path(), RunConfig::default());
    let got = String::from_utf8(read(dir.path(), pipeline::REPORT_CSV)).unwrap();
    let golden = fixture("golden/report.csv");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &got).unwrap();
    }
    let want = fs::read_to_string(&golden).expect("golden report missing; run with UPDATE_GOLDEN=1");
    assert_eq!(got, want);
}
