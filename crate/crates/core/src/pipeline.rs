//! Pipeline stages. Each stage reads the files earlier stages wrote into the
//! output directory, refuses them if they carry a different configuration
//! hash, and writes its own outputs stamped with the current hash.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clones::{find_clones, pairs_csv, parse_pairs_csv, suggest_log_location, CloneIndex, DetectionMode, MethodProfile};
use crate::config::RunConfig;
use crate::corpus::{build_splits, method_lsds, LsdSequence, TestCase, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{
    build_ground_truth, lvl_match_rate, render_report, run_description_experiment, run_location_experiment,
    run_manifest, EvalCorpus, ReportFormat, ScoreReport,
};
use crate::features::{extract_features, FeatureMode, FeatureVector};
use crate::ingest::{
    extract_all, extract_methods, local_names_by_file, scan_tree, Level, MethodDefinition, MethodRecord, SourceFile,
};
use crate::lm::{read_model, suggest_lsd, train_ngram, train_recurrent, write_model, Model, ModelKind, Variant};
use crate::stage::{hash_comment, read_jsonl, read_text, split_hash_comment, write_jsonl, write_text};

pub const METHODS: &str = "methods.jsonl";
pub const FEATURES: &str = "features.jsonl";
pub const PAIRS: &str = "pairs.csv";
pub const LSD_TRAIN: &str = "lsd_train.txt";
pub const LSD_TEST: &str = "lsd_test.jsonl";
pub const VOCAB: &str = "vocab.tsv";
pub const MODEL: &str = "model.bin";
pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";
pub const RUN_JSON: &str = "run.json";

/// Configuration, its hash and the output directory shared by the stages.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: RunConfig, out: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash();
        Ok(Context { cfg, hash, out: out.into() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn local_names(&self, methods: &[MethodDefinition]) -> BTreeMap<(String, String), BTreeSet<String>> {
        local_names_by_file(methods)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub files: usize,
    pub methods: usize,
    pub logged_methods: usize,
    pub skipped: Vec<String>,
}

pub fn cmd_ingest(ctx: &Context, root: &Path) -> Result<IngestSummary> {
    let scan = scan_tree(root, &ctx.cfg.ingest.include_globs)?;
    let extraction = extract_all(&scan.files, &ctx.cfg.lwk);
    let records: Vec<MethodRecord> = extraction.methods.iter().map(MethodRecord::from).collect();
    write_jsonl(&ctx.path(METHODS), "methods", &ctx.hash, &records)?;
    let skipped = scan
        .skipped
        .iter()
        .chain(&extraction.skipped)
        .map(|w| format!("{}: {}", w.path, w.reason))
        .collect();
    Ok(IngestSummary {
        files: scan.files.len(),
        methods: records.len(),
        logged_methods: extraction.methods.iter().filter(|m| m.has_logs()).count(),
        skipped,
    })
}

pub fn load_methods(ctx: &Context) -> Result<Vec<MethodDefinition>> {
    let (_, records) = read_jsonl::<MethodRecord>(&ctx.path(METHODS), "methods", Some(&ctx.hash))?;
    records.iter().map(|r| r.to_method(&ctx.cfg.lwk)).collect()
}

/// One line of `features.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureRecord {
    pub method_id: String,
    pub raw: FeatureVector,
    pub log_aware: FeatureVector,
}

pub fn cmd_features(ctx: &Context) -> Result<usize> {
    let methods = load_methods(ctx)?;
    let names = ctx.local_names(&methods);
    let records: Vec<FeatureRecord> = methods
        .iter()
        .map(|m| {
            let local = &names[&(m.project.clone(), m.path.clone())];
            FeatureRecord {
                method_id: m.id.clone(),
                raw: extract_features(m, local, FeatureMode::Raw),
                log_aware: extract_features(m, local, FeatureMode::LogAware),
            }
        })
        .collect();
    write_jsonl(&ctx.path(FEATURES), "features", &ctx.hash, &records)?;
    Ok(records.len())
}

fn load_profiles(ctx: &Context, methods: &[MethodDefinition]) -> Result<Vec<MethodProfile>> {
    let (_, records) = read_jsonl::<FeatureRecord>(&ctx.path(FEATURES), "features", Some(&ctx.hash))?;
    if records.len() != methods.len() {
        return Err(Error::InvalidInput(format!(
            "{FEATURES} has {} records for {} methods",
            records.len(),
            methods.len()
        )));
    }
    methods
        .iter()
        .zip(records)
        .map(|(m, r)| {
            if r.method_id != m.id {
                return Err(Error::InvalidInput(format!("{FEATURES} is out of step with {METHODS} at {}", m.id)));
            }
            Ok(MethodProfile::with_features(m, r.raw, r.log_aware))
        })
        .collect()
}

/// Writes every clone pair found in `mode`, each method queried in id order.
pub fn cmd_detect(ctx: &Context, mode: DetectionMode) -> Result<usize> {
    let methods = load_methods(ctx)?;
    let index = CloneIndex::build(load_profiles(ctx, &methods)?);
    let mut pairs = Vec::new();
    for q in index.profiles() {
        pairs.extend(find_clones(q, &index, mode, &ctx.cfg.detector));
    }
    write_text(&ctx.path(PAIRS), &(hash_comment(&ctx.hash) + &pairs_csv(&pairs)))?;
    Ok(pairs.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub pairs: usize,
    pub train: usize,
    pub test_cases: usize,
    pub vocab: usize,
}

pub fn cmd_corpus(ctx: &Context) -> Result<CorpusSummary> {
    let methods = load_methods(ctx)?;
    let text = read_text(&ctx.path(PAIRS))?;
    let lines = split_hash_comment(&ctx.path(PAIRS), "pairs.csv", &text, Some(&ctx.hash))?;
    let rows = parse_pairs_csv(&lines)?;
    let by_id: BTreeMap<String, MethodDefinition> = methods.into_iter().map(|m| (m.id.clone(), m)).collect();
    let pairs: Vec<(String, String)> = rows
        .into_iter()
        .filter(|r| r.is_clone && by_id.get(&r.query_id).is_some_and(MethodDefinition::has_logs))
        .map(|r| (r.query_id, r.candidate_id))
        .collect();
    let split = build_splits(&pairs, &by_id, &ctx.cfg.corpus)?;
    let vocab = Vocabulary::build(&split.train, ctx.cfg.corpus.min_count)?;

    let mut train = hash_comment(&ctx.hash);
    for s in &split.train {
        train.push_str(&s.tokens.join(" "));
        train.push('\n');
    }
    write_text(&ctx.path(LSD_TRAIN), &train)?;
    write_jsonl(&ctx.path(LSD_TEST), "lsd_test", &ctx.hash, &split.test_cases)?;
    write_text(&ctx.path(VOCAB), &(hash_comment(&ctx.hash) + &vocab.to_tsv()))?;
    Ok(CorpusSummary { pairs: pairs.len(), train: split.train.len(), test_cases: split.test_cases.len(), vocab: vocab.len() })
}

pub fn load_train(ctx: &Context) -> Result<Vec<LsdSequence>> {
    let path = ctx.path(LSD_TRAIN);
    let text = read_text(&path)?;
    let lines = split_hash_comment(&path, "lsd_train.txt", &text, Some(&ctx.hash))?;
    Ok(lines
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| LsdSequence::from_tokens(l.split_whitespace().map(String::from).collect()))
        .collect())
}

pub fn load_vocab(ctx: &Context) -> Result<Vocabulary> {
    let path = ctx.path(VOCAB);
    let text = read_text(&path)?;
    Vocabulary::from_tsv_lines(&split_hash_comment(&path, "vocab.tsv", &text, Some(&ctx.hash))?)
}

pub fn load_test_cases(ctx: &Context) -> Result<Vec<TestCase>> {
    Ok(read_jsonl(&ctx.path(LSD_TEST), "lsd_test", Some(&ctx.hash))?.1)
}

pub fn cmd_train(ctx: &Context, kind: ModelKind) -> Result<Model> {
    let train = load_train(ctx)?;
    let vocab = load_vocab(ctx)?;
    let model = match kind {
        ModelKind::Ngram => Model::Ngram(train_ngram(&train, &vocab, ctx.cfg.lm.ngram_order, ctx.cfg.lm.ngram_k)?),
        ModelKind::Recurrent => Model::Recurrent(train_recurrent(&train, &vocab, &ctx.cfg.hyperparams())?),
    };
    write_model(&ctx.path(MODEL), &model, &ctx.hash)?;
    Ok(model)
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs both experiments and writes `report.csv`, `report.md` and
/// `run.json`.
pub fn cmd_evaluate(ctx: &Context) -> Result<ScoreReport> {
    let cfg = &ctx.cfg;
    let mut timings = BTreeMap::new();
    let t = Instant::now();
    let methods = load_methods(ctx)?;
    let corpus = EvalCorpus::new(&methods, &ctx.local_names(&methods));
    let gt = build_ground_truth(&corpus, &cfg.detector, cfg.experiment.negative_limit);
    let location = if gt.is_empty() {
        log::warn!("no labelled pairs; skipping the location experiment");
        BTreeMap::new()
    } else {
        run_location_experiment(&gt, &corpus, &cfg.experiment.modes, &cfg.detector)?
    };
    timings.insert("location".to_string(), t.elapsed().as_millis());

    let t = Instant::now();
    let split = crate::corpus::CorpusSplit { train: Vec::new(), test_cases: load_test_cases(ctx)? };
    let mut inputs = BTreeMap::new();
    for name in [METHODS, LSD_TEST] {
        inputs.insert(name.to_string(), file_digest(&ctx.path(name))?);
    }
    let needs_model = cfg.experiment.variants.iter().any(|v| v.decoding().is_some());
    let model = if needs_model {
        inputs.insert(MODEL.to_string(), file_digest(&ctx.path(MODEL))?);
        Some(read_model(&ctx.path(MODEL), Some(&ctx.hash))?.1)
    } else {
        None
    };
    let description = if split.test_cases.is_empty() {
        log::warn!("no test cases; skipping the description experiment");
        None
    } else {
        Some(run_description_experiment(
            &split,
            model.as_ref().map(Model::as_lm),
            &cfg.experiment.variants,
            cfg.lm.max_len,
            cfg.experiment.rouge_l,
        )?)
    };
    timings.insert("description".to_string(), t.elapsed().as_millis());

    let by_id: BTreeMap<&str, &MethodDefinition> = methods.iter().map(|m| (m.id.as_str(), m)).collect();
    let lvl_pairs: Vec<(&MethodDefinition, &MethodDefinition)> =
        gt.positives.iter().map(|(i, j)| (by_id[i.as_str()], by_id[j.as_str()])).collect();
    let report = ScoreReport {
        config_hash: ctx.hash.clone(),
        seed: cfg.seed,
        positives: gt.positives.len(),
        negatives: gt.negatives.len(),
        location,
        description,
        lvl_pairs: lvl_pairs.len(),
        lvl_match_rate: lvl_match_rate(&lvl_pairs)?,
    };
    write_text(&ctx.path(REPORT_CSV), &render_report(&report, ReportFormat::Csv)?)?;
    write_text(&ctx.path(REPORT_MD), &render_report(&report, ReportFormat::Markdown)?)?;
    let manifest = run_manifest(&report, inputs, timings, cfg.experiment.negative_limit);
    write_text(&ctx.path(RUN_JSON), &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloneEvidence {
    pub candidate_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptionSuggestion {
    pub from_method: String,
    pub statement_index: usize,
    pub level: Level,
    pub seed: String,
    /// Best first.
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSuggestion {
    pub method: String,
    pub needs_log: bool,
    pub clones: Vec<CloneEvidence>,
    pub descriptions: Vec<DescriptionSuggestion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestionDocument {
    pub config_hash: String,
    pub mode: DetectionMode,
    pub variant: Variant,
    pub suggestions: Vec<MethodSuggestion>,
}

fn snippet_methods(path: &Path, ctx: &Context) -> Result<Vec<MethodDefinition>> {
    let content = read_text(path)?;
    let name = path.file_name().map_or_else(|| "snippet".to_string(), |n| n.to_string_lossy().into_owned());
    let file = SourceFile { path: name.clone(), content: content.clone(), project_id: "snippet".into() };
    if let Ok(ms) = extract_methods(&file, &ctx.cfg.lwk) {
        if !ms.is_empty() {
            return Ok(ms);
        }
    }
    let wrapped = SourceFile { path: name, content: format!("class Snippet {{\n{content}\n}}\n"), project_id: "snippet".into() };
    let ms = extract_methods(&wrapped, &ctx.cfg.lwk)?;
    if ms.is_empty() {
        return Err(Error::InvalidInput(format!("{} contains no method declaration", path.display())));
    }
    Ok(ms)
}

/// Location verdicts and description candidates for each method in a Java
/// file or bare method snippet, against the ingested corpus.
pub fn cmd_suggest(ctx: &Context, snippet: &Path, mode: DetectionMode, variant: Variant) -> Result<SuggestionDocument> {
    let corpus = load_methods(ctx)?;
    let index = CloneIndex::build(load_profiles(ctx, &corpus)?);
    let by_id: BTreeMap<&str, &MethodDefinition> = corpus.iter().map(|m| (m.id.as_str(), m)).collect();
    let model = match variant.decoding() {
        Some(_) => Some(read_model(&ctx.path(MODEL), Some(&ctx.hash))?.1),
        None => None,
    };
    let queries = snippet_methods(snippet, ctx)?;
    let names = local_names_by_file(&queries);
    let mut suggestions = Vec::new();
    for q in &queries {
        let local = &names[&(q.project.clone(), q.path.clone())];
        let loc = suggest_log_location(q, local, &index, mode, &ctx.cfg.detector);
        let mut descriptions = Vec::new();
        if let Some(best) = loc.evidence.first() {
            let source = by_id[best.candidate_id.as_str()];
            for lsd in method_lsds(source, &ctx.cfg.corpus).into_iter().filter(|s| !s.is_empty()) {
                let candidates = suggest_lsd(&lsd, model.as_ref().map(Model::as_lm), variant, ctx.cfg.lm.max_len)?;
                descriptions.push(DescriptionSuggestion {
                    from_method: source.id.clone(),
                    statement_index: lsd.statement_index,
                    level: lsd.origin_level,
                    seed: lsd.text(),
                    candidates: candidates.iter().map(LsdSequence::text).collect(),
                });
            }
        }
        suggestions.push(MethodSuggestion {
            method: q.id.clone(),
            needs_log: loc.needs_log,
            clones: loc.evidence.iter().map(|p| CloneEvidence { candidate_id: p.candidate_id.clone(), score: p.score }).collect(),
            descriptions,
            warning: loc.warning,
        });
    }
    Ok(SuggestionDocument { config_hash: ctx.hash.clone(), mode, variant, suggestions })
}

/// Every stage in order, from source tree to report.
pub fn cmd_run(ctx: &Context, root: &Path) -> Result<ScoreReport> {
    cmd_ingest(ctx, root)?;
    cmd_features(ctx)?;
    cmd_detect(ctx, ctx.cfg.experiment.detection_mode)?;
    cmd_corpus(ctx)?;
    if ctx.cfg.experiment.variants.iter().any(|v| v.decoding().is_some()) {
        cmd_train(ctx, ctx.cfg.lm.kind)?;
    }
    cmd_evaluate(ctx)
}
