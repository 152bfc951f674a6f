use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use clonelog::clones::DetectionMode;
use clonelog::config::{Profile, RunConfig};
use clonelog::lm::{ModelKind, Variant};
use clonelog::pipeline::{self, Context};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "clonelog", version, about = "Suggest logging statements for Java methods from their log-aware clones")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Hyperparameter set for the recurrent model.
    #[arg(long, global = true)]
    profile: Option<Profile>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding the stage files. Defaults to the configured
    /// output directory, then `clonelog-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract methods and their logging statements from a source tree.
    Ingest {
        #[arg(long)]
        root: PathBuf,
    },
    /// Compute raw and log-aware feature vectors.
    Features,
    /// Find clone pairs among the ingested methods.
    Detect {
        #[arg(long)]
        mode: Option<DetectionMode>,
    },
    /// Build the description corpus, its train/test split and vocabulary.
    Corpus,
    /// Train the language model on the training split.
    Train {
        #[arg(long)]
        kind: Option<ModelKind>,
    },
    /// Suggest log locations and descriptions for a Java file or method snippet.
    Suggest {
        snippet: PathBuf,
        #[arg(long)]
        mode: Option<DetectionMode>,
        #[arg(long, default_value = "nlp_3")]
        variant: Variant,
    },
    /// Run the location and description experiments and write the reports.
    Evaluate,
    /// Every stage from ingest to evaluate.
    Run {
        #[arg(long)]
        root: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = cli.profile {
        cfg.lm.profile = p;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("clonelog-out"));
    Ok((cfg, out))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn run(cli: Cli) -> Result<Value> {
    let (cfg, out) = load_config(&cli)?;
    let ctx = Context::new(cfg, out)?;
    let mode = ctx.cfg.experiment.detection_mode;
    let value = match cli.command {
        Command::Ingest { root } => {
            ensure_dir(&ctx.out)?;
            let s = pipeline::cmd_ingest(&ctx, &root)?;
            for w in &s.skipped {
                log::warn!("skipped {w}");
            }
            serde_json::to_value(s)?
        }
        Command::Features => json!({ "features": pipeline::cmd_features(&ctx)? }),
        Command::Detect { mode: m } => json!({ "pairs": pipeline::cmd_detect(&ctx, m.unwrap_or(mode))? }),
        Command::Corpus => serde_json::to_value(pipeline::cmd_corpus(&ctx)?)?,
        Command::Train { kind } => {
            let model = pipeline::cmd_train(&ctx, kind.unwrap_or(ctx.cfg.lm.kind))?;
            json!({ "model": model.kind().as_str(), "vocab": model.as_lm().vocab().len() })
        }
        Command::Suggest { snippet, mode: m, variant } => {
            serde_json::to_value(pipeline::cmd_suggest(&ctx, &snippet, m.unwrap_or(mode), variant)?)?
        }
        Command::Evaluate => serde_json::to_value(pipeline::cmd_evaluate(&ctx)?)?,
        Command::Run { root } => {
            ensure_dir(&ctx.out)?;
            serde_json::to_value(pipeline::cmd_run(&ctx, &root)?)?
        }
    };
    Ok(value)
}

fn error_record(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.downcast_ref::<clonelog::Error>().map_or("internal", clonelog::Error::kind);
            eprintln!("{}", error_record(kind, &format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
