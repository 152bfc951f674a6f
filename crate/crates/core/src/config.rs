//! Run configuration, loaded from TOML. Unknown keys are rejected, and the
//! configuration hash stamped on every output ignores the output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clones::{DetectionMode, DetectorConfig};
use crate::corpus::CorpusConfig;
use crate::error::{Error, Result};
use crate::ingest::LwkConfig;
use crate::lm::{LmHyperparams, ModelKind, Variant, DEFAULT_MAX_LEN};
use crate::metrics::RougeLForm;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Small recurrent model that trains in seconds.
    #[default]
    Desk,
    /// The full-size hyperparameters.
    Paper,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }

    pub fn hyperparams(self) -> LmHyperparams {
        match self {
            Profile::Desk => LmHyperparams::desk(),
            Profile::Paper => LmHyperparams::paper(),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestConfig {
    pub include_globs: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { include_globs: vec!["**/*.java".into()] }
    }
}

/// Language model choice; unset size fields come from the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmConfig {
    pub kind: ModelKind,
    pub profile: Profile,
    pub ngram_order: usize,
    pub ngram_k: f64,
    pub max_len: usize,
    pub hidden: Option<usize>,
    pub dense: Option<usize>,
    pub embed: Option<usize>,
    pub dropout: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub patience: Option<usize>,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            kind: ModelKind::Recurrent,
            profile: Profile::Desk,
            ngram_order: 4,
            ngram_k: 0.0,
            max_len: DEFAULT_MAX_LEN,
            hidden: None,
            dense: None,
            embed: None,
            dropout: None,
            epochs: None,
            batch_size: None,
            learning_rate: None,
            patience: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Mode used to find the clone pairs the corpus is built from.
    pub detection_mode: DetectionMode,
    pub modes: Vec<DetectionMode>,
    pub variants: Vec<Variant>,
    pub negative_limit: Option<usize>,
    pub rouge_l: RougeLForm,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            detection_mode: DetectionMode::Full,
            modes: DetectionMode::ALL.to_vec(),
            variants: Variant::ALL.to_vec(),
            negative_limit: None,
            rouge_l: RougeLForm::Recall,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub ingest: IngestConfig,
    pub lwk: LwkConfig,
    pub detector: DetectorConfig,
    pub corpus: CorpusConfig,
    pub lm: LmConfig,
    pub experiment: ExperimentConfig,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if self.ingest.include_globs.is_empty() {
            return Err(Error::Config("ingest.include_globs is empty".into()));
        }
        if self.lwk.is_empty() {
            return Err(Error::Config("no logging wrappers configured".into()));
        }
        if self.lm.ngram_order < 1 || !(self.lm.ngram_k >= 0.0) || self.lm.max_len < 1 {
            return Err(Error::Config("n-gram order and max_len must be positive, ngram_k non-negative".into()));
        }
        if self.experiment.modes.is_empty() || self.experiment.variants.is_empty() {
            return Err(Error::Config("experiment modes and variants must be non-empty".into()));
        }
        self.hyperparams().validate()
    }

    /// Recurrent hyperparameters: the profile, then explicit overrides, then
    /// the run seed.
    pub fn hyperparams(&self) -> LmHyperparams {
        let mut hp = self.lm.profile.hyperparams();
        let lm = &self.lm;
        hp.hidden = lm.hidden.unwrap_or(hp.hidden);
        hp.dense = lm.dense.unwrap_or(hp.dense);
        hp.embed = lm.embed.unwrap_or(hp.embed);
        hp.dropout = lm.dropout.unwrap_or(hp.dropout);
        hp.epochs = lm.epochs.unwrap_or(hp.epochs);
        hp.batch_size = lm.batch_size.unwrap_or(hp.batch_size);
        hp.learning_rate = lm.learning_rate.unwrap_or(hp.learning_rate);
        hp.patience = lm.patience.unwrap_or(hp.patience);
        hp.seed = self.seed;
        hp
    }

    /// Short SHA-256 of the canonical serialization, without the output
    /// directory.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { output_dir: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
