//! Model files: one JSON header line, then the parameters.
//!
//! A recurrent payload is every parameter block in storage order, row-major,
//! as little-endian `f64`. An n-gram payload is its count table as text
//! lines `id id ... \t count`, sorted by n-gram.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ngram::NgramParams;
use super::recurrent::{Layout, LmHyperparams, RecurrentModel, PARAM_NAMES};
use super::{Model, ModelKind, NgramModel};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub config_hash: String,
    pub vocab_hash: String,
    pub vocab: Vec<String>,
    pub vocab_counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<LmHyperparams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ngram: Option<NgramParams>,
    pub dtype: String,
    /// `(block, rows, cols)`; empty for n-gram models.
    pub shapes: Vec<(String, usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_curve: Vec<f64>,
}

fn vocab_from_header(h: &ModelHeader) -> Result<Vocabulary> {
    let tsv: Vec<String> =
        h.vocab.iter().zip(&h.vocab_counts).enumerate().map(|(i, (t, c))| format!("{t}\t{i}\t{c}")).collect();
    let lines: Vec<&str> = tsv.iter().map(String::as_str).collect();
    let vocab = Vocabulary::from_tsv_lines(&lines)?;
    if vocab.hash() != h.vocab_hash {
        return Err(Error::Model("vocabulary hash does not match the stored vocabulary".into()));
    }
    Ok(vocab)
}

pub fn model_bytes(model: &Model, config_hash: &str) -> Vec<u8> {
    let vocab = model.as_lm().vocab();
    let mut header = ModelHeader {
        format_version: MODEL_FORMAT_VERSION,
        model_kind: model.kind(),
        config_hash: config_hash.to_string(),
        vocab_hash: vocab.hash(),
        vocab: vocab.tokens().to_vec(),
        vocab_counts: (0..vocab.len() as u32).map(|i| vocab.count(i)).collect(),
        hyperparams: None,
        ngram: None,
        dtype: String::new(),
        shapes: Vec::new(),
        loss_curve: Vec::new(),
    };
    let payload = match model {
        Model::Recurrent(m) => {
            header.hyperparams = Some(m.hp.clone());
            header.dtype = "f64le".into();
            header.shapes = m.shapes().into_iter().map(|(n, r, c)| (n.to_string(), r, c)).collect();
            header.loss_curve = m.loss_curve.clone();
            m.params.iter().flat_map(|p| p.to_le_bytes()).collect()
        }
        Model::Ngram(m) => {
            header.ngram = Some(m.params);
            header.dtype = "u64".into();
            let mut text = String::new();
            for (gram, c) in &m.counts {
                let ids: Vec<String> = gram.iter().map(u32::to_string).collect();
                text.push_str(&format!("{}\t{c}\n", ids.join(" ")));
            }
            text.into_bytes()
        }
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.extend(payload);
    out
}

pub fn write_model(path: &Path, model: &Model, config_hash: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, model_bytes(model, config_hash)).map_err(|e| Error::io(path, e))
}

pub fn parse_model(bytes: &[u8]) -> Result<(ModelHeader, Model)> {
    let split = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Model("missing header line".into()))?;
    let header: ModelHeader =
        serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Model(format!("bad header: {e}")))?;
    if header.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Model(format!(
            "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
            header.format_version
        )));
    }
    let vocab = vocab_from_header(&header)?;
    let payload = &bytes[split + 1..];
    let model = match header.model_kind {
        ModelKind::Recurrent => {
            let hp = header.hyperparams.clone().ok_or_else(|| Error::Model("missing hyperparameters".into()))?;
            hp.validate()?;
            let layout = Layout::new(vocab.len(), &hp);
            let expected: Vec<(String, usize, usize)> =
                PARAM_NAMES.iter().zip(layout.shapes).map(|(n, (r, c))| (n.to_string(), r, c)).collect();
            if header.dtype != "f64le" || header.shapes != expected {
                return Err(Error::Model("parameter shapes do not match the hyperparameters".into()));
            }
            if payload.len() != layout.len() * 8 {
                return Err(Error::Model(format!("expected {} parameter bytes, found {}", layout.len() * 8, payload.len())));
            }
            let params = payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
            Model::Recurrent(RecurrentModel { vocab, hp, layout, params, loss_curve: header.loss_curve.clone() })
        }
        ModelKind::Ngram => {
            let params = header.ngram.ok_or_else(|| Error::Model("missing n-gram parameters".into()))?;
            let text = std::str::from_utf8(payload).map_err(|_| Error::Model("n-gram table is not UTF-8".into()))?;
            let mut counts = BTreeMap::new();
            for (n, line) in text.lines().enumerate() {
                let bad = || Error::Format { what: "n-gram table", line: n + 2, message: line.to_string() };
                let (gram, count) = line.split_once('\t').ok_or_else(bad)?;
                let gram: Vec<u32> = gram.split(' ').map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
                if gram.is_empty() || gram.len() > params.order || gram.iter().any(|&i| i as usize > vocab.len()) {
                    return Err(bad());
                }
                counts.insert(gram, count.parse().map_err(|_| bad())?);
            }
            Model::Ngram(NgramModel::from_counts(params, vocab, counts))
        }
    };
    Ok((header, model))
}

/// Loads a model, rejecting it when `expected_hash` is given and differs.
pub fn read_model(path: &Path, expected_hash: Option<&str>) -> Result<(ModelHeader, Model)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, model) = parse_model(&bytes)?;
    if let Some(expected) = expected_hash {
        if header.config_hash != expected {
            return Err(Error::ConfigMismatch {
                path: path.to_path_buf(),
                expected: expected.to_string(),
                found: header.config_hash,
            });
        }
    }
    Ok((header, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LsdSequence;
    use crate::lm::train_ngram;

    fn corpus() -> (Vec<LsdSequence>, Vocabulary) {
        let train = vec![LsdSequence::from_tokens(vec!["a".into(), "b".into()])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        (train, vocab)
    }

    #[test]
    fn recurrent_round_trip_is_bit_exact() {
        let (_, vocab) = corpus();
        let hp = LmHyperparams { hidden: 3, dense: 2, embed: 2, ..LmHyperparams::desk() };
        let m = Model::Recurrent(RecurrentModel::init(&vocab, &hp).unwrap());
        let bytes = model_bytes(&m, "h");
        let (header, back) = parse_model(&bytes).unwrap();
        assert_eq!(header.config_hash, "h");
        assert_eq!(model_bytes(&back, "h"), bytes);
        let (Model::Recurrent(a), Model::Recurrent(b)) = (&m, &back) else { panic!() };
        assert_eq!(a, b);
    }

    #[test]
    fn ngram_round_trip() {
        let (train, vocab) = corpus();
        let m = Model::Ngram(train_ngram(&train, &vocab, 2, 0.0).unwrap());
        let bytes = model_bytes(&m, "h");
        let (_, back) = parse_model(&bytes).unwrap();
        assert_eq!(model_bytes(&back, "h"), bytes);
        assert_eq!(back.as_lm().distribution_ids(&[]), m.as_lm().distribution_ids(&[]));
    }

    #[test]
    fn version_and_truncation_rejected() {
        let (_, vocab) = corpus();
        let hp = LmHyperparams { hidden: 2, dense: 2, embed: 2, ..LmHyperparams::desk() };
        let bytes = model_bytes(&Model::Recurrent(RecurrentModel::init(&vocab, &hp).unwrap()), "h");
        assert!(parse_model(&bytes[..bytes.len() - 1]).is_err());
        let split = bytes.iter().position(|&b| b == b'\n').unwrap();
        let header = std::str::from_utf8(&bytes[..split]).unwrap().replace("\"format_version\":1", "\"format_version\":9");
        let mut altered = header.into_bytes();
        altered.extend_from_slice(&bytes[split..]);
        assert!(matches!(parse_model(&altered), Err(Error::Model(_))));
    }
}
