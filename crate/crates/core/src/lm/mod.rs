//! Token-level language models over log descriptions and the suggestion
//! variants built on them.

mod file;
mod ngram;
mod recurrent;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LsdSequence, Vocabulary};
use crate::error::{Error, Result};

pub use file::{model_bytes, parse_model, read_model, write_model, ModelHeader, MODEL_FORMAT_VERSION};
pub use ngram::{train_ngram, NgramModel};
pub use recurrent::{training_examples, train_recurrent, Example, LmHyperparams, RecurrentModel, PARAM_NAMES};

pub const DEFAULT_MAX_LEN: usize = 32;

/// Next-token distributions over a fixed vocabulary.
pub trait LanguageModel {
    fn vocab(&self) -> &Vocabulary;

    /// Distribution over vocabulary indices given a context of indices, which
    /// may contain the start index. An empty context means sequence start.
    fn distribution_ids(&self, context: &[u32]) -> Vec<f64>;

    fn next_token_distribution(&self, context: &[String]) -> Vec<f64> {
        let ids = self.vocab().encode(context);
        self.distribution_ids(&ids)
    }
}

#[derive(Debug)]
pub enum Model {
    Ngram(NgramModel),
    Recurrent(RecurrentModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Ngram(_) => ModelKind::Ngram,
            Model::Recurrent(_) => ModelKind::Recurrent,
        }
    }

    pub fn as_lm(&self) -> &dyn LanguageModel {
        match self {
            Model::Ngram(m) => m,
            Model::Recurrent(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ngram,
    Recurrent,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ngram => "ngram",
            ModelKind::Recurrent => "recurrent",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ngram" => Ok(ModelKind::Ngram),
            "recurrent" => Ok(ModelKind::Recurrent),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

/// Context of width `w` ending before `end`: the last `w` tokens of
/// `anchor[..end]`, left-padded with the start index.
fn window(anchor: &[u32], end: usize, w: usize, start: u32) -> Vec<u32> {
    let from = end.saturating_sub(w);
    let mut ctx = vec![start; w - (end - from)];
    ctx.extend_from_slice(&anchor[from..end]);
    ctx
}

/// Sum of stepwise conditional log-probabilities, each step seeing the last
/// `width` preceding tokens.
pub fn sequence_log_prob(model: &dyn LanguageModel, tokens: &[String], width: usize) -> f64 {
    let vocab = model.vocab();
    let ids = vocab.encode(tokens);
    (0..ids.len())
        .map(|t| {
            let ctx = window(&ids, t, width, vocab.start_id());
            model.distribution_ids(&ctx)[ids[t] as usize].ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Generated tokens, ending with the end marker unless the length limit
    /// was reached first.
    pub tokens: Vec<String>,
    pub log_prob: f64,
}

#[derive(Debug, Clone)]
struct Hypothesis {
    ids: Vec<u32>,
    log_prob: f64,
    done: bool,
}

fn rank(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.log_prob.total_cmp(&a.log_prob).then_with(|| a.ids.cmp(&b.ids))
}

/// Beam decoding anchored on a seed description.
///
/// The first output token is the seed's first token. For an output position
/// still inside the seed the context is taken from the seed itself, so the
/// model rewrites the seed token by token; past the seed it continues from
/// its own output. `<unk>` and zero-probability tokens are never emitted.
/// Candidates are ordered by total log-probability, ties broken by token
/// sequence.
pub fn generate(
    model: &dyn LanguageModel,
    seed: &LsdSequence,
    context_width: usize,
    beam_width: usize,
    max_len: usize,
) -> Result<Vec<Candidate>> {
    if beam_width < 1 || context_width < 1 || max_len < 1 {
        return Err(Error::InvalidInput("beam width, context width and max length must be positive".into()));
    }
    let content = seed.content();
    if content.is_empty() {
        return Err(Error::InvalidInput("cannot generate from an empty seed".into()));
    }
    let vocab = model.vocab();
    let start = vocab.start_id();
    let seed_ids = vocab.encode(content);
    let eos = Vocabulary::EOS;

    let mut beam = vec![Hypothesis { ids: vec![seed_ids[0]], log_prob: 0.0, done: false }];
    while beam.iter().any(|h| !h.done) {
        let mut pool = Vec::new();
        for h in beam {
            if h.done {
                pool.push(h);
                continue;
            }
            let t = h.ids.len();
            if t >= max_len {
                pool.push(Hypothesis { done: true, ..h });
                continue;
            }
            let ctx = if t < seed_ids.len() {
                window(&seed_ids, t, context_width, start)
            } else {
                window(&h.ids, t, context_width, start)
            };
            let dist = model.distribution_ids(&ctx);
            for (tok, &p) in dist.iter().enumerate() {
                let tok = tok as u32;
                if tok == Vocabulary::UNK || p <= 0.0 {
                    continue;
                }
                let mut ids = h.ids.clone();
                ids.push(tok);
                pool.push(Hypothesis { ids, log_prob: h.log_prob + p.ln(), done: tok == eos });
            }
        }
        pool.sort_by(rank);
        pool.truncate(beam_width);
        beam = pool;
    }

    Ok(beam
        .into_iter()
        .map(|h| {
            let mut tokens: Vec<String> = Vec::with_capacity(h.ids.len());
            tokens.push(content[0].clone());
            tokens.extend(h.ids[1..].iter().map(|&i| vocab.token(i).to_string()));
            Candidate { tokens, log_prob: h.log_prob }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The clone's description, verbatim.
    NoNlp,
    /// Greedy decoding with one token of context.
    #[serde(rename = "nlp_1")]
    Nlp1,
    /// Beam of three with three tokens of context.
    #[serde(rename = "nlp_3")]
    Nlp3,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NoNlp, Variant::Nlp1, Variant::Nlp3];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NoNlp => "no_nlp",
            Variant::Nlp1 => "nlp_1",
            Variant::Nlp3 => "nlp_3",
        }
    }

    /// `(context_width, beam_width)`, or `None` when no model is involved.
    pub fn decoding(self) -> Option<(usize, usize)> {
        match self {
            Variant::NoNlp => None,
            Variant::Nlp1 => Some((1, 1)),
            Variant::Nlp3 => Some((3, 3)),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant {s:?}")))
    }
}

/// Candidate descriptions for a seed borrowed from a clone.
pub fn suggest_lsd(
    seed: &LsdSequence,
    model: Option<&dyn LanguageModel>,
    variant: Variant,
    max_len: usize,
) -> Result<Vec<LsdSequence>> {
    let Some((width, beam)) = variant.decoding() else {
        return Ok(vec![seed.clone()]);
    };
    let model = model.ok_or_else(|| Error::InvalidInput(format!("variant {variant} needs a language model")))?;
    Ok(generate(model, seed, width, beam, max_len)?
        .into_iter()
        .map(|c| {
            let mut s = LsdSequence::from_tokens(c.tokens);
            s.origin_level = seed.origin_level;
            s
        })
        .collect())
}

/// Index of the largest probability, lowest index on ties.
pub fn argmax(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p > dist[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_pads_on_the_left() {
        assert_eq!(window(&[5, 6, 7], 0, 3, 9), [9, 9, 9]);
        assert_eq!(window(&[5, 6, 7], 2, 3, 9), [9, 5, 6]);
        assert_eq!(window(&[5, 6, 7], 3, 1, 9), [7]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("nlp_2".parse::<Variant>().is_err());
    }
}
