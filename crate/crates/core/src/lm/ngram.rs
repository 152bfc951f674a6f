use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LanguageModel;
use crate::corpus::{LsdSequence, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NgramParams {
    pub order: usize,
    pub k: f64,
}

/// Additive-smoothed n-gram model. A context never seen in training backs
/// off to its longest observed suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub(crate) params: NgramParams,
    pub(crate) vocab: Vocabulary,
    /// Counts of every m-gram, m ≤ order, over start-padded sequences.
    pub(crate) counts: BTreeMap<Vec<u32>, u64>,
    /// Per context, the total count of its continuations.
    context_totals: BTreeMap<Vec<u32>, u64>,
}

pub fn train_ngram(train: &[LsdSequence], vocab: &Vocabulary, order: usize, k: f64) -> Result<NgramModel> {
    if order < 1 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Config("smoothing constant must be non-negative".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("n-gram training set is empty".into()));
    }
    let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for seq in train {
        let mut padded = vec![vocab.start_id(); order - 1];
        padded.extend(vocab.encode(&seq.tokens));
        for i in order - 1..padded.len() {
            for m in 1..=order {
                *counts.entry(padded[i + 1 - m..=i].to_vec()).or_default() += 1;
            }
        }
    }
    Ok(NgramModel::from_counts(NgramParams { order, k }, vocab.clone(), counts))
}

impl NgramModel {
    pub(crate) fn from_counts(params: NgramParams, vocab: Vocabulary, counts: BTreeMap<Vec<u32>, u64>) -> Self {
        let mut context_totals: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (gram, c) in &counts {
            *context_totals.entry(gram[..gram.len() - 1].to_vec()).or_default() += c;
        }
        NgramModel { params, vocab, counts, context_totals }
    }

    pub fn order(&self) -> usize {
        self.params.order
    }

    pub fn params(&self) -> NgramParams {
        self.params
    }

    pub fn count(&self, gram: &[u32]) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }
}

impl LanguageModel for NgramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn distribution_ids(&self, context: &[u32]) -> Vec<f64> {
        let n = self.params.order;
        let start = self.vocab.start_id();
        let mut ctx: Vec<u32> = if context.is_empty() { vec![start] } else { context.to_vec() };
        let keep = ctx.len().min(n - 1);
        ctx.drain(..ctx.len() - keep);
        while !ctx.is_empty() && !self.context_totals.contains_key(&ctx) {
            ctx.remove(0);
        }
        let total = self.context_totals.get(&ctx).copied().unwrap_or(0) as f64;
        let v = self.vocab.len();
        let denom = total + self.params.k * v as f64;
        let mut gram = ctx.clone();
        gram.push(0);
        (0..v)
            .map(|t| {
                *gram.last_mut().expect("non-empty") = t as u32;
                (self.count(&gram) as f64 + self.params.k) / denom
            })
            .collect()
    }
}
