//! Two-layer LSTM language model with a rectified dense layer and softmax
//! output, trained by backpropagation through time in plain `f64`.
//!
//! Every parameter lives in one flat buffer; [`PARAM_NAMES`] lists the
//! blocks in storage order. LSTM gate rows are ordered input, forget,
//! candidate, output, and each gate matrix multiplies `[input; h_prev]`.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LanguageModel;
use crate::corpus::{LsdSequence, Vocabulary};
use crate::error::{Error, Result};

pub const PARAM_NAMES: [&str; 9] =
    ["embedding", "lstm1_w", "lstm1_b", "lstm2_w", "lstm2_b", "dense_w", "dense_b", "out_w", "out_b"];

const EMB: usize = 0;
const W1: usize = 1;
const B1: usize = 2;
const W2: usize = 3;
const B2: usize = 4;
const WD: usize = 5;
const BD: usize = 6;
const WO: usize = 7;
const BO: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmHyperparams {
    pub hidden: usize,
    pub dense: usize,
    pub embed: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Epochs without improvement before the learning rate is halved.
    pub patience: usize,
    /// Context widths of the training windows.
    pub context_widths: Vec<usize>,
    pub seed: u64,
}

impl LmHyperparams {
    pub fn paper() -> Self {
        LmHyperparams {
            hidden: 500,
            dense: 250,
            embed: 128,
            dropout: 0.1,
            epochs: 200,
            batch_size: 64,
            learning_rate: 0.1,
            clip_norm: 5.0,
            patience: 10,
            context_widths: vec![1, 3],
            seed: 0,
        }
    }

    pub fn desk() -> Self {
        LmHyperparams { hidden: 64, dense: 32, embed: 32, epochs: 50, batch_size: 4, learning_rate: 0.5, ..Self::paper() }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [self.hidden, self.dense, self.embed, self.epochs, self.batch_size, self.patience];
        if sizes.contains(&0) {
            return Err(Error::Config("language model sizes, epochs, batch size and patience must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} is outside [0, 1)", self.dropout)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(self.clip_norm > 0.0) {
            return Err(Error::Config("learning rate and clip norm must be positive".into()));
        }
        if self.context_widths.is_empty() || self.context_widths.contains(&0) {
            return Err(Error::Config("context widths must be positive and non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layout {
    pub(crate) shapes: [(usize, usize); 9],
    offsets: [usize; 10],
}

impl Layout {
    pub(crate) fn new(vocab: usize, hp: &LmHyperparams) -> Self {
        let (e, h, d) = (hp.embed, hp.hidden, hp.dense);
        let shapes = [
            (vocab + 1, e),
            (4 * h, e + h),
            (4 * h, 1),
            (4 * h, 2 * h),
            (4 * h, 1),
            (d, h),
            (d, 1),
            (vocab, d),
            (vocab, 1),
        ];
        let mut offsets = [0; 10];
        for (i, (r, c)) in shapes.iter().enumerate() {
            offsets[i + 1] = offsets[i] + r * c;
        }
        Layout { shapes, offsets }
    }

    fn range(&self, block: usize) -> Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub(crate) fn len(&self) -> usize {
        self.offsets[9]
    }
}

/// A training window: context indices and the index to predict.
pub type Example = (Vec<u32>, u32);

/// Every next-token prediction of every sequence, once per context width,
/// with contexts left-padded by the start index.
pub fn training_examples(train: &[LsdSequence], vocab: &Vocabulary, widths: &[usize]) -> Vec<Example> {
    let mut out = Vec::new();
    for seq in train {
        let ids = vocab.encode(&seq.tokens);
        for &w in widths {
            for t in 0..ids.len() {
                out.push((super::window(&ids, t, w, vocab.start_id()), ids[t]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentModel {
    pub(crate) vocab: Vocabulary,
    pub(crate) hp: LmHyperparams,
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
    pub(crate) loss_curve: Vec<f64>,
}

struct StepCache {
    xh: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates: input, forget, candidate, output.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

struct Trace {
    ids: Vec<u32>,
    l1: Vec<StepCache>,
    l2: Vec<StepCache>,
    mask1: Vec<Vec<f64>>,
    mask2: Vec<f64>,
    dense_in: Vec<f64>,
    dense_pre: Vec<f64>,
    dense_out: Vec<f64>,
    probs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| bias + w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// `W^T dy`, accumulating `dy ⊗ x` into `dw` and `dy` into `db`.
fn matvec_back(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let cols = x.len();
    let mut dx = vec![0.0; cols];
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db[r] += g;
        let row = r * cols..(r + 1) * cols;
        for ((dwi, wi), (xi, dxi)) in dw[row.clone()].iter_mut().zip(&w[row]).zip(x.iter().zip(dx.iter_mut())) {
            *dwi += g * xi;
            *dxi += g * wi;
        }
    }
    dx
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn lstm_step(w: &[f64], b: &[f64], input: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (StepCache, Vec<f64>, Vec<f64>) {
    let h = h_prev.len();
    let mut xh = input.to_vec();
    xh.extend_from_slice(h_prev);
    let mut gates = matvec(w, b, &xh);
    for (k, z) in gates.iter_mut().enumerate() {
        *z = if k / h == 2 { z.tanh() } else { sigmoid(*z) };
    }
    let c: Vec<f64> = (0..h).map(|j| gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h_out = (0..h).map(|j| gates[3 * h + j] * tanh_c[j]).collect();
    (StepCache { xh, c_prev: c_prev.to_vec(), gates, tanh_c }, h_out, c)
}

/// Returns the gradients for the step input, `h_prev` and `c_prev`.
fn lstm_step_back(
    w: &[f64],
    cache: &StepCache,
    dh: &[f64],
    dc_next: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = dh.len();
    let g = &cache.gates;
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for j in 0..h {
        let (i, f, cand, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
        let tc = cache.tanh_c[j];
        let dc = dc_next[j] + dh[j] * o * (1.0 - tc * tc);
        dz[j] = dc * cand * i * (1.0 - i);
        dz[h + j] = dc * cache.c_prev[j] * f * (1.0 - f);
        dz[2 * h + j] = dc * i * (1.0 - cand * cand);
        dz[3 * h + j] = dh[j] * tc * o * (1.0 - o);
        dc_prev[j] = dc * f;
    }
    let mut dxh = matvec_back(w, &cache.xh, &dz, dw, db);
    let dh_prev = dxh.split_off(dxh.len() - h);
    (dxh, dh_prev, dc_prev)
}

impl RecurrentModel {
    /// Untrained model with seeded initial weights.
    pub fn init(vocab: &Vocabulary, hp: &LmHyperparams) -> Result<Self> {
        hp.validate()?;
        let layout = Layout::new(vocab.len(), hp);
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut params = vec![0.0; layout.len()];
        for block in [EMB, W1, W2, WD, WO] {
            let (rows, cols) = layout.shapes[block];
            let scale = if block == EMB { 1.0 } else { (6.0 / (rows + cols) as f64).sqrt() };
            for p in &mut params[layout.range(block)] {
                *p = rng.gen_range(-scale..scale);
            }
        }
        let h = hp.hidden;
        for block in [B1, B2] {
            let r = layout.range(block);
            params[r.start + h..r.start + 2 * h].fill(1.0);
        }
        Ok(RecurrentModel { vocab: vocab.clone(), hp: hp.clone(), layout, params, loss_curve: Vec::new() })
    }

    pub fn hyperparams(&self) -> &LmHyperparams {
        &self.hp
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Mean training loss of each epoch.
    pub fn loss_curve(&self) -> &[f64] {
        &self.loss_curve
    }

    /// `(name, rows, cols)` of each parameter block in storage order.
    pub fn shapes(&self) -> Vec<(&'static str, usize, usize)> {
        PARAM_NAMES.iter().zip(self.layout.shapes).map(|(n, (r, c))| (*n, r, c)).collect()
    }

    fn block(&self, b: usize) -> &[f64] {
        &self.params[self.layout.range(b)]
    }

    fn forward(&self, context: &[u32], rng: Option<&mut ChaCha8Rng>) -> Trace {
        let ids: Vec<u32> = if context.is_empty() { vec![self.vocab.start_id()] } else { context.to_vec() };
        let (e, h) = (self.hp.embed, self.hp.hidden);
        let p = self.hp.dropout;
        let mut rng = rng;
        let mut mask = |n: usize| -> Vec<f64> {
            match rng.as_deref_mut() {
                Some(r) if p > 0.0 => (0..n).map(|_| if r.gen::<f64>() < p { 0.0 } else { 1.0 / (1.0 - p) }).collect(),
                _ => vec![1.0; n],
            }
        };

        let emb = self.block(EMB);
        let (mut h1, mut c1, mut h2, mut c2) = (vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]);
        let (mut l1, mut l2, mut mask1) = (Vec::new(), Vec::new(), Vec::new());
        for &id in &ids {
            let x = &emb[id as usize * e..(id as usize + 1) * e];
            let (cache, ho, co) = lstm_step(self.block(W1), self.block(B1), x, &h1, &c1);
            l1.push(cache);
            (h1, c1) = (ho, co);
            let m = mask(h);
            let dropped: Vec<f64> = h1.iter().zip(&m).map(|(a, b)| a * b).collect();
            mask1.push(m);
            let (cache, ho, co) = lstm_step(self.block(W2), self.block(B2), &dropped, &h2, &c2);
            l2.push(cache);
            (h2, c2) = (ho, co);
        }
        let mask2 = mask(h);
        let dense_in: Vec<f64> = h2.iter().zip(&mask2).map(|(a, b)| a * b).collect();
        let dense_pre = matvec(self.block(WD), self.block(BD), &dense_in);
        let dense_out: Vec<f64> = dense_pre.iter().map(|v| v.max(0.0)).collect();
        let probs = softmax(&matvec(self.block(WO), self.block(BO), &dense_out));
        Trace { ids, l1, l2, mask1, mask2, dense_in, dense_pre, dense_out, probs }
    }

    /// Accumulates `scale * d(-ln p(target))/dθ` into `grad`.
    fn backward(&self, tr: &Trace, target: u32, scale: f64, grad: &mut [f64]) {
        let h = self.hp.hidden;
        let e = self.hp.embed;
        let l = &self.layout;
        let mut g: Vec<&mut [f64]> = Vec::with_capacity(9);
        let mut rest = grad;
        for b in 0..9 {
            let (head, tail) = rest.split_at_mut(l.offsets[b + 1] - l.offsets[b]);
            g.push(head);
            rest = tail;
        }
        let [g_emb, g_w1, g_b1, g_w2, g_b2, g_wd, g_bd, g_wo, g_bo]: [&mut [f64]; 9] =
            g.try_into().expect("nine blocks");

        let mut dlogits: Vec<f64> = tr.probs.iter().map(|p| p * scale).collect();
        dlogits[target as usize] -= scale;
        let mut dr = matvec_back(self.block(WO), &tr.dense_out, &dlogits, g_wo, g_bo);
        for (d, u) in dr.iter_mut().zip(&tr.dense_pre) {
            if *u <= 0.0 {
                *d = 0.0;
            }
        }
        let da = matvec_back(self.block(WD), &tr.dense_in, &dr, g_wd, g_bd);

        let steps = tr.ids.len();
        let mut dh1_in = vec![vec![0.0; h]; steps];
        let mut dh: Vec<f64> = da.iter().zip(&tr.mask2).map(|(a, b)| a * b).collect();
        let mut dc = vec![0.0; h];
        for t in (0..steps).rev() {
            let (dx, dhp, dcp) = lstm_step_back(self.block(W2), &tr.l2[t], &dh, &dc, g_w2, g_b2);
            dh1_in[t] = dx.iter().zip(&tr.mask1[t]).map(|(a, b)| a * b).collect();
            (dh, dc) = (dhp, dcp);
        }
        let mut dh = vec![0.0; h];
        let mut dc = vec![0.0; h];
        for t in (0..steps).rev() {
            let total: Vec<f64> = dh.iter().zip(&dh1_in[t]).map(|(a, b)| a + b).collect();
            let (dx, dhp, dcp) = lstm_step_back(self.block(W1), &tr.l1[t], &total, &dc, g_w1, g_b1);
            let id = tr.ids[t] as usize;
            for (ge, d) in g_emb[id * e..(id + 1) * e].iter_mut().zip(&dx) {
                *ge += d;
            }
            (dh, dc) = (dhp, dcp);
        }
    }

    /// Mean cross-entropy over `examples` and its gradient, without dropout.
    pub fn loss_and_gradient(&self, examples: &[Example]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / examples.len().max(1) as f64;
        let mut loss = 0.0;
        for (ctx, target) in examples {
            let tr = self.forward(ctx, None);
            loss -= tr.probs[*target as usize].ln() * scale;
            self.backward(&tr, *target, scale, &mut grad);
        }
        (loss, grad)
    }
}

/// Trains with minibatch SGD on next-token cross-entropy. Deterministic for
/// a given corpus and hyperparameters.
pub fn train_recurrent(train: &[LsdSequence], vocab: &Vocabulary, hp: &LmHyperparams) -> Result<RecurrentModel> {
    let mut model = RecurrentModel::init(vocab, hp)?;
    let mut examples = training_examples(train, vocab, &hp.context_widths);
    if examples.is_empty() {
        return Err(Error::InvalidInput("recurrent training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed.wrapping_add(1));
    let mut lr = hp.learning_rate;
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut grad = vec![0.0; model.params.len()];

    for epoch in 0..hp.epochs {
        examples.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in examples.chunks(hp.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for (ctx, target) in batch {
                let tr = model.forward(ctx, Some(&mut rng));
                epoch_loss -= tr.probs[*target as usize].ln();
                model.backward(&tr, *target, scale, &mut grad);
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::Diverged { epoch, loss: norm });
            }
            let step = if norm > hp.clip_norm { lr * hp.clip_norm / norm } else { lr };
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= step * g;
            }
        }
        epoch_loss /= examples.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: epoch_loss });
        }
        model.loss_curve.push(epoch_loss);
        log::debug!("epoch {epoch}: loss {epoch_loss:.6} lr {lr}");
        if epoch_loss < best - 1e-6 {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= hp.patience {
                lr *= 0.5;
                stale = 0;
            }
        }
    }
    Ok(model)
}

impl LanguageModel for RecurrentModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn distribution_ids(&self, context: &[u32]) -> Vec<f64> {
        self.forward(context, None).probs
    }
}
