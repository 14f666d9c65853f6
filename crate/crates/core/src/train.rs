//! Training: cross-entropy objective, backpropagation through time over the
//! full model (embedding rows included), the Adam optimizer, the epoch loop,
//! and a finite-difference gradient checker.
//!
//! Reductions are arranged for reproducibility: per-batch losses are reduced
//! with exact summation (order-free) and gradients with a fixed midpoint
//! tree, so results are bit-identical for a given seed at any worker count.

use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, Label};
use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::net::{
    dropout_mask, forward_trace, lstm_backward, reverse_rows, LstmCellParams, ModelConfig,
    ModelParams, TensorFamily, Variant,
};
use crate::numeric::{derive_rng, exact_sum, salt, ExactSum};

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Mean negative log-likelihood over every position of the instance.
pub fn cross_entropy(probs: &Array2<f64>, gold: &[Label]) -> f64 {
    cross_entropy_prefix(probs, gold, gold.len())
}

/// Mean negative log-likelihood over the first `n` positions; the loss-mask
/// ablation switch scores only the non-padding prefix.
pub fn cross_entropy_prefix(probs: &Array2<f64>, gold: &[Label], n: usize) -> f64 {
    assert!(n <= gold.len() && gold.len() == probs.nrows());
    let mut acc = 0.0;
    for (t, label) in gold.iter().enumerate().take(n) {
        let p = probs[[t, label.code()]].max(PROB_FLOOR);
        acc -= p.ln();
    }
    acc / n as f64
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

/// Dense (non-embedding) parameter tensors; doubles as the container for
/// Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSet {
    pub fwd_w: Array2<f64>,
    pub fwd_u: Array2<f64>,
    pub fwd_b: Array1<f64>,
    pub bwd_w: Array2<f64>,
    pub bwd_u: Array2<f64>,
    pub bwd_b: Array1<f64>,
    pub mid_w: Option<Array2<f64>>,
    pub mid_b: Option<Array1<f64>>,
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

impl TensorSet {
    pub fn zeros_like(params: &ModelParams) -> Self {
        TensorSet {
            fwd_w: Array2::zeros(params.bilstm.fwd.w.dim()),
            fwd_u: Array2::zeros(params.bilstm.fwd.u.dim()),
            fwd_b: Array1::zeros(params.bilstm.fwd.b.len()),
            bwd_w: Array2::zeros(params.bilstm.bwd.w.dim()),
            bwd_u: Array2::zeros(params.bilstm.bwd.u.dim()),
            bwd_b: Array1::zeros(params.bilstm.bwd.b.len()),
            mid_w: params.mid_dense.as_ref().map(|d| Array2::zeros(d.w.dim())),
            mid_b: params.mid_dense.as_ref().map(|d| Array1::zeros(d.b.len())),
            out_w: Array2::zeros(params.out_dense.w.dim()),
            out_b: Array1::zeros(params.out_dense.b.len()),
        }
    }

    /// Flat view of one tensor. Panics for `Embedding` or an absent family.
    pub fn slice(&self, family: TensorFamily) -> &[f64] {
        match family {
            TensorFamily::FwdW => self.fwd_w.as_slice().unwrap(),
            TensorFamily::FwdU => self.fwd_u.as_slice().unwrap(),
            TensorFamily::FwdB => self.fwd_b.as_slice().unwrap(),
            TensorFamily::BwdW => self.bwd_w.as_slice().unwrap(),
            TensorFamily::BwdU => self.bwd_u.as_slice().unwrap(),
            TensorFamily::BwdB => self.bwd_b.as_slice().unwrap(),
            TensorFamily::MidW => self.mid_w.as_ref().unwrap().as_slice().unwrap(),
            TensorFamily::MidB => self.mid_b.as_ref().unwrap().as_slice().unwrap(),
            TensorFamily::OutW => self.out_w.as_slice().unwrap(),
            TensorFamily::OutB => self.out_b.as_slice().unwrap(),
            TensorFamily::Embedding => panic!("embeddings are not part of a TensorSet"),
        }
    }

    pub fn slice_mut(&mut self, family: TensorFamily) -> &mut [f64] {
        match family {
            TensorFamily::FwdW => self.fwd_w.as_slice_mut().unwrap(),
            TensorFamily::FwdU => self.fwd_u.as_slice_mut().unwrap(),
            TensorFamily::FwdB => self.fwd_b.as_slice_mut().unwrap(),
            TensorFamily::BwdW => self.bwd_w.as_slice_mut().unwrap(),
            TensorFamily::BwdU => self.bwd_u.as_slice_mut().unwrap(),
            TensorFamily::BwdB => self.bwd_b.as_slice_mut().unwrap(),
            TensorFamily::MidW => self.mid_w.as_mut().unwrap().as_slice_mut().unwrap(),
            TensorFamily::MidB => self.mid_b.as_mut().unwrap().as_slice_mut().unwrap(),
            TensorFamily::OutW => self.out_w.as_slice_mut().unwrap(),
            TensorFamily::OutB => self.out_b.as_slice_mut().unwrap(),
            TensorFamily::Embedding => panic!("embeddings are not part of a TensorSet"),
        }
    }

    fn merge(mut self, other: TensorSet) -> TensorSet {
        self.fwd_w += &other.fwd_w;
        self.fwd_u += &other.fwd_u;
        self.fwd_b += &other.fwd_b;
        self.bwd_w += &other.bwd_w;
        self.bwd_u += &other.bwd_u;
        self.bwd_b += &other.bwd_b;
        if let (Some(a), Some(b)) = (self.mid_w.as_mut(), other.mid_w) {
            *a += &b;
        }
        if let (Some(a), Some(b)) = (self.mid_b.as_mut(), other.mid_b) {
            *a += &b;
        }
        self.out_w += &other.out_w;
        self.out_b += &other.out_b;
        self
    }

    fn scale(&mut self, factor: f64) {
        for family in DENSE_FAMILIES {
            if matches!(family, TensorFamily::MidW | TensorFamily::MidB) && self.mid_w.is_none() {
                continue;
            }
            for v in self.slice_mut(*family) {
                *v *= factor;
            }
        }
    }
}

const DENSE_FAMILIES: &[TensorFamily] = &[
    TensorFamily::FwdW,
    TensorFamily::FwdU,
    TensorFamily::FwdB,
    TensorFamily::BwdW,
    TensorFamily::BwdU,
    TensorFamily::BwdB,
    TensorFamily::MidW,
    TensorFamily::MidB,
    TensorFamily::OutW,
    TensorFamily::OutB,
];

/// Gradient of the batch-mean loss with respect to every parameter tensor.
/// Embedding rows untouched by the batch are absent (implicitly zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub dense: TensorSet,
    pub embed: BTreeMap<u32, Array1<f64>>,
}

impl Gradients {
    fn merge(mut self, other: Gradients) -> Gradients {
        self.dense = self.dense.merge(other.dense);
        for (row, grad) in other.embed {
            match self.embed.entry(row) {
                std::collections::btree_map::Entry::Occupied(mut e) => *e.get_mut() += &grad,
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(grad);
                }
            }
        }
        self
    }

    fn scale(&mut self, factor: f64) {
        self.dense.scale(factor);
        for grad in self.embed.values_mut() {
            *grad *= factor;
        }
    }

    /// Gradient value at a flat coordinate of one tensor family.
    pub fn coord(&self, family: TensorFamily, idx: usize, embed_dim: usize) -> f64 {
        if family == TensorFamily::Embedding {
            let row = (idx / embed_dim) as u32;
            let col = idx % embed_dim;
            self.embed.get(&row).map_or(0.0, |g| g[col])
        } else {
            self.dense.slice(family)[idx]
        }
    }

    /// Euclidean norm over every stored coordinate.
    pub fn global_norm(&self) -> f64 {
        let mut acc = 0.0;
        for family in DENSE_FAMILIES {
            if matches!(family, TensorFamily::MidW | TensorFamily::MidB)
                && self.dense.mid_w.is_none()
            {
                continue;
            }
            for v in self.dense.slice(*family) {
                acc += v * v;
            }
        }
        for grad in self.embed.values() {
            for v in grad {
                acc += v * v;
            }
        }
        acc.sqrt()
    }
}

/// Scale gradients so their global norm does not exceed `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

/// How a backward pass should be run. Dropout streams are derived from
/// `(run_seed, epoch, instance index)` so masks are independent of batch
/// boundaries and worker count.
#[derive(Debug, Clone, Copy, Default)]
pub struct BackwardOptions {
    pub training: bool,
    /// Restrict the loss to non-padding positions (ablation switch; the
    /// default scores all `max_len` positions).
    pub mask_padding_loss: bool,
    pub parallel: bool,
    pub run_seed: u64,
    pub epoch: u64,
    /// Index of the first batch instance within the epoch ordering.
    pub first_instance_index: u64,
}

/// Loss and gradients for a single instance (gradients unscaled by the
/// batch size; the loss is the instance's positional mean).
fn instance_backward(
    params: &ModelParams,
    cfg: &ModelConfig,
    inst: &Instance,
    opts: &BackwardOptions,
    instance_index: u64,
) -> Result<(f64, Gradients)> {
    let mask = if opts.training && cfg.variant == Variant::M2 && cfg.dropout_rate > 0.0 {
        let mut rng = derive_rng(opts.run_seed, &[salt::DROPOUT, opts.epoch, instance_index]);
        Some(dropout_mask(
            cfg.max_len,
            cfg.mid_dense_size,
            cfg.dropout_rate,
            &mut rng,
        ))
    } else {
        None
    };
    let trace = forward_trace(params, cfg, inst, mask.as_ref())?;
    let loss_positions = if opts.mask_padding_loss {
        inst.real_len.max(1)
    } else {
        cfg.max_len
    };
    let loss = cross_entropy_prefix(&trace.probs, &inst.labels, loss_positions);

    // Softmax + NLL: d logits = (p - y) / positions.
    let mut d_logits = trace.probs.clone();
    let scale = 1.0 / loss_positions as f64;
    for (t, label) in inst.labels.iter().enumerate() {
        if t >= loss_positions {
            d_logits.row_mut(t).fill(0.0);
            continue;
        }
        d_logits[[t, label.code()]] -= 1.0;
        d_logits.row_mut(t).mapv_inplace(|v| v * scale);
    }

    let mut dense = TensorSet::zeros_like(params);

    // Output head.
    let d_concat = match (&params.mid_dense, &trace.dropped) {
        (Some(mid), Some(dropped)) => {
            dense.out_w = d_logits.t().dot(dropped);
            dense.out_b = d_logits.sum_axis(Axis(0));
            let d_dropped = d_logits.dot(&params.out_dense.w);
            let d_mid = match &trace.mask {
                Some(mask) => &d_dropped * mask,
                None => d_dropped,
            };
            *dense.mid_w.as_mut().unwrap() = d_mid.t().dot(&trace.concat);
            *dense.mid_b.as_mut().unwrap() = d_mid.sum_axis(Axis(0));
            d_mid.dot(&mid.w)
        }
        _ => {
            dense.out_w = d_logits.t().dot(&trace.concat);
            dense.out_b = d_logits.sum_axis(Axis(0));
            d_logits.dot(&params.out_dense.w)
        }
    };

    // Split the BiLSTM gradient into directions; the backward direction
    // works in reversed (processing) order.
    let h = params.bilstm.fwd.hidden;
    let d_fwd_h = d_concat.slice(s![.., ..h]).to_owned();
    let d_bwd_h = reverse_rows(&d_concat.slice(s![.., h..]).to_owned());

    let (d_w_f, d_u_f, d_b_f, d_xs_f) =
        lstm_backward(&params.bilstm.fwd, &trace.xs, &trace.fwd, &d_fwd_h);
    let xs_rev = reverse_rows(&trace.xs);
    let (d_w_b, d_u_b, d_b_b, d_xs_b_rev) =
        lstm_backward(&params.bilstm.bwd, &xs_rev, &trace.bwd, &d_bwd_h);
    dense.fwd_w = d_w_f;
    dense.fwd_u = d_u_f;
    dense.fwd_b = d_b_f;
    dense.bwd_w = d_w_b;
    dense.bwd_u = d_u_b;
    dense.bwd_b = d_b_b;

    let d_xs = d_xs_f + reverse_rows(&d_xs_b_rev);
    let mut embed: BTreeMap<u32, Array1<f64>> = BTreeMap::new();
    for (t, &id) in inst.word_ids.iter().enumerate() {
        match embed.entry(id) {
            std::collections::btree_map::Entry::Occupied(mut e) => *e.get_mut() += &d_xs.row(t),
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(d_xs.row(t).to_owned());
            }
        }
    }

    Ok((loss, Gradients { dense, embed }))
}

/// Midpoint-tree reduction over the batch. The tree shape depends only on
/// the slice length, which keeps the floating-point combination order fixed
/// regardless of scheduling.
fn grad_tree(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&Instance],
    opts: &BackwardOptions,
    base_index: u64,
) -> Result<(Vec<f64>, Gradients)> {
    if batch.len() == 1 {
        let (loss, grads) = instance_backward(params, cfg, batch[0], opts, base_index)?;
        return Ok((vec![loss], grads));
    }
    let mid = batch.len() / 2;
    let (left_in, right_in) = batch.split_at(mid);
    let run = |half: &[&Instance], offset: u64| grad_tree(params, cfg, half, opts, offset);
    let (left, right) = if opts.parallel {
        rayon::join(
            || run(left_in, base_index),
            || run(right_in, base_index + mid as u64),
        )
    } else {
        (run(left_in, base_index), run(right_in, base_index + mid as u64))
    };
    let (mut losses, grads_l) = left?;
    let (losses_r, grads_r) = right?;
    losses.extend(losses_r);
    Ok((losses, grads_l.merge(grads_r)))
}

/// Batch-mean loss and its gradients.
///
/// The loss is the exact mean of per-instance losses, so it is bit-identical
/// under permutation and duplication of the batch; gradients use the fixed
/// midpoint tree and are bit-identical under duplication.
pub fn backward(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&Instance],
    opts: &BackwardOptions,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Validation("backward called with an empty batch".into()));
    }
    let (losses, mut grads) = grad_tree(params, cfg, batch, opts, opts.first_instance_index)?;
    let loss = exact_sum(losses) / batch.len() as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("non-finite batch loss {loss}")));
    }
    grads.scale(1.0 / batch.len() as f64);
    Ok((loss, grads))
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators for every parameter tensor plus the step
/// counter.
///
/// Embedding moments are stored densely, but by default rows are updated
/// lazily: a row's moment decay is applied in one catch-up multiplication
/// the next time the row receives a gradient, and rows with no gradient do
/// not move. `dense_embed_update` switches to the exact dense rule where
/// every row decays and moves every step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub dense_embed_update: bool,
    pub(crate) step: u64,
    pub(crate) m: TensorSet,
    pub(crate) v: TensorSet,
    pub(crate) embed_m: Array2<f64>,
    pub(crate) embed_v: Array2<f64>,
    pub(crate) embed_last_step: Vec<u64>,
}

impl AdamState {
    pub fn new(params: &ModelParams, hyper: AdamHyper, dense_embed_update: bool) -> Self {
        let size = params.embeddings.size();
        let dim = params.embeddings.dim();
        AdamState {
            hyper,
            dense_embed_update,
            step: 0,
            m: TensorSet::zeros_like(params),
            v: TensorSet::zeros_like(params),
            embed_m: Array2::zeros((size, dim)),
            embed_v: Array2::zeros((size, dim)),
            embed_last_step: vec![0; size],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Reassemble from checkpointed pieces.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        hyper: AdamHyper,
        dense_embed_update: bool,
        step: u64,
        m: TensorSet,
        v: TensorSet,
        embed_m: Array2<f64>,
        embed_v: Array2<f64>,
        embed_last_step: Vec<u64>,
    ) -> Self {
        AdamState {
            hyper,
            dense_embed_update,
            step,
            m,
            v,
            embed_m,
            embed_v,
            embed_last_step,
        }
    }
}

#[inline]
fn adam_update_slice(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    hyper: &AdamHyper,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= hyper.alpha * m_hat / (v_hat.sqrt() + hyper.epsilon);
    }
}

fn decay_pow(beta: f64, missed: u64) -> f64 {
    beta.powi(missed.min(i32::MAX as u64) as i32)
}

/// One optimizer step: bias-corrected Adam over every dense tensor, plus
/// either lazy or exact-dense treatment of embedding rows.
pub fn adam_step(state: &mut AdamState, params: &mut ModelParams, grads: &Gradients) {
    state.step += 1;
    let t = state.step;
    let hyper = state.hyper;
    let bc1 = 1.0 - decay_pow(hyper.beta1, t);
    let bc2 = 1.0 - decay_pow(hyper.beta2, t);

    for family in DENSE_FAMILIES {
        if matches!(family, TensorFamily::MidW | TensorFamily::MidB)
            && params.mid_dense.is_none()
        {
            continue;
        }
        adam_update_slice(
            params.tensor_mut(*family),
            grads.dense.slice(*family),
            state.m.slice_mut(*family),
            state.v.slice_mut(*family),
            &hyper,
            bc1,
            bc2,
        );
    }

    let dim = params.embeddings.dim();
    if state.dense_embed_update {
        let zero = Array1::zeros(dim);
        for row in 0..params.embeddings.size() {
            let g = grads.embed.get(&(row as u32)).unwrap_or(&zero);
            adam_update_slice(
                params
                    .embeddings
                    .vectors_mut()
                    .row_mut(row)
                    .as_slice_mut()
                    .unwrap(),
                g.as_slice().unwrap(),
                state.embed_m.row_mut(row).as_slice_mut().unwrap(),
                state.embed_v.row_mut(row).as_slice_mut().unwrap(),
                &hyper,
                bc1,
                bc2,
            );
            state.embed_last_step[row] = t;
        }
    } else {
        for (&row, g) in &grads.embed {
            let row = row as usize;
            let missed = t - 1 - state.embed_last_step[row];
            if missed > 0 {
                let d1 = decay_pow(hyper.beta1, missed);
                let d2 = decay_pow(hyper.beta2, missed);
                state.embed_m.row_mut(row).mapv_inplace(|x| x * d1);
                state.embed_v.row_mut(row).mapv_inplace(|x| x * d2);
            }
            adam_update_slice(
                params
                    .embeddings
                    .vectors_mut()
                    .row_mut(row)
                    .as_slice_mut()
                    .unwrap(),
                g.as_slice().unwrap(),
                state.embed_m.row_mut(row).as_slice_mut().unwrap(),
                state.embed_v.row_mut(row).as_slice_mut().unwrap(),
                &hyper,
                bc1,
                bc2,
            );
            state.embed_last_step[row] = t;
        }
    }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
    pub eval_each_epoch: bool,
    pub workers: usize,
    /// Global-norm gradient clip; off by default.
    pub grad_clip: Option<f64>,
    /// Exact dense Adam over every embedding row instead of lazy updates.
    pub dense_embed_update: bool,
    /// Restrict the loss to non-padding positions (ablation switch).
    pub mask_padding_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
            shuffle: true,
            eval_each_epoch: true,
            workers: 1,
            grad_clip: None,
            dense_embed_update: false,
            mask_padding_loss: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!("{name} {beta} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            alpha: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Test-set exact-match F1 at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochScores {
    pub f1_arg1: f64,
    pub f1_arg2: f64,
    pub f1_both: f64,
}

/// One row of the per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub f1_arg1: Option<f64>,
    pub f1_arg2: Option<f64>,
    pub f1_both: Option<f64>,
}

impl EpochRecord {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,f1_arg1,f1_arg2,f1_both";

    /// One CSV row; floats use the shortest round-trip representation so
    /// identical runs produce identical files.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.epoch,
            self.train_loss,
            opt(self.f1_arg1),
            opt(self.f1_arg2),
            opt(self.f1_both)
        )
    }
}

/// Read-only view of the trainer handed to observers after each epoch;
/// enough to write a resumable checkpoint.
pub struct TrainerView<'a> {
    pub params: &'a ModelParams,
    pub adam: &'a AdamState,
    pub rng: &'a ChaCha8Rng,
    pub model_cfg: &'a ModelConfig,
    pub train_cfg: &'a TrainConfig,
    pub completed_epochs: usize,
}

/// Per-epoch hooks: evaluation (fills the F1 columns) and end-of-epoch
/// side effects such as checkpointing.
pub trait EpochObserver {
    fn evaluate(&mut self, _epoch: usize, _params: &ModelParams) -> Result<Option<EpochScores>> {
        Ok(None)
    }

    fn epoch_end(&mut self, _view: &TrainerView<'_>, _record: &EpochRecord) -> Result<()> {
        Ok(())
    }
}

/// Observer that evaluates nothing and records nothing.
pub struct NoObserver;

impl EpochObserver for NoObserver {}

/// Owns everything that changes during training; checkpoint-resume rebuilds
/// one of these and continues from `completed_epochs + 1`.
pub struct Trainer {
    pub params: ModelParams,
    pub adam: AdamState,
    pub model_cfg: ModelConfig,
    pub train_cfg: TrainConfig,
    pub rng: ChaCha8Rng,
    pub completed_epochs: usize,
}

impl Trainer {
    pub fn new(params: ModelParams, model_cfg: ModelConfig, train_cfg: TrainConfig) -> Result<Self> {
        model_cfg.validate()?;
        train_cfg.validate()?;
        let adam = AdamState::new(&params, train_cfg.adam_hyper(), train_cfg.dense_embed_update);
        let rng = derive_rng(train_cfg.seed, &[salt::TRAIN_LOOP]);
        Ok(Trainer {
            params,
            adam,
            model_cfg,
            train_cfg,
            rng,
            completed_epochs: 0,
        })
    }

    /// Rebuild a trainer from checkpointed state.
    pub fn resume(
        params: ModelParams,
        adam: AdamState,
        model_cfg: ModelConfig,
        train_cfg: TrainConfig,
        rng: ChaCha8Rng,
        completed_epochs: usize,
    ) -> Self {
        Trainer {
            params,
            adam,
            model_cfg,
            train_cfg,
            rng,
            completed_epochs,
        }
    }

    /// Run epochs `completed_epochs + 1 ..= epochs`: a shuffled minibatch
    /// sweep of backward + adam_step per epoch, then evaluation through the
    /// observer. Returns the records of the epochs run by this call.
    pub fn train(
        &mut self,
        data: &[Instance],
        observer: &mut dyn EpochObserver,
    ) -> Result<Vec<EpochRecord>> {
        if data.is_empty() {
            return Err(Error::Validation("training set is empty".into()));
        }
        let pool = if self.train_cfg.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(self.train_cfg.workers)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let mut records = Vec::new();
        for epoch in (self.completed_epochs + 1)..=self.train_cfg.epochs {
            let loss = match &pool {
                Some(pool) => pool.install(|| self.run_epoch(data, epoch)),
                None => self.run_epoch(data, epoch),
            }?;
            let scores = if self.train_cfg.eval_each_epoch {
                observer.evaluate(epoch, &self.params)?
            } else {
                None
            };
            let record = EpochRecord {
                epoch,
                train_loss: loss,
                f1_arg1: scores.map(|s| s.f1_arg1),
                f1_arg2: scores.map(|s| s.f1_arg2),
                f1_both: scores.map(|s| s.f1_both),
            };
            self.completed_epochs = epoch;
            let view = TrainerView {
                params: &self.params,
                adam: &self.adam,
                rng: &self.rng,
                model_cfg: &self.model_cfg,
                train_cfg: &self.train_cfg,
                completed_epochs: epoch,
            };
            observer.epoch_end(&view, &record)?;
            records.push(record);
        }
        Ok(records)
    }

    fn run_epoch(&mut self, data: &[Instance], epoch: usize) -> Result<f64> {
        let mut order: Vec<usize> = (0..data.len()).collect();
        if self.train_cfg.shuffle {
            order.shuffle(&mut self.rng);
        }
        let mut loss_acc = ExactSum::new();
        let mut position = 0u64;
        for (batch_idx, chunk) in order.chunks(self.train_cfg.batch_size).enumerate() {
            let batch: Vec<&Instance> = chunk.iter().map(|&i| &data[i]).collect();
            let opts = BackwardOptions {
                training: true,
                mask_padding_loss: self.train_cfg.mask_padding_loss,
                parallel: self.train_cfg.workers > 1,
                run_seed: self.train_cfg.seed,
                epoch: epoch as u64,
                first_instance_index: position,
            };
            let (batch_loss, mut grads) =
                backward(&self.params, &self.model_cfg, &batch, &opts).map_err(|e| match e {
                    Error::Numeric(msg) => {
                        Error::Numeric(format!("epoch {epoch}, batch {batch_idx}: {msg}"))
                    }
                    other => other,
                })?;
            if let Some(clip) = self.train_cfg.grad_clip {
                clip_global_norm(&mut grads, clip);
            }
            adam_step(&mut self.adam, &mut self.params, &grads);
            loss_acc.add(batch_loss * chunk.len() as f64);
            position += chunk.len() as u64;
        }
        Ok(loss_acc.value() / data.len() as f64)
    }
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Reduced gradient-check fixture: embed dim 8, hidden 5, T = 12, a
/// vocabulary of 20 ids, and a 9-token labeled instance. Deterministic per
/// seed; shared by the gradcheck command and the acceptance suite.
pub fn grad_check_fixture(
    variant: Variant,
    seed: u64,
) -> Result<(ModelConfig, ModelParams, Instance)> {
    use crate::embed::{EmbeddingMatrix, Vocabulary};
    let cfg = ModelConfig {
        variant,
        embed_dim: 8,
        hidden: 5,
        max_len: 12,
        dropout_rate: 0.5,
        mid_dense_size: 6,
    };
    let words: Vec<String> = (0..19).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::build(words.iter().map(String::as_str));
    let embeddings = EmbeddingMatrix::random(&vocab, cfg.embed_dim, seed);
    let mut rng = derive_rng(seed, &[salt::PARAM_INIT]);
    let params = ModelParams::init(&cfg, embeddings, &mut rng)?;

    let mut irng = derive_rng(seed, &[salt::GRAD_CHECK, 1]);
    let real_len = 9;
    let word_ids: Vec<u32> = (0..cfg.max_len)
        .map(|t| if t < real_len { irng.random_range(1..20) } else { 0 })
        .collect();
    let labels: Vec<Label> = (0..cfg.max_len)
        .map(|t| {
            if t >= real_len {
                Label::None
            } else if t < 4 {
                Label::Arg1
            } else if t == 4 {
                Label::Conn
            } else {
                Label::Arg2
            }
        })
        .collect();
    let instance = Instance {
        word_ids,
        labels,
        window_start: 0,
        real_len,
    };
    Ok((cfg, params, instance))
}

#[derive(Debug, Clone)]
pub struct FamilyCheck {
    pub family: TensorFamily,
    pub max_rel_err: f64,
    pub checked: usize,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub families: Vec<FamilyCheck>,
    pub max_rel_err: f64,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>14}", "tensor", "coords", "max rel err")?;
        for check in &self.families {
            writeln!(
                f,
                "{:<12} {:>8} {:>14.3e}",
                check.family.name(),
                check.checked,
                check.max_rel_err
            )?;
        }
        write!(f, "overall max relative error: {:.3e}", self.max_rel_err)
    }
}

/// One LSTM direction of the shadow forward pass in double-double
/// arithmetic; returns the hidden-state sequence in processing order.
fn lstm_dir_dd(p: &LstmCellParams, xs: &[Vec<f64>]) -> Vec<Vec<Dd>> {
    let h = p.hidden;
    let mut hs: Vec<Vec<Dd>> = Vec::with_capacity(xs.len());
    let mut h_prev = vec![dd::ZERO; h];
    let mut c_prev = vec![dd::ZERO; h];
    for x in xs {
        let mut h_t = vec![dd::ZERO; h];
        let mut c_t = vec![dd::ZERO; h];
        for k in 0..h {
            let mut pre = [dd::ZERO; 4];
            for (gate, acc) in pre.iter_mut().enumerate() {
                let row = gate * h + k;
                let mut a = Dd::from(p.b[row]);
                for (j, &xv) in x.iter().enumerate() {
                    a = a + Dd::from(p.w[[row, j]]) * Dd::from(xv);
                }
                for (j, hv) in h_prev.iter().enumerate() {
                    a = a + Dd::from(p.u[[row, j]]) * *hv;
                }
                *acc = a;
            }
            let i = pre[0].sigmoid();
            let f = pre[1].sigmoid();
            let g = pre[2].tanh();
            let o = pre[3].sigmoid();
            let c = f * c_prev[k] + i * g;
            c_t[k] = c;
            h_t[k] = o * c.tanh();
        }
        hs.push(h_t.clone());
        h_prev = h_t;
        c_prev = c_t;
    }
    hs
}

/// The full loss of one instance evaluated in double-double arithmetic:
/// algebraically the same function as the f64 forward pass plus
/// `cross_entropy`, but with ~31 significant digits so central differences
/// are not noise-limited. Dropout off.
fn shadow_loss(params: &ModelParams, cfg: &ModelConfig, inst: &Instance) -> Result<Dd> {
    let t_len = cfg.max_len;
    let emb = &params.embeddings;
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    for &id in &inst.word_ids {
        if id as usize >= emb.size() {
            return Err(Error::Validation(format!(
                "word id {} out of range for vocabulary of size {}",
                id,
                emb.size()
            )));
        }
        xs.push(emb.row(id).to_vec());
    }
    let hs_fwd = lstm_dir_dd(&params.bilstm.fwd, &xs);
    let xs_rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let hs_bwd = lstm_dir_dd(&params.bilstm.bwd, &xs_rev);
    let h = params.bilstm.fwd.hidden;

    let mut total = dd::ZERO;
    for t in 0..t_len {
        let mut concat = Vec::with_capacity(2 * h);
        concat.extend_from_slice(&hs_fwd[t]);
        concat.extend_from_slice(&hs_bwd[t_len - 1 - t]);
        let head_in: Vec<Dd> = match &params.mid_dense {
            Some(mid) => (0..mid.b.len())
                .map(|j| {
                    let mut a = Dd::from(mid.b[j]);
                    for (i, v) in concat.iter().enumerate() {
                        a = a + Dd::from(mid.w[[j, i]]) * *v;
                    }
                    a
                })
                .collect(),
            None => concat,
        };
        let out = &params.out_dense;
        let logits: Vec<Dd> = (0..out.b.len())
            .map(|k| {
                let mut a = Dd::from(out.b[k]);
                for (j, v) in head_in.iter().enumerate() {
                    a = a + Dd::from(out.w[[k, j]]) * *v;
                }
                a
            })
            .collect();
        // -log softmax of the gold class.
        let max = logits.iter().map(|l| l.hi).fold(f64::NEG_INFINITY, f64::max);
        let mut denom = dd::ZERO;
        for l in &logits {
            denom = denom + (*l - Dd::from(max)).exp();
        }
        let gold = logits[inst.labels[t].code()];
        total = total + (denom.ln() - (gold - Dd::from(max)));
    }
    Ok(total / Dd::from(t_len as f64))
}

/// Compare analytic gradients against central finite differences on sampled
/// coordinates of every tensor family. Dropout must be off (it is: the
/// backward pass runs in inference mode here), and the relative error is
/// `|a - n| / max(|a|, |n|, 1e-8)`.
///
/// Finite-difference losses are evaluated in compensated (double-double)
/// arithmetic so the check is limited by the truncation of the central
/// difference, not by f64 roundoff in the loss.
pub fn grad_check(
    params: &ModelParams,
    cfg: &ModelConfig,
    inst: &Instance,
    epsilon: f64,
    samples_per_family: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let opts = BackwardOptions::default();
    let (_, grads) = backward(params, cfg, &[inst], &opts)?;
    let mut work = params.clone();
    let mut rng = derive_rng(seed, &[salt::GRAD_CHECK]);
    let embed_dim = params.embeddings.dim();

    let mut families = Vec::new();
    let mut overall: f64 = 0.0;
    for family in work.tensor_families() {
        let len = work.tensor(family).len();
        let indices: Vec<usize> = if len <= samples_per_family {
            (0..len).collect()
        } else if family == TensorFamily::Embedding {
            // Half the samples target rows the instance actually touches so
            // nonzero embedding gradients get real coverage.
            let mut touched: Vec<usize> = inst.word_ids.iter().map(|&id| id as usize).collect();
            touched.sort_unstable();
            touched.dedup();
            (0..samples_per_family)
                .map(|k| {
                    if k % 2 == 0 {
                        let row = touched[rng.random_range(0..touched.len())];
                        row * embed_dim + rng.random_range(0..embed_dim)
                    } else {
                        rng.random_range(0..len)
                    }
                })
                .collect()
        } else {
            (0..samples_per_family)
                .map(|_| rng.random_range(0..len))
                .collect()
        };
        let mut max_rel: f64 = 0.0;
        for idx in &indices {
            let idx = *idx;
            let original = work.tensor(family)[idx];
            let theta_plus = original + epsilon;
            let theta_minus = original - epsilon;
            work.tensor_mut(family)[idx] = theta_plus;
            let loss_plus = shadow_loss(&work, cfg, inst)?;
            work.tensor_mut(family)[idx] = theta_minus;
            let loss_minus = shadow_loss(&work, cfg, inst)?;
            work.tensor_mut(family)[idx] = original;
            // Divide by the actually represented perturbation.
            let numeric = (loss_plus - loss_minus).to_f64() / (theta_plus - theta_minus);
            let analytic = grads.coord(family, idx, embed_dim);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
        overall = overall.max(max_rel);
        families.push(FamilyCheck {
            family,
            max_rel_err: max_rel,
            checked: indices.len(),
        });
    }
    Ok(GradCheckReport {
        families,
        max_rel_err: overall,
    })
}
