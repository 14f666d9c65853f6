//! The numerical model: LSTM cells, the bidirectional layer, dense heads,
//! dropout, and label/span decoding.
//!
//! Two architectures are supported:
//!   m1: embedding -> BiLSTM -> softmax dense
//!   m2: embedding -> BiLSTM -> dense -> dropout -> softmax dense
//!
//! No sequence masking exists anywhere: padding positions flow through the
//! BiLSTM and contribute to the loss, so the network has to learn where a
//! sequence ends.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, Label, Span, DEFAULT_MAX_LEN};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numeric::sigmoid;

/// Number of output classes (None, Arg1, Arg2, Conn).
pub const N_LABELS: usize = 4;

/// Parameters of one LSTM direction.
///
/// `w` and `u` pack the four gates row-wise in the fixed order (i, f, g, o);
/// this order is part of the checkpoint format and must not change.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    /// Input weights, `4h x d`.
    pub w: Array2<f64>,
    /// Recurrent weights, `4h x h`.
    pub u: Array2<f64>,
    /// Bias, `4h`.
    pub b: Array1<f64>,
    pub hidden: usize,
    pub input: usize,
}

impl LstmCellParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmCellParams {
            w: Array2::zeros((4 * hidden, input)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
            hidden,
            input,
        }
    }

    /// Glorot-uniform weights with per-gate-block fans (`w`: d -> h,
    /// `u`: h -> h); biases zero.
    pub fn glorot(hidden: usize, input: usize, rng: &mut impl Rng) -> Self {
        LstmCellParams {
            w: glorot_uniform(4 * hidden, input, input, hidden, rng),
            u: glorot_uniform(4 * hidden, hidden, hidden, hidden, rng),
            b: Array1::zeros(4 * hidden),
            hidden,
            input,
        }
    }
}

/// Forward and backward directions of the bidirectional layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmLayer {
    pub fwd: LstmCellParams,
    pub bwd: LstmCellParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn glorot(out: usize, input: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        DenseLayer {
            w: glorot_uniform(out, input, input, out, rng),
            b: Array1::zeros(out),
            activation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    M1,
    M2,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::M1 => write!(f, "m1"),
            Variant::M2 => write!(f, "m2"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m1" => Ok(Variant::M1),
            "m2" => Ok(Variant::M2),
            other => Err(Error::Config(format!("unknown model variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub embed_dim: usize,
    pub hidden: usize,
    pub max_len: usize,
    /// m2 only: dropout between the intermediate and output dense layers.
    pub dropout_rate: f64,
    /// m2 only: width of the intermediate dense layer.
    pub mid_dense_size: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::M1,
            embed_dim: 300,
            hidden: 100,
            max_len: DEFAULT_MAX_LEN,
            dropout_rate: 0.5,
            mid_dense_size: 200,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden == 0 || self.max_len == 0 {
            return Err(Error::Config(
                "embed_dim, hidden, and max_len must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if self.variant == Variant::M2 && self.mid_dense_size == 0 {
            return Err(Error::Config("mid_dense_size must be positive for m2".into()));
        }
        Ok(())
    }
}

/// Everything the optimizer updates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embeddings: EmbeddingMatrix,
    pub bilstm: BiLstmLayer,
    pub mid_dense: Option<DenseLayer>,
    pub out_dense: DenseLayer,
}

/// Identifies one parameter tensor; used by the gradient checker and the
/// checkpoint format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorFamily {
    Embedding,
    FwdW,
    FwdU,
    FwdB,
    BwdW,
    BwdU,
    BwdB,
    MidW,
    MidB,
    OutW,
    OutB,
}

impl TensorFamily {
    pub fn name(self) -> &'static str {
        match self {
            TensorFamily::Embedding => "embeddings",
            TensorFamily::FwdW => "fwd.w",
            TensorFamily::FwdU => "fwd.u",
            TensorFamily::FwdB => "fwd.b",
            TensorFamily::BwdW => "bwd.w",
            TensorFamily::BwdU => "bwd.u",
            TensorFamily::BwdB => "bwd.b",
            TensorFamily::MidW => "mid.w",
            TensorFamily::MidB => "mid.b",
            TensorFamily::OutW => "out.w",
            TensorFamily::OutB => "out.b",
        }
    }
}

impl ModelParams {
    /// Initialize a fresh model: Glorot-uniform weights drawn in a fixed
    /// order (fwd.w, fwd.u, bwd.w, bwd.u, mid.w, out.w), zero biases.
    pub fn init(cfg: &ModelConfig, embeddings: EmbeddingMatrix, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        if embeddings.dim() != cfg.embed_dim {
            return Err(Error::Config(format!(
                "embedding matrix has dim {}, config requires {}",
                embeddings.dim(),
                cfg.embed_dim
            )));
        }
        let fwd = LstmCellParams::glorot(cfg.hidden, cfg.embed_dim, rng);
        let bwd = LstmCellParams::glorot(cfg.hidden, cfg.embed_dim, rng);
        let (mid_dense, out_in) = match cfg.variant {
            Variant::M1 => (None, 2 * cfg.hidden),
            Variant::M2 => (
                Some(DenseLayer::glorot(
                    cfg.mid_dense_size,
                    2 * cfg.hidden,
                    Activation::Identity,
                    rng,
                )),
                cfg.mid_dense_size,
            ),
        };
        let out_dense = DenseLayer::glorot(N_LABELS, out_in, Activation::Softmax, rng);
        Ok(ModelParams {
            embeddings,
            bilstm: BiLstmLayer { fwd, bwd },
            mid_dense,
            out_dense,
        })
    }

    pub fn tensor_families(&self) -> Vec<TensorFamily> {
        let mut families = vec![
            TensorFamily::Embedding,
            TensorFamily::FwdW,
            TensorFamily::FwdU,
            TensorFamily::FwdB,
            TensorFamily::BwdW,
            TensorFamily::BwdU,
            TensorFamily::BwdB,
        ];
        if self.mid_dense.is_some() {
            families.push(TensorFamily::MidW);
            families.push(TensorFamily::MidB);
        }
        families.push(TensorFamily::OutW);
        families.push(TensorFamily::OutB);
        families
    }

    /// Flat view of one tensor. Panics if the family is absent (m1 has no
    /// mid dense layer).
    pub fn tensor(&self, family: TensorFamily) -> &[f64] {
        match family {
            TensorFamily::Embedding => self.embeddings.vectors().as_slice().unwrap(),
            TensorFamily::FwdW => self.bilstm.fwd.w.as_slice().unwrap(),
            TensorFamily::FwdU => self.bilstm.fwd.u.as_slice().unwrap(),
            TensorFamily::FwdB => self.bilstm.fwd.b.as_slice().unwrap(),
            TensorFamily::BwdW => self.bilstm.bwd.w.as_slice().unwrap(),
            TensorFamily::BwdU => self.bilstm.bwd.u.as_slice().unwrap(),
            TensorFamily::BwdB => self.bilstm.bwd.b.as_slice().unwrap(),
            TensorFamily::MidW => self.mid_dense.as_ref().unwrap().w.as_slice().unwrap(),
            TensorFamily::MidB => self.mid_dense.as_ref().unwrap().b.as_slice().unwrap(),
            TensorFamily::OutW => self.out_dense.w.as_slice().unwrap(),
            TensorFamily::OutB => self.out_dense.b.as_slice().unwrap(),
        }
    }

    pub fn tensor_mut(&mut self, family: TensorFamily) -> &mut [f64] {
        match family {
            TensorFamily::Embedding => self.embeddings.vectors_mut().as_slice_mut().unwrap(),
            TensorFamily::FwdW => self.bilstm.fwd.w.as_slice_mut().unwrap(),
            TensorFamily::FwdU => self.bilstm.fwd.u.as_slice_mut().unwrap(),
            TensorFamily::FwdB => self.bilstm.fwd.b.as_slice_mut().unwrap(),
            TensorFamily::BwdW => self.bilstm.bwd.w.as_slice_mut().unwrap(),
            TensorFamily::BwdU => self.bilstm.bwd.u.as_slice_mut().unwrap(),
            TensorFamily::BwdB => self.bilstm.bwd.b.as_slice_mut().unwrap(),
            TensorFamily::MidW => self.mid_dense.as_mut().unwrap().w.as_slice_mut().unwrap(),
            TensorFamily::MidB => self.mid_dense.as_mut().unwrap().b.as_slice_mut().unwrap(),
            TensorFamily::OutW => self.out_dense.w.as_slice_mut().unwrap(),
            TensorFamily::OutB => self.out_dense.b.as_slice_mut().unwrap(),
        }
    }
}

// ---------------------------------------------------------------------------
// Initialization and elementary ops
// ---------------------------------------------------------------------------

/// `rows x cols` matrix with entries uniform in `[-b, b]`,
/// `b = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut impl Rng,
) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..=bound))
}

/// One LSTM step: gate order (i, f, g, o), `c = f*c_prev + i*g`,
/// `h = o*tanh(c)`.
pub fn lstm_cell_step(
    p: &LstmCellParams,
    x: ArrayView1<'_, f64>,
    h_prev: ArrayView1<'_, f64>,
    c_prev: ArrayView1<'_, f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    if x.len() != p.input || h_prev.len() != p.hidden || c_prev.len() != p.hidden {
        return Err(Error::Validation(format!(
            "lstm_cell_step shape mismatch: x={}, h={}, c={} against (d={}, h={})",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            p.input,
            p.hidden
        )));
    }
    if x.iter().chain(h_prev.iter()).chain(c_prev.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input to lstm_cell_step".into()));
    }
    let h = p.hidden;
    let mut a = p.w.dot(&x);
    a += &p.u.dot(&h_prev);
    a += &p.b;
    let mut c_t = Array1::zeros(h);
    let mut h_t = Array1::zeros(h);
    for k in 0..h {
        let i = sigmoid(a[k]);
        let f = sigmoid(a[h + k]);
        let g = a[2 * h + k].tanh();
        let o = sigmoid(a[3 * h + k]);
        let c = f * c_prev[k] + i * g;
        c_t[k] = c;
        h_t[k] = o * c.tanh();
    }
    Ok((h_t, c_t))
}

/// Dense layer application to a single vector.
pub fn dense_forward(layer: &DenseLayer, v: ArrayView1<'_, f64>) -> Array1<f64> {
    let mut out = layer.w.dot(&v);
    out += &layer.b;
    if layer.activation == Activation::Softmax {
        softmax_in_place(out.as_slice_mut().unwrap());
    }
    out
}

/// Max-subtracted softmax.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Inverted dropout: in training mode each entry is zeroed with probability
/// `rate` and survivors are scaled by `1/(1-rate)`; at inference this is the
/// identity.
pub fn dropout_apply(
    v: ArrayView1<'_, f64>,
    rate: f64,
    training: bool,
    rng: &mut impl Rng,
) -> Array1<f64> {
    if !training || rate == 0.0 {
        return v.to_owned();
    }
    let keep = 1.0 - rate;
    v.map(|&x| if rng.random::<f64>() < rate { 0.0 } else { x / keep })
}

/// Sample a scaled dropout mask with entries in {0, 1/(1-rate)}. Entries are
/// drawn row-major so a mask is a pure function of the RNG state.
pub(crate) fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> Array2<f64> {
    let keep = 1.0 - rate;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            1.0 / keep
        }
    })
}

// ---------------------------------------------------------------------------
// Sequence forward passes (with traces for backpropagation through time)
// ---------------------------------------------------------------------------

/// Per-direction activation record kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct LstmTrace {
    /// Post-activation gate values, `T x 4h`, blocks (i, f, g, o).
    pub gates: Array2<f64>,
    /// Cell states, `T x h`.
    pub cells: Array2<f64>,
    /// Hidden states, `T x h`.
    pub hs: Array2<f64>,
}

/// Run one direction over `xs` (already in processing order) from zero
/// initial state, recording activations.
pub(crate) fn lstm_forward_trace(p: &LstmCellParams, xs: &Array2<f64>) -> LstmTrace {
    let t_len = xs.nrows();
    let h = p.hidden;
    let pre = xs.dot(&p.w.t()); // T x 4h
    let mut gates = Array2::zeros((t_len, 4 * h));
    let mut cells = Array2::zeros((t_len, h));
    let mut hs = Array2::zeros((t_len, h));
    let mut h_prev = Array1::zeros(h);
    for t in 0..t_len {
        let rec = p.u.dot(&h_prev); // 4h
        for k in 0..h {
            let i = sigmoid(pre[[t, k]] + rec[k] + p.b[k]);
            let f = sigmoid(pre[[t, h + k]] + rec[h + k] + p.b[h + k]);
            let g = (pre[[t, 2 * h + k]] + rec[2 * h + k] + p.b[2 * h + k]).tanh();
            let o = sigmoid(pre[[t, 3 * h + k]] + rec[3 * h + k] + p.b[3 * h + k]);
            let c_prev = if t > 0 { cells[[t - 1, k]] } else { 0.0 };
            let c = f * c_prev + i * g;
            gates[[t, k]] = i;
            gates[[t, h + k]] = f;
            gates[[t, 2 * h + k]] = g;
            gates[[t, 3 * h + k]] = o;
            cells[[t, k]] = c;
            hs[[t, k]] = o * c.tanh();
        }
        h_prev.assign(&hs.row(t));
    }
    LstmTrace { gates, cells, hs }
}

/// Backpropagation through time for one direction.
///
/// `d_h_seq` holds the upstream gradient on every hidden state (processing
/// order). Returns (dW, dU, db, dXs).
pub(crate) fn lstm_backward(
    p: &LstmCellParams,
    xs: &Array2<f64>,
    trace: &LstmTrace,
    d_h_seq: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>, Array2<f64>) {
    let t_len = xs.nrows();
    let h = p.hidden;
    let mut d_pre = Array2::zeros((t_len, 4 * h));
    let mut dc_next = Array1::<f64>::zeros(h);
    let mut dh_carry = Array1::<f64>::zeros(h);
    for t in (0..t_len).rev() {
        for k in 0..h {
            let dh = d_h_seq[[t, k]] + dh_carry[k];
            let i = trace.gates[[t, k]];
            let f = trace.gates[[t, h + k]];
            let g = trace.gates[[t, 2 * h + k]];
            let o = trace.gates[[t, 3 * h + k]];
            let c = trace.cells[[t, k]];
            let tc = c.tanh();
            let c_prev = if t > 0 { trace.cells[[t - 1, k]] } else { 0.0 };
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            d_pre[[t, k]] = dc * g * i * (1.0 - i);
            d_pre[[t, h + k]] = dc * c_prev * f * (1.0 - f);
            d_pre[[t, 2 * h + k]] = dc * i * (1.0 - g * g);
            d_pre[[t, 3 * h + k]] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        dh_carry = p.u.t().dot(&d_pre.row(t));
    }
    let d_w = d_pre.t().dot(xs);
    let d_b = d_pre.sum_axis(Axis(0));
    let d_u = if t_len > 1 {
        d_pre
            .slice(s![1.., ..])
            .t()
            .dot(&trace.hs.slice(s![..t_len - 1, ..]))
    } else {
        Array2::zeros((4 * h, h))
    };
    let d_xs = d_pre.dot(&p.w);
    (d_w, d_u, d_b, d_xs)
}

/// Bidirectional forward: position `t` holds `[h_fwd(t) ; h_bwd(t)]`, both
/// directions starting from zero state.
pub fn bilstm_forward(layer: &BiLstmLayer, xs: &Array2<f64>) -> Array2<f64> {
    let xs_rev = reverse_rows(xs);
    let fwd = lstm_forward_trace(&layer.fwd, xs);
    let bwd = lstm_forward_trace(&layer.bwd, &xs_rev);
    concat_directions(&fwd.hs, &bwd.hs)
}

pub(crate) fn reverse_rows(xs: &Array2<f64>) -> Array2<f64> {
    xs.slice(s![..;-1, ..]).to_owned()
}

/// Stitch fwd (position order) and bwd (processing order) hidden states into
/// `T x 2h` position-order outputs.
pub(crate) fn concat_directions(fwd_hs: &Array2<f64>, bwd_hs: &Array2<f64>) -> Array2<f64> {
    let t_len = fwd_hs.nrows();
    let h = fwd_hs.ncols();
    let mut out = Array2::zeros((t_len, 2 * h));
    for t in 0..t_len {
        out.slice_mut(s![t, ..h]).assign(&fwd_hs.row(t));
        out.slice_mut(s![t, h..]).assign(&bwd_hs.row(t_len - 1 - t));
    }
    out
}

/// Full activation record for one instance.
#[derive(Debug, Clone)]
pub(crate) struct ForwardTrace {
    /// Embedded inputs in position order, `T x d`.
    pub xs: Array2<f64>,
    pub fwd: LstmTrace,
    /// Backward direction trace, in processing (reversed) order.
    pub bwd: LstmTrace,
    /// BiLSTM outputs in position order, `T x 2h`.
    pub concat: Array2<f64>,
    /// m2 only: intermediate dense output after dropout.
    pub dropped: Option<Array2<f64>>,
    /// m2 only: the scaled dropout mask that was applied.
    pub mask: Option<Array2<f64>>,
    /// Softmax probabilities, `T x 4`.
    pub probs: Array2<f64>,
}

pub(crate) fn gather_embeddings(emb: &EmbeddingMatrix, word_ids: &[u32]) -> Result<Array2<f64>> {
    let mut xs = Array2::zeros((word_ids.len(), emb.dim()));
    for (t, &id) in word_ids.iter().enumerate() {
        if id as usize >= emb.size() {
            return Err(Error::Validation(format!(
                "word id {} out of range for vocabulary of size {}",
                id,
                emb.size()
            )));
        }
        xs.row_mut(t).assign(&emb.row(id));
    }
    Ok(xs)
}

/// Forward pass recording every intermediate needed by the backward pass.
/// `mask` must be `Some` exactly when dropout is active (m2, training).
pub(crate) fn forward_trace(
    params: &ModelParams,
    cfg: &ModelConfig,
    inst: &Instance,
    mask: Option<&Array2<f64>>,
) -> Result<ForwardTrace> {
    if inst.word_ids.len() != cfg.max_len {
        return Err(Error::Validation(format!(
            "instance has {} positions, config requires max_len {}",
            inst.word_ids.len(),
            cfg.max_len
        )));
    }
    let xs = gather_embeddings(&params.embeddings, &inst.word_ids)?;
    let xs_rev = reverse_rows(&xs);
    let fwd = lstm_forward_trace(&params.bilstm.fwd, &xs);
    let bwd = lstm_forward_trace(&params.bilstm.bwd, &xs_rev);
    let concat = concat_directions(&fwd.hs, &bwd.hs);

    let (head_in, dropped, mask_owned) = match (&params.mid_dense, cfg.variant) {
        (Some(mid), Variant::M2) => {
            let mut pre = concat.dot(&mid.w.t());
            pre += &mid.b;
            let dropped = match mask {
                Some(m) => &pre * m,
                None => pre,
            };
            (dropped.clone(), Some(dropped), mask.cloned())
        }
        (None, Variant::M1) => (concat.clone(), None, None),
        _ => {
            return Err(Error::Config(
                "model parameters do not match the configured variant".into(),
            ))
        }
    };

    let mut logits = head_in.dot(&params.out_dense.w.t());
    logits += &params.out_dense.b;
    for mut row in logits.rows_mut() {
        softmax_in_place(row.as_slice_mut().unwrap());
    }
    Ok(ForwardTrace {
        xs,
        fwd,
        bwd,
        concat,
        dropped,
        mask: mask_owned,
        probs: logits,
    })
}

/// Per-position label probabilities for one instance (`T x 4`).
///
/// In training mode with m2, dropout is sampled from `rng`; at inference the
/// pass is deterministic.
pub fn model_forward(
    params: &ModelParams,
    cfg: &ModelConfig,
    inst: &Instance,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    let mask = if training && cfg.variant == Variant::M2 && cfg.dropout_rate > 0.0 {
        Some(dropout_mask(
            cfg.max_len,
            cfg.mid_dense_size,
            cfg.dropout_rate,
            rng,
        ))
    } else {
        None
    };
    Ok(forward_trace(params, cfg, inst, mask.as_ref())?.probs)
}

/// Per-position argmax; ties break toward the lowest label code.
pub fn predict_labels(probs: &Array2<f64>) -> Vec<Label> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_p = row[0];
            for k in 1..row.len() {
                if row[k] > best_p {
                    best = k;
                    best_p = row[k];
                }
            }
            Label::from_code(best).expect("row length is N_LABELS")
        })
        .collect()
}

/// Map predicted labels back to document token spans. Positions at or past
/// `real_len` are padding and are ignored.
pub fn decode_spans(labels: &[Label], inst: &Instance) -> (Span, Span, Span) {
    let mut arg1 = Span::new();
    let mut arg2 = Span::new();
    let mut conn = Span::new();
    for (t, label) in labels.iter().enumerate().take(inst.real_len) {
        let doc_index = inst.window_start + t;
        match label {
            Label::Arg1 => arg1.insert(doc_index),
            Label::Arg2 => arg2.insert(doc_index),
            Label::Conn => conn.insert(doc_index),
            Label::None => {}
        }
    }
    (arg1, arg2, conn)
}
