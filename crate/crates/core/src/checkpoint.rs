//! Checkpoint format: a single file holding the model config, the
//! vocabulary, and every parameter tensor (plus optimizer state and RNG for
//! resumable training) with named shapes.
//!
//! Layout: magic + version, a JSON header describing config/vocab/tensors,
//! then the raw little-endian tensor payloads in header order. Floats are
//! stored as their IEEE-754 bits, so write/read round-trips are bit-exact.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::net::{
    Activation, BiLstmLayer, DenseLayer, LstmCellParams, ModelConfig, ModelParams, Variant,
    N_LABELS,
};
use crate::train::{AdamState, TrainConfig};

const MAGIC: &[u8; 4] = b"ALCK";
const VERSION: u32 = 1;

/// Optimizer and RNG state needed to resume training bit-identically.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub train_cfg: TrainConfig,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
    pub completed_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model_cfg: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ModelParams,
    pub train: Option<TrainState>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    vocab: Vec<String>,
    train: Option<TrainHeader>,
    tensors: Vec<TensorInfo>,
}

#[derive(Serialize, Deserialize)]
struct TrainHeader {
    cfg: TrainConfig,
    completed_epochs: usize,
    adam_step: u64,
    dense_embed_update: bool,
    rng: RngState,
}

#[derive(Serialize, Deserialize)]
struct RngState {
    seed: String,
    word_pos: [u64; 2],
    stream: u64,
}

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    dtype: String,
    shape: Vec<usize>,
}

fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hex_decode(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len() / 2)
        .map(|i| u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok())
        .collect()
}

enum TensorRef<'a> {
    F64(&'a [f64]),
    U64(&'a [u64]),
}

fn param_tensors<'a>(params: &'a ModelParams) -> Vec<(String, Vec<usize>, TensorRef<'a>)> {
    let mut out: Vec<(String, Vec<usize>, TensorRef<'a>)> = vec![(
        "embeddings".into(),
        vec![params.embeddings.size(), params.embeddings.dim()],
        TensorRef::F64(params.embeddings.vectors().as_slice().unwrap()),
    )];
    for (prefix, cell) in [("fwd", &params.bilstm.fwd), ("bwd", &params.bilstm.bwd)] {
        out.push((
            format!("{prefix}.w"),
            vec![cell.w.nrows(), cell.w.ncols()],
            TensorRef::F64(cell.w.as_slice().unwrap()),
        ));
        out.push((
            format!("{prefix}.u"),
            vec![cell.u.nrows(), cell.u.ncols()],
            TensorRef::F64(cell.u.as_slice().unwrap()),
        ));
        out.push((
            format!("{prefix}.b"),
            vec![cell.b.len()],
            TensorRef::F64(cell.b.as_slice().unwrap()),
        ));
    }
    if let Some(mid) = &params.mid_dense {
        out.push((
            "mid.w".into(),
            vec![mid.w.nrows(), mid.w.ncols()],
            TensorRef::F64(mid.w.as_slice().unwrap()),
        ));
        out.push(("mid.b".into(), vec![mid.b.len()], TensorRef::F64(mid.b.as_slice().unwrap())));
    }
    out.push((
        "out.w".into(),
        vec![params.out_dense.w.nrows(), params.out_dense.w.ncols()],
        TensorRef::F64(params.out_dense.w.as_slice().unwrap()),
    ));
    out.push((
        "out.b".into(),
        vec![params.out_dense.b.len()],
        TensorRef::F64(params.out_dense.b.as_slice().unwrap()),
    ));
    out
}

fn adam_tensors<'a>(adam: &'a AdamState, params: &'a ModelParams) -> Vec<(String, Vec<usize>, TensorRef<'a>)> {
    let mut out = Vec::new();
    for (moment, set) in [("m", &adam.m), ("v", &adam.v)] {
        for (name, rows, cols, data) in [
            ("fwd.w", set.fwd_w.nrows(), set.fwd_w.ncols(), set.fwd_w.as_slice().unwrap()),
            ("fwd.u", set.fwd_u.nrows(), set.fwd_u.ncols(), set.fwd_u.as_slice().unwrap()),
            ("bwd.w", set.bwd_w.nrows(), set.bwd_w.ncols(), set.bwd_w.as_slice().unwrap()),
            ("bwd.u", set.bwd_u.nrows(), set.bwd_u.ncols(), set.bwd_u.as_slice().unwrap()),
        ] {
            out.push((format!("adam.{moment}.{name}"), vec![rows, cols], TensorRef::F64(data)));
        }
        for (name, data) in [
            ("fwd.b", set.fwd_b.as_slice().unwrap()),
            ("bwd.b", set.bwd_b.as_slice().unwrap()),
        ] {
            out.push((format!("adam.{moment}.{name}"), vec![data.len()], TensorRef::F64(data)));
        }
        if let (Some(w), Some(b)) = (&set.mid_w, &set.mid_b) {
            out.push((
                format!("adam.{moment}.mid.w"),
                vec![w.nrows(), w.ncols()],
                TensorRef::F64(w.as_slice().unwrap()),
            ));
            out.push((format!("adam.{moment}.mid.b"), vec![b.len()], TensorRef::F64(b.as_slice().unwrap())));
        }
        out.push((
            format!("adam.{moment}.out.w"),
            vec![set.out_w.nrows(), set.out_w.ncols()],
            TensorRef::F64(set.out_w.as_slice().unwrap()),
        ));
        out.push((
            format!("adam.{moment}.out.b"),
            vec![set.out_b.len()],
            TensorRef::F64(set.out_b.as_slice().unwrap()),
        ));
    }
    out.push((
        "adam.embed_m".into(),
        vec![adam.embed_m.nrows(), adam.embed_m.ncols()],
        TensorRef::F64(adam.embed_m.as_slice().unwrap()),
    ));
    out.push((
        "adam.embed_v".into(),
        vec![adam.embed_v.nrows(), adam.embed_v.ncols()],
        TensorRef::F64(adam.embed_v.as_slice().unwrap()),
    ));
    out.push((
        "adam.embed_last_step".into(),
        vec![adam.embed_last_step.len()],
        TensorRef::U64(&adam.embed_last_step),
    ));
    let _ = params;
    out
}

pub fn save(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    let mut tensors = param_tensors(&checkpoint.params);
    if let Some(train) = &checkpoint.train {
        tensors.extend(adam_tensors(&train.adam, &checkpoint.params));
    }
    let header = Header {
        model: checkpoint.model_cfg.clone(),
        vocab: checkpoint.vocab.words().to_vec(),
        train: checkpoint.train.as_ref().map(|t| {
            let pos = t.rng.get_word_pos();
            TrainHeader {
                cfg: t.train_cfg.clone(),
                completed_epochs: t.completed_epochs,
                adam_step: t.adam.step_count(),
                dense_embed_update: t.adam.dense_embed_update,
                rng: RngState {
                    seed: hex_encode(&t.rng.get_seed()),
                    word_pos: [pos as u64, (pos >> 64) as u64],
                    stream: t.rng.get_stream(),
                },
            }
        }),
        tensors: tensors
            .iter()
            .map(|(name, shape, data)| TensorInfo {
                name: name.clone(),
                dtype: match data {
                    TensorRef::F64(_) => "f64".into(),
                    TensorRef::U64(_) => "u64".into(),
                },
                shape: shape.clone(),
            })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| Error::Validation(format!("serializing checkpoint header: {e}")))?;

    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&header_bytes).map_err(io_err)?;
    for (_, _, data) in &tensors {
        match data {
            TensorRef::F64(values) => {
                for v in *values {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
            }
            TensorRef::U64(values) => {
                for v in *values {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
            }
        }
    }
    w.flush().map_err(io_err)
}

struct TensorReader<'a, R: Read> {
    reader: &'a mut R,
    infos: std::collections::VecDeque<TensorInfo>,
    path: String,
}

impl<R: Read> TensorReader<'_, R> {
    fn next_f64(&mut self, name: &str, shape: &[usize]) -> Result<Vec<f64>> {
        let info = self.expect(name, shape, "f64")?;
        let count: usize = info.shape.iter().product();
        let mut buf = vec![0u8; count * 8];
        self.reader
            .read_exact(&mut buf)
            .map_err(|e| Error::Io { path: self.path.clone(), source: e })?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn next_u64(&mut self, name: &str, shape: &[usize]) -> Result<Vec<u64>> {
        let info = self.expect(name, shape, "u64")?;
        let count: usize = info.shape.iter().product();
        let mut buf = vec![0u8; count * 8];
        self.reader
            .read_exact(&mut buf)
            .map_err(|e| Error::Io { path: self.path.clone(), source: e })?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn expect(&mut self, name: &str, shape: &[usize], dtype: &str) -> Result<TensorInfo> {
        let info = self.infos.pop_front().ok_or_else(|| {
            Error::Config(format!("checkpoint is missing tensor {name} of shape {shape:?}"))
        })?;
        if info.name != name || info.dtype != dtype {
            return Err(Error::Config(format!(
                "checkpoint tensor order mismatch: expected {name} ({dtype}), found {} ({})",
                info.name, info.dtype
            )));
        }
        if info.shape != shape {
            return Err(Error::Config(format!(
                "checkpoint tensor {name} has shape {:?}, config requires {shape:?}",
                info.shape
            )));
        }
        Ok(info)
    }
}

fn array2(values: Vec<f64>, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), values).expect("shape validated")
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let io_err = |e| Error::io(path, e);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::parse(path, 0, "not a checkpoint file (bad magic)"));
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version).map_err(io_err)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(Error::Config(format!("unsupported checkpoint version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io_err)?;
    let mut header_bytes = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header_bytes).map_err(io_err)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::parse(path, 0, format!("checkpoint header: {e}")))?;

    let cfg = header.model.clone();
    cfg.validate()?;
    let vocab = Vocabulary::from_words(header.vocab.clone())?;
    let size = vocab.size();
    let (d, h) = (cfg.embed_dim, cfg.hidden);
    let out_in = match cfg.variant {
        Variant::M1 => 2 * h,
        Variant::M2 => cfg.mid_dense_size,
    };

    let mut tr = TensorReader {
        reader: &mut r,
        infos: header.tensors.into(),
        path: path.display().to_string(),
    };

    let embeddings = EmbeddingMatrix::from_vectors(array2(
        tr.next_f64("embeddings", &[size, d])?,
        size,
        d,
    ));
    let mut cells = Vec::new();
    for prefix in ["fwd", "bwd"] {
        let w = array2(tr.next_f64(&format!("{prefix}.w"), &[4 * h, d])?, 4 * h, d);
        let u = array2(tr.next_f64(&format!("{prefix}.u"), &[4 * h, h])?, 4 * h, h);
        let b = Array1::from_vec(tr.next_f64(&format!("{prefix}.b"), &[4 * h])?);
        cells.push(LstmCellParams { w, u, b, hidden: h, input: d });
    }
    let bwd = cells.pop().unwrap();
    let fwd = cells.pop().unwrap();
    let mid_dense = match cfg.variant {
        Variant::M1 => None,
        Variant::M2 => {
            let w = array2(
                tr.next_f64("mid.w", &[cfg.mid_dense_size, 2 * h])?,
                cfg.mid_dense_size,
                2 * h,
            );
            let b = Array1::from_vec(tr.next_f64("mid.b", &[cfg.mid_dense_size])?);
            Some(DenseLayer { w, b, activation: Activation::Identity })
        }
    };
    let out_dense = DenseLayer {
        w: array2(tr.next_f64("out.w", &[N_LABELS, out_in])?, N_LABELS, out_in),
        b: Array1::from_vec(tr.next_f64("out.b", &[N_LABELS])?),
        activation: Activation::Softmax,
    };
    let params = ModelParams {
        embeddings,
        bilstm: BiLstmLayer { fwd, bwd },
        mid_dense,
        out_dense,
    };

    let train = match header.train {
        None => None,
        Some(train_header) => {
            let mut read_set = |moment: &str| -> Result<crate::train::TensorSet> {
                Ok(crate::train::TensorSet {
                    fwd_w: array2(tr.next_f64(&format!("adam.{moment}.fwd.w"), &[4 * h, d])?, 4 * h, d),
                    fwd_u: array2(tr.next_f64(&format!("adam.{moment}.fwd.u"), &[4 * h, h])?, 4 * h, h),
                    bwd_w: array2(tr.next_f64(&format!("adam.{moment}.bwd.w"), &[4 * h, d])?, 4 * h, d),
                    bwd_u: array2(tr.next_f64(&format!("adam.{moment}.bwd.u"), &[4 * h, h])?, 4 * h, h),
                    fwd_b: Array1::from_vec(tr.next_f64(&format!("adam.{moment}.fwd.b"), &[4 * h])?),
                    bwd_b: Array1::from_vec(tr.next_f64(&format!("adam.{moment}.bwd.b"), &[4 * h])?),
                    mid_w: match cfg.variant {
                        Variant::M1 => None,
                        Variant::M2 => Some(array2(
                            tr.next_f64(&format!("adam.{moment}.mid.w"), &[cfg.mid_dense_size, 2 * h])?,
                            cfg.mid_dense_size,
                            2 * h,
                        )),
                    },
                    mid_b: match cfg.variant {
                        Variant::M1 => None,
                        Variant::M2 => Some(Array1::from_vec(
                            tr.next_f64(&format!("adam.{moment}.mid.b"), &[cfg.mid_dense_size])?,
                        )),
                    },
                    out_w: array2(tr.next_f64(&format!("adam.{moment}.out.w"), &[N_LABELS, out_in])?, N_LABELS, out_in),
                    out_b: Array1::from_vec(tr.next_f64(&format!("adam.{moment}.out.b"), &[N_LABELS])?),
                })
            };
            let m = read_set("m")?;
            let v = read_set("v")?;
            let embed_m = array2(tr.next_f64("adam.embed_m", &[size, d])?, size, d);
            let embed_v = array2(tr.next_f64("adam.embed_v", &[size, d])?, size, d);
            let embed_last_step = tr.next_u64("adam.embed_last_step", &[size])?;
            let adam = AdamState::from_parts(
                train_header.cfg.adam_hyper(),
                train_header.dense_embed_update,
                train_header.adam_step,
                m,
                v,
                embed_m,
                embed_v,
                embed_last_step,
            );
            let seed_bytes = hex_decode(&train_header.rng.seed)
                .filter(|b| b.len() == 32)
                .ok_or_else(|| Error::parse(path, 0, "bad rng seed in checkpoint header"))?;
            let mut seed = [0u8; 32];
            seed.copy_from_slice(&seed_bytes);
            let mut rng = ChaCha8Rng::from_seed(seed);
            rng.set_stream(train_header.rng.stream);
            rng.set_word_pos(
                (train_header.rng.word_pos[0] as u128)
                    | ((train_header.rng.word_pos[1] as u128) << 64),
            );
            Some(TrainState {
                train_cfg: train_header.cfg,
                adam,
                rng,
                completed_epochs: train_header.completed_epochs,
            })
        }
    };

    Ok(Checkpoint {
        model_cfg: cfg,
        vocab,
        params,
        train,
    })
}
