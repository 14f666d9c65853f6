//! Declarative run configuration: a TOML file with sections, merged with
//! command-line overrides (defaults < file < flags).

use std::path::{Path, PathBuf};

use arglab_core::net::ModelConfig;
use arglab_core::synth::SynthConfig;
use arglab_core::train::TrainConfig;
use arglab_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub score: ScoreSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub variant: Option<String>,
    pub embed_dim: Option<usize>,
    pub hidden: Option<usize>,
    pub max_len: Option<usize>,
    pub dropout_rate: Option<f64>,
    pub mid_dense_size: Option<usize>,
}

impl ModelSection {
    pub fn resolve(&self) -> Result<ModelConfig> {
        let mut cfg = ModelConfig::default();
        if let Some(variant) = &self.variant {
            cfg.variant = variant.parse()?;
        }
        if let Some(v) = self.embed_dim {
            cfg.embed_dim = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        if let Some(v) = self.max_len {
            cfg.max_len = v;
        }
        if let Some(v) = self.dropout_rate {
            cfg.dropout_rate = v;
        }
        if let Some(v) = self.mid_dense_size {
            cfg.mid_dense_size = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    /// "random" or "pretrained".
    pub mode: String,
    /// Vector file for pretrained mode.
    pub path: Option<PathBuf>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            mode: "random".into(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingMode {
    Random,
    Pretrained,
}

impl EmbeddingSection {
    pub fn resolve(&self) -> Result<(EmbeddingMode, Option<PathBuf>)> {
        match self.mode.as_str() {
            "random" => Ok((EmbeddingMode::Random, None)),
            "pretrained" => {
                let path = self.path.clone().ok_or_else(|| {
                    Error::Config("embedding.mode = \"pretrained\" requires embedding.path".into())
                })?;
                Ok((EmbeddingMode::Pretrained, Some(path)))
            }
            other => Err(Error::Config(format!(
                "unknown embedding mode {other:?} (expected \"random\" or \"pretrained\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub train_relations: Option<PathBuf>,
    pub train_tokens: Option<PathBuf>,
    pub test_relations: Option<PathBuf>,
    pub test_tokens: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write `checkpoint_epoch_<N>.ckpt` every N epochs.
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreSection {
    pub conn_into_arg2: Option<bool>,
}

/// Synth section mirrors `SynthConfig` but keeps every field optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub n_instances: Option<usize>,
    pub vocab_size: Option<usize>,
    pub max_window: Option<usize>,
    /// Pairs of [distance, weight].
    pub distances: Option<Vec<(usize, f64)>>,
    pub connectives: Option<Vec<String>>,
    pub zipf_exponent: Option<f64>,
    pub max_arg_len: Option<usize>,
    pub ambiguity_rate: Option<f64>,
    pub doc_prefix: Option<String>,
    pub seed: Option<u64>,
}

impl SynthSection {
    pub fn apply(&self, cfg: &mut SynthConfig) {
        if let Some(v) = self.n_instances {
            cfg.n_instances = v;
        }
        if let Some(v) = self.vocab_size {
            cfg.vocab_size = v;
        }
        if let Some(v) = self.max_window {
            cfg.max_window = v;
        }
        if let Some(v) = &self.distances {
            cfg.distance_distribution = v.clone();
        }
        if let Some(v) = &self.connectives {
            cfg.connective_lexicon = v.clone();
        }
        if let Some(v) = self.zipf_exponent {
            cfg.zipf_exponent = v;
        }
        if let Some(v) = self.max_arg_len {
            cfg.max_arg_len = v;
        }
        if let Some(v) = self.ambiguity_rate {
            cfg.ambiguity_rate = v;
        }
        if let Some(v) = &self.doc_prefix {
            cfg.doc_prefix = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

/// Parse a distance distribution given as `"0:0.25,1:0.5,5:0.15,12:0.10"`.
pub fn parse_distance_spec(spec: &str) -> Result<Vec<(usize, f64)>> {
    spec.split(',')
        .map(|pair| {
            let (d, w) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bad distance spec entry {pair:?}")))?;
            let d = d
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad distance {d:?}")))?;
            let w = w
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad weight {w:?}")))?;
            Ok((d, w))
        })
        .collect()
}

pub fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// The fully resolved configuration for a command, recorded in the manifest.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResolvedRun {
    pub model: Option<ModelConfig>,
    pub train: Option<TrainConfig>,
    pub embedding_mode: Option<String>,
    pub synth: Option<SynthConfig>,
}

pub fn require<T: Clone>(value: &Option<T>, what: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::Config(format!("missing required setting: {what}")))
}
