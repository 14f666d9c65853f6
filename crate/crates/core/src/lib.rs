//! Sequence-labeling engine for the argument spans of explicit discourse
//! relations: a from-scratch bidirectional LSTM tagger with its own
//! backpropagation-through-time, Adam optimizer, exact-match scorer, and a
//! synthetic corpus generator for end-to-end verification.

pub mod checkpoint;
pub mod corpus;
pub mod dd;
pub mod embed;
pub mod error;
pub mod net;
pub mod numeric;
pub mod pipeline;
pub mod score;
pub mod synth;
pub mod train;

pub use checkpoint::{Checkpoint, TrainState};
pub use corpus::{
    build_instance, build_instances, corpus_stats, distance, filter_explicit, load_corpus,
    load_documents, load_relations, Corpus, CorpusStats, Document, Instance, Label, Relation,
    RelationType, Span, Token, DEFAULT_MAX_LEN,
};
pub use embed::{EmbeddingMatrix, Vocabulary, ZERO_WORD_ID};
pub use error::{Error, Result};
pub use net::{
    bilstm_forward, decode_spans, dense_forward, dropout_apply, glorot_uniform, lstm_cell_step,
    model_forward, predict_labels, Activation, BiLstmLayer, DenseLayer, LstmCellParams,
    ModelConfig, ModelParams, TensorFamily, Variant, N_LABELS,
};
pub use score::{
    exact_match, score, score_by_distance, DistanceReport, PredictedSpans, PredictionRecord,
    ScoreOptions, ScoreReport, SpanMetric,
};
pub use synth::{
    generate, oracle_label, oracle_model, read_ground_truth, write_corpus, GroundTruthRow,
    MarkerLexicon, SynthConfig, SynthCorpus,
};
pub use train::{
    adam_step, backward, clip_global_norm, cross_entropy, grad_check, AdamHyper, AdamState,
    BackwardOptions, EpochObserver, EpochRecord, EpochScores, GradCheckReport, Gradients,
    NoObserver, TrainConfig, Trainer, TrainerView,
};
