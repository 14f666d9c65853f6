//! Deterministic synthetic corpora in the same file formats as real data,
//! with planted argument spans governed by reserved delimiter tokens.
//!
//! Template per relation (one document per relation):
//!
//! ```text
//! <b> content+ <gap>{distance} CONN content+ <e>
//!      ^ Arg1                   ^Conn ^ Arg2
//! ```
//!
//! The gap token is reserved so that a distance of zero is plantable and
//! every label is decidable from token identity alone, which makes the task
//! learnable by construction and the acceptance thresholds meaningful.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::corpus::{distance as relation_distance, Document, Label, Relation, RelationType, Span};
use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::net::{
    Activation, BiLstmLayer, DenseLayer, LstmCellParams, ModelConfig, ModelParams, Variant,
    N_LABELS,
};
use crate::numeric::derive_rng;

const SYNTH_SALT: u64 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerLexicon {
    pub begin: String,
    pub end: String,
    /// Reserved filler between Arg1 and the connective; one per distance
    /// unit.
    pub gap: String,
}

impl Default for MarkerLexicon {
    fn default() -> Self {
        MarkerLexicon {
            begin: "<b>".into(),
            end: "<e>".into(),
            gap: "<gap>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_instances: usize,
    /// Number of distinct content words.
    pub vocab_size: usize,
    /// Upper bound on the generated window (begin marker through end
    /// marker, inclusive).
    pub max_window: usize,
    /// (distance, weight) pairs; distances are sampled from this
    /// distribution.
    pub distance_distribution: Vec<(usize, f64)>,
    pub connective_lexicon: Vec<String>,
    pub markers: MarkerLexicon,
    /// Content words are drawn rank-Zipf with this exponent, mimicking
    /// natural sparsity.
    pub zipf_exponent: f64,
    /// Maximum content tokens per argument.
    pub max_arg_len: usize,
    /// Difficulty knob: probability that an Arg2 content token is replaced
    /// by a connective-lexicon token. At the default of zero, reserved
    /// tokens never appear inside argument content.
    pub ambiguity_rate: f64,
    pub doc_prefix: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_instances: 100,
            vocab_size: 200,
            max_window: 60,
            distance_distribution: vec![(0, 0.25), (1, 0.5), (5, 0.15), (12, 0.10)],
            connective_lexicon: vec![
                "because".into(),
                "but".into(),
                "when".into(),
                "since".into(),
                "although".into(),
            ],
            markers: MarkerLexicon::default(),
            zipf_exponent: 1.1,
            max_arg_len: 8,
            ambiguity_rate: 0.0,
            doc_prefix: "synth".into(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::Config("vocab_size must be positive".into()));
        }
        if self.connective_lexicon.is_empty() {
            return Err(Error::Config("connective lexicon is empty".into()));
        }
        if self.distance_distribution.is_empty() {
            return Err(Error::Config("distance distribution is empty".into()));
        }
        for (d, w) in &self.distance_distribution {
            if *w <= 0.0 {
                return Err(Error::Config(format!("distance {d} has non-positive weight {w}")));
            }
            // begin + arg1 + gaps + conn + arg2 + end
            if d + 5 > self.max_window {
                return Err(Error::Config(format!(
                    "distance {d} is infeasible for max_window {}",
                    self.max_window
                )));
            }
        }
        if self.max_arg_len == 0 {
            return Err(Error::Config("max_arg_len must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.ambiguity_rate) {
            return Err(Error::Config("ambiguity_rate outside [0, 1)".into()));
        }
        let mut reserved: HashSet<&str> = self.connective_lexicon.iter().map(String::as_str).collect();
        reserved.insert(&self.markers.begin);
        reserved.insert(&self.markers.end);
        reserved.insert(&self.markers.gap);
        if reserved.len() != self.connective_lexicon.len() + 3 {
            return Err(Error::Config("reserved tokens are not pairwise distinct".into()));
        }
        for i in 0..self.vocab_size {
            if reserved.contains(content_word(i).as_str()) {
                return Err(Error::Config(format!(
                    "reserved token collides with content word {}",
                    content_word(i)
                )));
            }
        }
        Ok(())
    }
}

fn content_word(index: usize) -> String {
    format!("w{index:04}")
}

/// Ground truth for one generated relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRow {
    pub id: u64,
    pub doc_id: String,
    pub distance: usize,
    pub arg1: Span,
    pub arg2: Span,
    pub conn: Span,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    pub relations: Vec<Relation>,
    pub ground_truth: Vec<GroundTruthRow>,
}

/// Generate a corpus: one single-relation document per instance,
/// deterministic for a given config.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = derive_rng(cfg.seed, &[SYNTH_SALT]);
    let weights = WeightedIndex::new(cfg.distance_distribution.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Config(format!("distance distribution: {e}")))?;
    let zipf = Zipf::new(cfg.vocab_size as f64, cfg.zipf_exponent)
        .map_err(|e| Error::Config(format!("zipf exponent: {e}")))?;

    let mut documents = Vec::with_capacity(cfg.n_instances);
    let mut relations = Vec::with_capacity(cfg.n_instances);
    let mut ground_truth = Vec::with_capacity(cfg.n_instances);
    for i in 0..cfg.n_instances {
        let dist = cfg.distance_distribution[weights.sample(&mut rng)].0;
        let budget = cfg.max_window - (dist + 5);
        let extra1 = rng.random_range(0..=budget.min(cfg.max_arg_len - 1));
        let extra2 = rng.random_range(0..=(budget - extra1).min(cfg.max_arg_len - 1));
        let n1 = 1 + extra1;
        let n2 = 1 + extra2;
        let connective = cfg
            .connective_lexicon
            .choose(&mut rng)
            .expect("validated non-empty")
            .clone();

        let draw_content = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
            content_word(zipf.sample(rng) as usize - 1)
        };
        let mut tokens = Vec::with_capacity(n1 + n2 + dist + 3);
        tokens.push(cfg.markers.begin.clone());
        for _ in 0..n1 {
            tokens.push(draw_content(&mut rng));
        }
        for _ in 0..dist {
            tokens.push(cfg.markers.gap.clone());
        }
        tokens.push(connective);
        for _ in 0..n2 {
            let ambiguous = cfg.ambiguity_rate > 0.0 && rng.random::<f64>() < cfg.ambiguity_rate;
            if ambiguous {
                tokens.push(cfg.connective_lexicon.choose(&mut rng).unwrap().clone());
            } else {
                tokens.push(draw_content(&mut rng));
            }
        }
        tokens.push(cfg.markers.end.clone());

        let doc_id = format!("{}_{:05}", cfg.doc_prefix, i);
        let conn_pos = 1 + n1 + dist;
        let arg1 = Span::range(1, n1);
        let conn = Span::range(conn_pos, conn_pos);
        let arg2 = Span::range(conn_pos + 1, conn_pos + n2);
        let relation = Relation {
            id: i as u64 + 1,
            doc_id: doc_id.clone(),
            rel_type: RelationType::Explicit,
            arg1: arg1.clone(),
            arg2: arg2.clone(),
            connective: conn.clone(),
        };
        let document = Document::new(doc_id.clone(), tokens)?;
        relation.validate(Some(&document))?;
        debug_assert_eq!(relation_distance(&relation)?, dist);
        ground_truth.push(GroundTruthRow {
            id: relation.id,
            doc_id,
            distance: dist,
            arg1,
            arg2,
            conn,
        });
        documents.push(document);
        relations.push(relation);
    }
    Ok(SynthCorpus {
        documents,
        relations,
        ground_truth,
    })
}

/// Recompute the three spans of a generated document from the reserved-token
/// rules alone; used to validate the generator independently of the span
/// bookkeeping it does while generating.
pub fn oracle_label(cfg: &SynthConfig, document: &Document) -> Result<(Span, Span, Span)> {
    let tokens = document.tokens();
    let malformed = |msg: &str| -> Error {
        Error::Validation(format!("{}: malformed template: {}", document.doc_id, msg))
    };
    let connectives: HashSet<&str> = cfg.connective_lexicon.iter().map(String::as_str).collect();
    if tokens.first().map(|t| t.surface.as_str()) != Some(cfg.markers.begin.as_str()) {
        return Err(malformed("missing begin marker"));
    }
    if tokens.last().map(|t| t.surface.as_str()) != Some(cfg.markers.end.as_str()) {
        return Err(malformed("missing end marker"));
    }
    let conn_pos = tokens
        .iter()
        .position(|t| connectives.contains(t.surface.as_str()))
        .ok_or_else(|| malformed("no connective token"))?;
    let mut arg1 = Span::new();
    for token in &tokens[1..conn_pos] {
        if token.surface == cfg.markers.gap {
            continue;
        }
        if token.surface == cfg.markers.begin || token.surface == cfg.markers.end {
            return Err(malformed("marker inside Arg1 extent"));
        }
        arg1.insert(token.doc_index);
    }
    let mut arg2 = Span::new();
    for token in &tokens[conn_pos + 1..tokens.len() - 1] {
        if token.surface == cfg.markers.begin
            || token.surface == cfg.markers.end
            || token.surface == cfg.markers.gap
        {
            return Err(malformed("marker inside Arg2 extent"));
        }
        arg2.insert(token.doc_index);
    }
    if arg1.is_empty() || arg2.is_empty() {
        return Err(malformed("empty argument extent"));
    }
    Ok((arg1, arg2, Span::range(conn_pos, conn_pos)))
}

// ---------------------------------------------------------------------------
// Perfect-predictor fixture
// ---------------------------------------------------------------------------

/// Hand-constructed m1 parameters that implement the reserved-token
/// labeling rule exactly (for corpora with the default ambiguity of zero).
///
/// Embeddings carry three flags per word: content / connective / marker.
/// Each LSTM direction has four near-saturated cells: a connective latch
/// (forget ~1, input fires on the connective flag, so the cell remembers
/// whether a connective occurred at or before the position in processing
/// order) and one pass-through per flag (forget ~0, so the hidden state
/// mirrors the current token). The output layer then reads "content token
/// on which side of the connective" off the two latches, with margins of
/// several units, far above the saturation error.
///
/// Useful as an oracle-perfect checkpoint for exercising prediction and
/// scoring paths end to end.
pub fn oracle_model(
    cfg: &SynthConfig,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<(ModelConfig, ModelParams)> {
    cfg.validate()?;
    const K: f64 = 40.0;
    let model_cfg = ModelConfig {
        variant: Variant::M1,
        embed_dim: 3,
        hidden: 4,
        max_len,
        dropout_rate: 0.0,
        mid_dense_size: 4,
    };

    // Feature flags per vocabulary word: [content, connective, marker].
    let connectives: HashSet<&str> = cfg.connective_lexicon.iter().map(String::as_str).collect();
    let markers = [
        cfg.markers.begin.as_str(),
        cfg.markers.end.as_str(),
        cfg.markers.gap.as_str(),
    ];
    let mut vectors = Array2::zeros((vocab.size(), 3));
    for id in 1..vocab.size() as u32 {
        let surface = vocab.surface(id).expect("dense ids");
        let feature = if connectives.contains(surface) {
            1
        } else if markers.contains(&surface) {
            2
        } else {
            0
        };
        vectors[[id as usize, feature]] = 1.0;
    }

    // Gate rows are packed (i, f, g, o) x 4 units.
    let h = 4;
    let mut w = Array2::zeros((4 * h, 3));
    let mut b = Array1::zeros(4 * h);
    // Unit 0: connective latch. i and g fire on the connective flag, the
    // forget gate is saturated open, so c counts connectives seen so far.
    w[[0, 1]] = K;
    b[0] = -K / 2.0;
    b[h] = K;
    w[[2 * h, 1]] = K;
    b[2 * h] = -K / 2.0;
    b[3 * h] = K;
    // Units 1..3: pass-throughs of the three feature flags. The forget gate
    // is saturated shut, so h holds +-tanh(1) for flag present/absent.
    for unit in 1..h {
        b[unit] = K;
        b[h + unit] = -K;
        w[[2 * h + unit, unit - 1]] = K;
        b[2 * h + unit] = -K / 2.0;
        b[3 * h + unit] = K;
    }
    let cell = LstmCellParams {
        w,
        u: Array2::zeros((4 * h, h)),
        b,
        hidden: h,
        input: 3,
    };

    // Inputs to the output layer: [fwd latch, fwd content, fwd conn,
    // fwd marker, bwd latch, bwd content, bwd conn, bwd marker].
    let mut out_w = Array2::zeros((N_LABELS, 2 * h));
    let mut out_b = Array1::zeros(N_LABELS);
    let arg1 = Label::Arg1.code();
    let arg2 = Label::Arg2.code();
    let conn = Label::Conn.code();
    // Connective: fires on the conn pass-through from either direction.
    out_w[[conn, 2]] = 10.0;
    out_w[[conn, h + 2]] = 10.0;
    out_b[conn] = -8.0;
    // Arg1: a content token whose connective lies strictly ahead
    // (backward latch on, forward latch off). Arg2 is the mirror image.
    for (label, own_latch, other_latch) in [(arg1, h, 0), (arg2, 0, h)] {
        out_w[[label, 1]] = 6.0;
        out_w[[label, h + 1]] = 6.0;
        out_w[[label, own_latch]] = 10.0;
        out_w[[label, other_latch]] = -10.0;
        out_b[label] = -6.0;
    }

    let params = ModelParams {
        embeddings: EmbeddingMatrix::from_vectors(vectors),
        bilstm: BiLstmLayer {
            fwd: cell.clone(),
            bwd: cell,
        },
        mid_dense: None,
        out_dense: DenseLayer {
            w: out_w,
            b: out_b,
            activation: Activation::Softmax,
        },
    };
    Ok((model_cfg, params))
}

// ---------------------------------------------------------------------------
// File emission (same formats `corpus` reads)
// ---------------------------------------------------------------------------

fn span_token_list(span: &Span, offsets: &[(usize, usize)]) -> Vec<[i64; 5]> {
    span.iter()
        .map(|idx| {
            let (start, end) = offsets[idx];
            [start as i64, end as i64, idx as i64, 0, idx as i64]
        })
        .collect()
}

/// Write `relations.jsonl`, `tokens/<doc_id>.txt`, and `ground_truth.csv`
/// under `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let tokens_dir = dir.join("tokens");
    fs::create_dir_all(&tokens_dir).map_err(|e| Error::io(&tokens_dir, e))?;

    let rel_path = dir.join("relations.jsonl");
    let mut rel_file = fs::File::create(&rel_path).map_err(|e| Error::io(&rel_path, e))?;
    for (relation, document) in corpus.relations.iter().zip(&corpus.documents) {
        let mut offsets = Vec::with_capacity(document.len());
        let mut pos = 0usize;
        for token in document.tokens() {
            let len = token.surface.len();
            offsets.push((pos, pos + len));
            pos += len + 1;
        }
        let record = serde_json::json!({
            "DocID": relation.doc_id,
            "ID": relation.id,
            "Type": "Explicit",
            "Arg1": {"TokenList": span_token_list(&relation.arg1, &offsets)},
            "Arg2": {"TokenList": span_token_list(&relation.arg2, &offsets)},
            "Connective": {"TokenList": span_token_list(&relation.connective, &offsets)},
        });
        writeln!(rel_file, "{record}").map_err(|e| Error::io(&rel_path, e))?;

        let tok_path = tokens_dir.join(format!("{}.txt", document.doc_id));
        let mut tok_file = fs::File::create(&tok_path).map_err(|e| Error::io(&tok_path, e))?;
        for token in document.tokens() {
            writeln!(tok_file, "{}", token.surface).map_err(|e| Error::io(&tok_path, e))?;
        }
    }

    let gt_path = dir.join("ground_truth.csv");
    let mut gt_file = fs::File::create(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    writeln!(gt_file, "id,doc_id,distance,arg1,arg2,conn").map_err(|e| Error::io(&gt_path, e))?;
    for row in &corpus.ground_truth {
        let join = |s: &Span| {
            s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
        };
        writeln!(
            gt_file,
            "{},{},{},{},{},{}",
            row.id,
            row.doc_id,
            row.distance,
            join(&row.arg1),
            join(&row.arg2),
            join(&row.conn)
        )
        .map_err(|e| Error::io(&gt_path, e))?;
    }
    Ok(())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, line_no, format!("expected 6 fields, found {}", fields.len())));
        }
        let parse_span = |s: &str| -> Result<Span> {
            s.split_whitespace()
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::parse(path, line_no, format!("bad index {v:?}")))
                })
                .collect()
        };
        rows.push(GroundTruthRow {
            id: fields[0]
                .parse()
                .map_err(|_| Error::parse(path, line_no, "bad id"))?,
            doc_id: fields[1].to_string(),
            distance: fields[2]
                .parse()
                .map_err(|_| Error::parse(path, line_no, "bad distance"))?,
            arg1: parse_span(fields[3])?,
            arg2: parse_span(fields[4])?,
            conn: parse_span(fields[5])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::score::{self, PredictionRecord, ScoreOptions};

    fn small_cfg(n: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_instances: n,
            vocab_size: 50,
            max_window: 30,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn empty_config_yields_empty_corpus() {
        let corpus = generate(&small_cfg(0, 1)).unwrap();
        assert!(corpus.documents.is_empty());
        assert!(corpus.relations.is_empty());
    }

    #[test]
    fn generation_is_deterministic_and_files_are_byte_identical() {
        let cfg = small_cfg(20, 7);
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.relations, b.relations);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_corpus(&a, dir_a.path()).unwrap();
        write_corpus(&b, dir_b.path()).unwrap();
        for name in ["relations.jsonl", "ground_truth.csv"] {
            let fa = std::fs::read(dir_a.path().join(name)).unwrap();
            let fb = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(fa, fb, "{name} differs between identical runs");
        }
    }

    #[test]
    fn planted_distances_match_recomputed_distances() {
        let corpus = generate(&small_cfg(50, 3)).unwrap();
        for (relation, row) in corpus.relations.iter().zip(&corpus.ground_truth) {
            assert_eq!(corpus::distance(relation).unwrap(), row.distance);
        }
    }

    #[test]
    fn generated_relations_pass_validation() {
        let corpus = generate(&small_cfg(50, 4)).unwrap();
        for (relation, document) in corpus.relations.iter().zip(&corpus.documents) {
            relation.validate(Some(document)).unwrap();
        }
    }

    #[test]
    fn reserved_tokens_stay_out_of_argument_content() {
        let cfg = small_cfg(50, 5);
        let corpus = generate(&cfg).unwrap();
        let reserved: Vec<&str> = cfg
            .connective_lexicon
            .iter()
            .map(String::as_str)
            .chain([
                cfg.markers.begin.as_str(),
                cfg.markers.end.as_str(),
                cfg.markers.gap.as_str(),
            ])
            .collect();
        for (relation, document) in corpus.relations.iter().zip(&corpus.documents) {
            for idx in relation.arg1.iter().chain(relation.arg2.iter()) {
                let surface = document.surface(idx).unwrap();
                assert!(!reserved.contains(&surface), "reserved token {surface} inside argument");
            }
        }
    }

    #[test]
    fn oracle_recovers_ground_truth_spans() {
        let cfg = small_cfg(50, 6);
        let corpus = generate(&cfg).unwrap();
        for (document, row) in corpus.documents.iter().zip(&corpus.ground_truth) {
            let (arg1, arg2, conn) = oracle_label(&cfg, document).unwrap();
            assert_eq!(arg1, row.arg1);
            assert_eq!(arg2, row.arg2);
            assert_eq!(conn, row.conn);
        }
    }

    #[test]
    fn oracle_rejects_malformed_templates() {
        let cfg = small_cfg(1, 1);
        let doc = Document::new(
            "bad",
            vec!["w0001".into(), "because".into(), "w0002".into(), "<e>".into()],
        )
        .unwrap();
        assert!(matches!(oracle_label(&cfg, &doc), Err(Error::Validation(_))));
    }

    #[test]
    fn sampled_distances_match_requested_distribution() {
        let cfg = SynthConfig {
            n_instances: 2000,
            seed: 11,
            ..SynthConfig::default()
        };
        let corpus = generate(&cfg).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for row in &corpus.ground_truth {
            *counts.entry(row.distance).or_insert(0usize) += 1;
        }
        for (d, w) in &cfg.distance_distribution {
            let expected = w / cfg.distance_distribution.iter().map(|(_, w)| w).sum::<f64>();
            let observed = *counts.get(d).unwrap_or(&0) as f64 / 2000.0;
            assert!(
                (observed - expected).abs() < 0.02,
                "distance {d}: observed {observed:.3}, expected {expected:.3}"
            );
        }
    }

    #[test]
    fn oracle_predictions_score_perfectly_and_truncation_breaks_arg2() {
        let cfg = small_cfg(25, 8);
        let corpus = generate(&cfg).unwrap();
        let perfect: Vec<PredictionRecord> = corpus
            .ground_truth
            .iter()
            .map(|row| PredictionRecord {
                id: row.id,
                pred_arg1: row.arg1.clone(),
                pred_arg2: row.arg2.clone(),
                pred_conn: row.conn.clone(),
                gold_arg1: row.arg1.clone(),
                gold_arg2: row.arg2.clone(),
                gold_conn: row.conn.clone(),
                distance: row.distance,
            })
            .collect();
        let report = score::score(&perfect, ScoreOptions::default());
        assert_eq!(report.arg1.f1, 1.0);
        assert_eq!(report.arg2.f1, 1.0);
        assert_eq!(report.both.f1, 1.0);

        let truncated: Vec<PredictionRecord> = perfect
            .iter()
            .map(|rec| {
                let mut rec = rec.clone();
                let last = rec.pred_arg2.max().unwrap();
                rec.pred_arg2 = rec.pred_arg2.iter().filter(|&i| i != last).collect();
                rec
            })
            .collect();
        let report = score::score(&truncated, ScoreOptions::default());
        assert_eq!(report.arg1.f1, 1.0);
        assert_eq!(report.arg2.f1, 0.0);
        assert_eq!(report.both.f1, 0.0);
    }

    #[test]
    fn oracle_model_predicts_gold_spans_exactly() {
        use crate::net::{decode_spans, model_forward, predict_labels};
        let cfg = SynthConfig {
            n_instances: 40,
            vocab_size: 60,
            max_window: 40,
            distance_distribution: vec![(0, 0.3), (1, 0.3), (5, 0.2), (12, 0.2)],
            seed: 17,
            ..SynthConfig::default()
        };
        let corpus = generate(&cfg).unwrap();
        let vocab = Vocabulary::build(
            corpus
                .documents
                .iter()
                .flat_map(|d| d.tokens().iter().map(|t| t.surface.clone())),
        );
        let (model_cfg, params) = oracle_model(&cfg, &vocab, 40).unwrap();
        let mut rng = derive_rng(0, &[]);
        for (relation, document) in corpus.relations.iter().zip(&corpus.documents) {
            let inst =
                crate::corpus::build_instance(relation, document, &vocab, model_cfg.max_len)
                    .unwrap();
            let probs = model_forward(&params, &model_cfg, &inst, false, &mut rng).unwrap();
            let labels = predict_labels(&probs);
            let (arg1, arg2, conn) = decode_spans(&labels, &inst);
            assert_eq!(arg1, relation.arg1, "doc {}", relation.doc_id);
            assert_eq!(arg2, relation.arg2, "doc {}", relation.doc_id);
            assert_eq!(conn, relation.connective, "doc {}", relation.doc_id);
        }
    }

    #[test]
    fn emitted_files_load_back_through_the_corpus_reader() {
        let cfg = small_cfg(15, 9);
        let corpus = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        let loaded = corpus::load_corpus(dir.path().join("relations.jsonl"), dir.path().join("tokens")).unwrap();
        assert_eq!(loaded.relations, corpus.relations);
        assert_eq!(loaded.documents.len(), 15);
        let gt = read_ground_truth(dir.path().join("ground_truth.csv")).unwrap();
        assert_eq!(gt, corpus.ground_truth);
    }

    #[test]
    fn infeasible_distance_is_a_config_error() {
        let cfg = SynthConfig {
            max_window: 10,
            distance_distribution: vec![(8, 1.0)],
            ..small_cfg(1, 1)
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }
}
