//! Glue between the corpus, model, and scorer: building test items, running
//! inference to prediction records, the per-epoch evaluation observer, and
//! the CSV outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::corpus::{build_instance, distance, Document, Instance, Relation};
use crate::embed::Vocabulary;
use crate::error::{Error, Result};
use crate::net::{decode_spans, model_forward, predict_labels, ModelConfig, ModelParams};
use crate::numeric::derive_rng;
use crate::score::{score, PredictedSpans, PredictionRecord, ScoreOptions, ScoreReport};
use crate::train::{EpochObserver, EpochRecord, EpochScores};

/// A gold relation paired with its network input.
#[derive(Debug, Clone)]
pub struct TestItem {
    pub relation: Relation,
    pub instance: Instance,
}

/// Pair every explicit relation with an instance; oversized windows are
/// skipped with a warning and counted.
pub fn build_test_items(
    relations: &[Relation],
    documents: &BTreeMap<String, Document>,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<(Vec<TestItem>, usize)> {
    let mut items = Vec::new();
    let mut skipped = 0usize;
    for relation in relations.iter().filter(|r| r.is_explicit()) {
        let document = documents.get(&relation.doc_id).ok_or_else(|| {
            Error::Validation(format!(
                "relation {}: no document loaded for doc id {}",
                relation.id, relation.doc_id
            ))
        })?;
        match build_instance(relation, document, vocab, max_len) {
            Ok(instance) => items.push(TestItem {
                relation: relation.clone(),
                instance,
            }),
            Err(Error::OversizedWindow { len, max_len }) => {
                log::warn!(
                    "skipping relation {}: window of {len} tokens exceeds max_len {max_len}",
                    relation.id
                );
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((items, skipped))
}

/// Inference-mode forward + argmax + span decoding for every item.
pub fn predict_spans(
    params: &ModelParams,
    cfg: &ModelConfig,
    items: &[TestItem],
) -> Result<Vec<PredictedSpans>> {
    let mut rng = derive_rng(0, &[]);
    items
        .iter()
        .map(|item| {
            let probs = model_forward(params, cfg, &item.instance, false, &mut rng)?;
            let labels = predict_labels(&probs);
            let (arg1, arg2, conn) = decode_spans(&labels, &item.instance);
            Ok(PredictedSpans {
                id: item.relation.id,
                arg1,
                arg2,
                conn,
            })
        })
        .collect()
}

/// Predictions joined with gold spans and distances, ready for scoring.
pub fn prediction_records(
    params: &ModelParams,
    cfg: &ModelConfig,
    items: &[TestItem],
) -> Result<Vec<PredictionRecord>> {
    items
        .iter()
        .zip(predict_spans(params, cfg, items)?)
        .map(|(item, pred)| {
            Ok(PredictionRecord {
                id: item.relation.id,
                pred_arg1: pred.arg1,
                pred_arg2: pred.arg2,
                pred_conn: pred.conn,
                gold_arg1: item.relation.arg1.clone(),
                gold_arg2: item.relation.arg2.clone(),
                gold_conn: item.relation.connective.clone(),
                distance: distance(&item.relation)?,
            })
        })
        .collect()
}

/// Observer that evaluates the test set after every epoch.
pub struct TestSetEvaluator {
    cfg: ModelConfig,
    items: Vec<TestItem>,
    opts: ScoreOptions,
}

impl TestSetEvaluator {
    pub fn new(cfg: ModelConfig, items: Vec<TestItem>, opts: ScoreOptions) -> Self {
        TestSetEvaluator { cfg, items, opts }
    }

    pub fn evaluate_now(&self, params: &ModelParams) -> Result<(ScoreReport, Vec<PredictionRecord>)> {
        let records = prediction_records(params, &self.cfg, &self.items)?;
        Ok((score(&records, self.opts), records))
    }
}

impl EpochObserver for TestSetEvaluator {
    fn evaluate(&mut self, _epoch: usize, params: &ModelParams) -> Result<Option<EpochScores>> {
        let (report, _) = self.evaluate_now(params)?;
        Ok(Some(EpochScores {
            f1_arg1: report.arg1.f1,
            f1_arg2: report.arg2.f1,
            f1_both: report.both.f1,
        }))
    }
}

/// Write the per-epoch CSV (`epoch,train_loss,f1_arg1,f1_arg2,f1_both`).
pub fn write_epoch_csv(path: impl AsRef<Path>, records: &[EpochRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    writeln!(file, "{}", EpochRecord::CSV_HEADER).map_err(|e| Error::io(path, e))?;
    for record in records {
        writeln!(file, "{}", record.csv_row()).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingMatrix;
    use crate::numeric::salt;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn items_pair_relations_with_instances() {
        let synth_cfg = SynthConfig {
            n_instances: 10,
            vocab_size: 30,
            max_window: 25,
            seed: 3,
            ..SynthConfig::default()
        };
        let corpus = generate(&synth_cfg).unwrap();
        let documents: BTreeMap<String, Document> = corpus
            .documents
            .iter()
            .map(|d| (d.doc_id.clone(), d.clone()))
            .collect();
        let vocab = Vocabulary::build(
            documents
                .values()
                .flat_map(|d| d.tokens().iter().map(|t| t.surface.clone())),
        );
        let (items, skipped) = build_test_items(&corpus.relations, &documents, &vocab, 25).unwrap();
        assert_eq!(items.len(), 10);
        assert_eq!(skipped, 0);

        // A freshly initialized model produces valid (if poor) predictions.
        let cfg = ModelConfig {
            variant: crate::net::Variant::M1,
            embed_dim: 6,
            hidden: 4,
            max_len: 25,
            dropout_rate: 0.0,
            mid_dense_size: 4,
        };
        let emb = EmbeddingMatrix::random(&vocab, 6, 1);
        let mut rng = derive_rng(1, &[salt::PARAM_INIT]);
        let params = ModelParams::init(&cfg, emb, &mut rng).unwrap();
        let records = prediction_records(&params, &cfg, &items).unwrap();
        assert_eq!(records.len(), 10);
        for (record, row) in records.iter().zip(&corpus.ground_truth) {
            assert_eq!(record.distance, row.distance);
            assert_eq!(record.gold_arg1, row.arg1);
        }
    }

    #[test]
    fn oversized_items_are_skipped_and_counted() {
        let synth_cfg = SynthConfig {
            n_instances: 8,
            vocab_size: 20,
            max_window: 30,
            distance_distribution: vec![(0, 1.0), (12, 1.0)],
            seed: 5,
            ..SynthConfig::default()
        };
        let corpus = generate(&synth_cfg).unwrap();
        let documents: BTreeMap<String, Document> = corpus
            .documents
            .iter()
            .map(|d| (d.doc_id.clone(), d.clone()))
            .collect();
        let vocab = Vocabulary::build(
            documents
                .values()
                .flat_map(|d| d.tokens().iter().map(|t| t.surface.clone())),
        );
        // max_len 10 is below some windows: those get skipped.
        let (items, skipped) = build_test_items(&corpus.relations, &documents, &vocab, 10).unwrap();
        assert_eq!(items.len() + skipped, 8);
        assert!(skipped > 0);
    }

    #[test]
    fn epoch_csv_is_written_with_header() {
        let records = vec![
            EpochRecord {
                epoch: 1,
                train_loss: 1.25,
                f1_arg1: Some(0.5),
                f1_arg2: Some(0.25),
                f1_both: Some(0.125),
            },
            EpochRecord {
                epoch: 2,
                train_loss: 0.75,
                f1_arg1: None,
                f1_arg2: None,
                f1_both: None,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("epochs.csv");
        write_epoch_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epoch,train_loss,f1_arg1,f1_arg2,f1_both");
        assert_eq!(lines[1], "1,1.25,0.5,0.25,0.125");
        assert_eq!(lines[2], "2,0.75,,,");
    }
}
