use std::path::{Path, PathBuf};

use arglab_core::checkpoint::{self, Checkpoint, TrainState};
use arglab_core::corpus::{self, Instance};
use arglab_core::embed::{EmbeddingMatrix, Vocabulary};
use arglab_core::net::ModelParams;
use arglab_core::numeric::{derive_rng, salt};
use arglab_core::pipeline::{build_test_items, write_epoch_csv, TestSetEvaluator};
use arglab_core::score::ScoreOptions;
use arglab_core::train::{EpochObserver, EpochRecord, EpochScores, Trainer, TrainerView};
use arglab_core::{Error, Result};

use crate::config::{load_file_config, require, EmbeddingMode, ResolvedRun};
use crate::manifest::Manifest;
use crate::CommonArgs;

/// Per-epoch evaluation plus periodic checkpointing.
struct RunObserver {
    evaluator: Option<TestSetEvaluator>,
    checkpoint_every: Option<usize>,
    out_dir: PathBuf,
    vocab: Vocabulary,
}

impl EpochObserver for RunObserver {
    fn evaluate(
        &mut self,
        epoch: usize,
        params: &ModelParams,
    ) -> Result<Option<EpochScores>> {
        match &mut self.evaluator {
            Some(evaluator) => evaluator.evaluate(epoch, params),
            None => Ok(None),
        }
    }

    fn epoch_end(&mut self, view: &TrainerView<'_>, record: &EpochRecord) -> Result<()> {
        log::info!(
            "epoch {}: train_loss {:.6}{}",
            record.epoch,
            record.train_loss,
            record
                .f1_both
                .map(|f1| format!(", f1_both {f1:.4}"))
                .unwrap_or_default()
        );
        if let Some(every) = self.checkpoint_every {
            if view.completed_epochs.is_multiple_of(every) && view.completed_epochs < view.train_cfg.epochs {
                let path = self
                    .out_dir
                    .join(format!("checkpoint_epoch_{:03}.ckpt", view.completed_epochs));
                checkpoint::save(&path, &snapshot(view, &self.vocab))?;
            }
        }
        Ok(())
    }
}

fn snapshot(view: &TrainerView<'_>, vocab: &Vocabulary) -> Checkpoint {
    Checkpoint {
        model_cfg: view.model_cfg.clone(),
        vocab: vocab.clone(),
        params: view.params.clone(),
        train: Some(TrainState {
            train_cfg: view.train_cfg.clone(),
            adam: view.adam.clone(),
            rng: view.rng.clone(),
            completed_epochs: view.completed_epochs,
        }),
    }
}

pub fn run(common: &CommonArgs, resume: Option<PathBuf>) -> Result<()> {
    let config_path = common
        .config()
        .ok_or_else(|| Error::Config("train requires --config".into()))?;
    let file_cfg = load_file_config(config_path)?;

    let out_dir = common
        .out()
        .map(Path::to_path_buf)
        .or(file_cfg.output.dir.clone())
        .ok_or_else(|| Error::Config("train needs an output directory (--out or [output] dir)".into()))?;
    super::ensure_out_dir(&out_dir)?;

    let mut manifest = Manifest::new("train").with_config(Some(config_path))?;

    // Data.
    let train_relations_path = require(&file_cfg.data.train_relations, "[data] train_relations")?;
    let train_tokens_path = require(&file_cfg.data.train_tokens, "[data] train_tokens")?;
    manifest.add_input(&train_relations_path)?;
    manifest.add_input_dir(&train_tokens_path)?;
    let train_corpus = corpus::load_corpus(&train_relations_path, &train_tokens_path)?;
    let explicit = corpus::filter_explicit(&train_corpus.relations);
    if explicit.is_empty() {
        return Err(Error::Validation("training corpus has no explicit relations".into()));
    }

    // Model, trainer, and vocabulary: fresh or resumed.
    let (mut trainer, vocab) = match resume {
        Some(ckpt_path) => {
            manifest.add_input(&ckpt_path)?;
            let ckpt = checkpoint::load(&ckpt_path)?;
            let state = ckpt.train.ok_or_else(|| {
                Error::Config(format!(
                    "{}: checkpoint has no training state; it cannot be resumed",
                    ckpt_path.display()
                ))
            })?;
            let mut train_cfg = state.train_cfg.clone();
            if let Some(workers) = common.workers() {
                train_cfg.workers = workers;
            }
            log::info!(
                "resuming at epoch {} of {}",
                state.completed_epochs + 1,
                train_cfg.epochs
            );
            (
                Trainer::resume(
                    ckpt.params,
                    state.adam,
                    ckpt.model_cfg,
                    train_cfg,
                    state.rng,
                    state.completed_epochs,
                ),
                ckpt.vocab,
            )
        }
        None => {
            let model_cfg = file_cfg.model.resolve()?;
            let mut train_cfg = file_cfg.train.clone().unwrap_or_default();
            if let Some(seed) = common.seed() {
                train_cfg.seed = seed;
            }
            if let Some(workers) = common.workers() {
                train_cfg.workers = workers;
            }
            train_cfg.validate()?;

            let vocab = Vocabulary::build(
                train_corpus
                    .documents
                    .values()
                    .flat_map(|d| d.tokens().iter().map(|t| t.surface.clone())),
            );
            let (mode, vector_path) = file_cfg.embedding.resolve()?;
            let embeddings = match mode {
                EmbeddingMode::Random => {
                    EmbeddingMatrix::random(&vocab, model_cfg.embed_dim, train_cfg.seed)
                }
                EmbeddingMode::Pretrained => {
                    let path = vector_path.expect("checked by resolve");
                    manifest.add_input(&path)?;
                    let (matrix, coverage) = EmbeddingMatrix::from_pretrained(
                        &path,
                        &vocab,
                        model_cfg.embed_dim,
                        train_cfg.seed,
                    )?;
                    log::info!(
                        "pretrained vectors cover {coverage} of {} vocabulary words",
                        vocab.size() - 1
                    );
                    (matrix, coverage).0
                }
            };
            let mut rng = derive_rng(train_cfg.seed, &[salt::PARAM_INIT]);
            let params = ModelParams::init(&model_cfg, embeddings, &mut rng)?;
            (Trainer::new(params, model_cfg, train_cfg)?, vocab)
        }
    };

    let max_len = trainer.model_cfg.max_len;
    let built = corpus::build_instances(&train_corpus.relations, &train_corpus.documents, &vocab, max_len)?;
    if built.skipped > 0 {
        log::warn!("skipped {} oversized training windows", built.skipped);
    }
    let train_instances: Vec<Instance> = built.items.into_iter().map(|(_, i)| i).collect();

    let evaluator = if trainer.train_cfg.eval_each_epoch {
        let test_relations_path = file_cfg.data.test_relations.clone().ok_or_else(|| {
            Error::Config(
                "eval_each_epoch requires [data] test_relations (or set eval_each_epoch = false)"
                    .into(),
            )
        })?;
        let test_tokens_path = file_cfg
            .data
            .test_tokens
            .clone()
            .unwrap_or_else(|| train_tokens_path.clone());
        manifest.add_input(&test_relations_path)?;
        let test_corpus = corpus::load_corpus(&test_relations_path, &test_tokens_path)?;
        let (items, skipped) =
            build_test_items(&test_corpus.relations, &test_corpus.documents, &vocab, max_len)?;
        if skipped > 0 {
            log::warn!("skipped {skipped} oversized test windows");
        }
        let opts = ScoreOptions {
            conn_into_arg2: file_cfg.score.conn_into_arg2.unwrap_or(false),
        };
        Some(TestSetEvaluator::new(trainer.model_cfg.clone(), items, opts))
    } else {
        None
    };

    let mut observer = RunObserver {
        evaluator,
        checkpoint_every: file_cfg.output.checkpoint_every,
        out_dir: out_dir.clone(),
        vocab: vocab.clone(),
    };
    let records = trainer.train(&train_instances, &mut observer)?;

    write_epoch_csv(out_dir.join("epochs.csv"), &records)?;
    vocab.save(out_dir.join("vocab.tsv"))?;
    let final_view = TrainerView {
        params: &trainer.params,
        adam: &trainer.adam,
        rng: &trainer.rng,
        model_cfg: &trainer.model_cfg,
        train_cfg: &trainer.train_cfg,
        completed_epochs: trainer.completed_epochs,
    };
    checkpoint::save(out_dir.join("checkpoint.ckpt"), &snapshot(&final_view, &vocab))?;

    manifest.seed = Some(trainer.train_cfg.seed);
    manifest.resolved = ResolvedRun {
        model: Some(trainer.model_cfg.clone()),
        train: Some(trainer.train_cfg.clone()),
        embedding_mode: Some(file_cfg.embedding.mode.clone()),
        synth: None,
    };
    for name in ["epochs.csv", "checkpoint.ckpt", "vocab.tsv"] {
        manifest.add_output(name);
    }
    manifest.write(&out_dir)?;

    if let Some(last) = records.last() {
        println!(
            "trained {} epochs on {} instances; final train_loss {}{}",
            trainer.completed_epochs,
            train_instances.len(),
            last.train_loss,
            last.f1_both
                .map(|f1| format!(", f1_both {f1:.4}"))
                .unwrap_or_default()
        );
    } else {
        println!("nothing to do: checkpoint already at the configured epoch count");
    }
    println!("outputs in {}", out_dir.display());
    Ok(())
}
