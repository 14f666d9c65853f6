use std::path::PathBuf;

use arglab_core::checkpoint;
use arglab_core::corpus;
use arglab_core::pipeline::{build_test_items, predict_spans};
use arglab_core::score::write_predictions;
use arglab_core::{Error, Result};

use crate::manifest::Manifest;
use crate::CommonArgs;

pub fn run(
    common: &CommonArgs,
    checkpoint_path: PathBuf,
    relations: PathBuf,
    tokens: PathBuf,
) -> Result<()> {
    let out_dir = common
        .out()
        .ok_or_else(|| Error::Config("predict requires --out".into()))?;
    let mut manifest = Manifest::new("predict").with_config(common.config())?;
    manifest.add_input(&checkpoint_path)?;
    manifest.add_input(&relations)?;
    manifest.add_input_dir(&tokens)?;

    let ckpt = checkpoint::load(&checkpoint_path)?;
    let corpus = corpus::load_corpus(&relations, &tokens)?;
    let (items, skipped) = build_test_items(
        &corpus.relations,
        &corpus.documents,
        &ckpt.vocab,
        ckpt.model_cfg.max_len,
    )?;
    if skipped > 0 {
        log::warn!("skipped {skipped} oversized windows; they get no prediction");
    }
    let predictions = predict_spans(&ckpt.params, &ckpt.model_cfg, &items)?;

    super::ensure_out_dir(out_dir)?;
    let pred_path = out_dir.join("predictions.jsonl");
    write_predictions(&pred_path, &predictions)?;
    manifest.add_output("predictions.jsonl");
    manifest.write(out_dir)?;
    println!(
        "wrote {} predictions to {}",
        predictions.len(),
        pred_path.display()
    );
    Ok(())
}
