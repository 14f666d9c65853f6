use std::collections::HashSet;
use std::path::PathBuf;

use arglab_core::corpus;
use arglab_core::{Error, Result};

use crate::config::load_file_config;
use crate::manifest::Manifest;
use crate::CommonArgs;

pub fn run(
    common: &CommonArgs,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    tokens: Option<PathBuf>,
) -> Result<()> {
    let file_cfg = common.config().map(load_file_config).transpose()?.unwrap_or_default();
    let train = train.or(file_cfg.data.train_relations.clone());
    let test = test.or(file_cfg.data.test_relations.clone());
    let tokens = tokens.or(file_cfg.data.train_tokens.clone());
    if train.is_none() && test.is_none() {
        return Err(Error::Config(
            "stats needs at least one of --train or --test (or [data] entries in the config)".into(),
        ));
    }

    let mut manifest = Manifest::new("stats").with_config(common.config())?;
    let mut load = |path: &Option<PathBuf>| -> Result<Vec<corpus::Relation>> {
        match path {
            None => Ok(Vec::new()),
            Some(path) => {
                manifest.add_input(path)?;
                corpus::load_relations(path)
            }
        }
    };
    let train_relations = load(&train)?;
    let test_relations = load(&test)?;

    if let Some(tokens_dir) = &tokens {
        let doc_ids: HashSet<String> = train_relations
            .iter()
            .chain(&test_relations)
            .map(|r| r.doc_id.clone())
            .collect();
        let documents = corpus::load_documents(tokens_dir, &doc_ids)?;
        for relation in train_relations.iter().chain(&test_relations) {
            relation.validate(documents.get(&relation.doc_id))?;
        }
    }

    let stats = corpus::corpus_stats(&train_relations, &test_relations)?;
    println!("{stats}");

    if let Some(out) = common.out() {
        super::ensure_out_dir(out)?;
        super::write_json(&out.join("stats.json"), &stats)?;
        manifest.add_output("stats.json");
        manifest.write(out)?;
    }
    Ok(())
}
