use arglab_core::synth::{generate, write_corpus, SynthConfig};
use arglab_core::{Error, Result};

use crate::config::{load_file_config, parse_distance_spec, ResolvedRun};
use crate::manifest::Manifest;
use crate::CommonArgs;

pub fn run(
    common: &CommonArgs,
    n: Option<usize>,
    vocab_size: Option<usize>,
    max_window: Option<usize>,
    distances: Option<String>,
    doc_prefix: Option<String>,
) -> Result<()> {
    let out = common
        .out()
        .ok_or_else(|| Error::Config("synth requires --out".into()))?;
    let file_cfg = common.config().map(load_file_config).transpose()?.unwrap_or_default();

    let mut cfg = SynthConfig::default();
    if let Some(section) = &file_cfg.synth {
        section.apply(&mut cfg);
    }
    if let Some(v) = n {
        cfg.n_instances = v;
    }
    if let Some(v) = vocab_size {
        cfg.vocab_size = v;
    }
    if let Some(v) = max_window {
        cfg.max_window = v;
    }
    if let Some(spec) = &distances {
        cfg.distance_distribution = parse_distance_spec(spec)?;
    }
    if let Some(prefix) = doc_prefix {
        cfg.doc_prefix = prefix;
    }
    if let Some(seed) = common.seed() {
        cfg.seed = seed;
    }

    let corpus = generate(&cfg)?;
    super::ensure_out_dir(out)?;
    write_corpus(&corpus, out)?;

    let mut manifest = Manifest::new("synth").with_config(common.config())?;
    manifest.seed = Some(cfg.seed);
    manifest.resolved = ResolvedRun {
        synth: Some(cfg.clone()),
        ..ResolvedRun::default()
    };
    for name in ["relations.jsonl", "ground_truth.csv", "tokens/"] {
        manifest.add_output(name);
    }
    manifest.write(out)?;
    println!(
        "wrote {} instances to {} (relations.jsonl, tokens/, ground_truth.csv)",
        corpus.relations.len(),
        out.display()
    );
    Ok(())
}
