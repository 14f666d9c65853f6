//! Hot-path benchmarks at the desk-scale configuration (T = 60, d = 32,
//! h = 16): forward pass, batch backward, optimizer step, and corpus
//! generation.

use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use arglab_core::corpus::{build_instances, Document, Instance};
use arglab_core::embed::{EmbeddingMatrix, Vocabulary};
use arglab_core::net::{model_forward, ModelConfig, ModelParams, Variant};
use arglab_core::numeric::{derive_rng, salt};
use arglab_core::synth::{generate, SynthConfig};
use arglab_core::train::{adam_step, backward, AdamState, BackwardOptions};

struct Fixture {
    cfg: ModelConfig,
    params: ModelParams,
    instances: Vec<Instance>,
}

fn fixture() -> Fixture {
    let synth_cfg = SynthConfig {
        n_instances: 64,
        vocab_size: 200,
        max_window: 60,
        seed: 12,
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
    let cfg = ModelConfig {
        variant: Variant::M1,
        embed_dim: 32,
        hidden: 16,
        max_len: 60,
        dropout_rate: 0.0,
        mid_dense_size: 32,
    };
    let built = build_instances(&corpus.relations, &documents, &vocab, 60).unwrap();
    let instances: Vec<Instance> = built.items.into_iter().map(|(_, i)| i).collect();
    let embeddings = EmbeddingMatrix::random(&vocab, cfg.embed_dim, 12);
    let mut rng = derive_rng(12, &[salt::PARAM_INIT]);
    let params = ModelParams::init(&cfg, embeddings, &mut rng).unwrap();
    Fixture {
        cfg,
        params,
        instances,
    }
}

fn bench_forward(c: &mut Criterion) {
    let f = fixture();
    let mut rng = derive_rng(1, &[1]);
    c.bench_function("model_forward_m1_t60", |b| {
        b.iter(|| {
            let probs =
                model_forward(&f.params, &f.cfg, black_box(&f.instances[0]), false, &mut rng)
                    .unwrap();
            black_box(probs)
        })
    });
}

fn bench_backward(c: &mut Criterion) {
    let f = fixture();
    let batch: Vec<&Instance> = f.instances.iter().take(32).collect();
    let opts = BackwardOptions::default();
    c.bench_function("backward_batch32_t60", |b| {
        b.iter(|| {
            let (loss, grads) = backward(&f.params, &f.cfg, black_box(&batch), &opts).unwrap();
            black_box((loss, grads))
        })
    });
}

fn bench_adam(c: &mut Criterion) {
    let f = fixture();
    let batch: Vec<&Instance> = f.instances.iter().take(32).collect();
    let (_, grads) = backward(&f.params, &f.cfg, &batch, &BackwardOptions::default()).unwrap();
    c.bench_function("adam_step", |b| {
        let mut params = f.params.clone();
        let mut state = AdamState::new(&params, Default::default(), false);
        b.iter(|| {
            adam_step(&mut state, &mut params, black_box(&grads));
        })
    });
}

fn bench_synth(c: &mut Criterion) {
    let cfg = SynthConfig {
        n_instances: 100,
        seed: 5,
        ..SynthConfig::default()
    };
    c.bench_function("synth_generate_100", |b| {
        b.iter(|| black_box(generate(black_box(&cfg)).unwrap()))
    });
}

criterion_group!(benches, bench_forward, bench_backward, bench_adam, bench_synth);
criterion_main!(benches);
