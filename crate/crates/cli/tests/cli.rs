//! End-to-end tests driving the `arglab` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arglab"))
}

fn run_ok(args: &[&str]) -> Output {
    let output = bin().args(args).output().expect("spawn arglab");
    assert!(
        output.status.success(),
        "arglab {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn exit_code(args: &[&str]) -> i32 {
    bin()
        .args(args)
        .output()
        .expect("spawn arglab")
        .status
        .code()
        .expect("exit code")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn synth(dir: &Path, n: usize, seed: u64, prefix: &str) {
    run_ok(&[
        "synth",
        "--out",
        &path_str(dir),
        "--n",
        &n.to_string(),
        "--vocab-size",
        "50",
        "--max-window",
        "24",
        "--distances",
        "0:0.4,1:0.4,5:0.2",
        "--seed",
        &seed.to_string(),
        "--doc-prefix",
        prefix,
    ]);
}

fn write_config(path: &Path, data_dir: &Path, test_dir: &Path, out_dir: &Path, epochs: usize) {
    let config = format!(
        r#"
[model]
variant = "m1"
embed_dim = 8
hidden = 6
max_len = 24

[train]
epochs = {epochs}
batch_size = 8
seed = 11
eval_each_epoch = true

[embedding]
mode = "random"

[data]
train_relations = "{train_rel}"
train_tokens = "{train_tok}"
test_relations = "{test_rel}"
test_tokens = "{test_tok}"

[output]
dir = "{out}"
checkpoint_every = 3
"#,
        epochs = epochs,
        train_rel = path_str(&data_dir.join("relations.jsonl")),
        train_tok = path_str(&data_dir.join("tokens")),
        test_rel = path_str(&test_dir.join("relations.jsonl")),
        test_tok = path_str(&test_dir.join("tokens")),
        out = path_str(out_dir),
    );
    std::fs::write(path, config).unwrap();
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    synth(&a, 25, 9, "synth");
    synth(&b, 25, 9, "synth");
    for name in ["relations.jsonl", "ground_truth.csv"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
    // Manifests too: no timestamps, same fingerprints.
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );
}

#[test]
fn stats_reports_match_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    synth(&corpus, 40, 3, "synth");
    let out = dir.path().join("stats");
    run_ok(&[
        "stats",
        "--train",
        &path_str(&corpus.join("relations.jsonl")),
        "--tokens",
        &path_str(&corpus.join("tokens")),
        "--out",
        &path_str(&out),
    ]);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n_explicit_train"], 40);
    assert_eq!(stats["n_nonexplicit_train"], 0);

    let gt = std::fs::read_to_string(corpus.join("ground_truth.csv")).unwrap();
    let mut expected: std::collections::BTreeMap<String, usize> = Default::default();
    for line in gt.lines().skip(1) {
        let distance = line.split(',').nth(2).unwrap();
        *expected.entry(distance.to_string()).or_insert(0) += 1;
    }
    let histogram = stats["distance_histogram"].as_object().unwrap();
    assert_eq!(histogram.len(), expected.len());
    for (distance, count) in expected {
        assert_eq!(histogram[&distance], count, "count at distance {distance}");
    }
    assert!(out.join("manifest.json").is_file());
}

#[test]
fn train_predict_score_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    let test_dir = dir.path().join("test");
    synth(&train_dir, 30, 1, "train");
    synth(&test_dir, 10, 2, "test");

    let config = dir.path().join("config.toml");
    let run1 = dir.path().join("run1");
    write_config(&config, &train_dir, &test_dir, &run1, 4);
    run_ok(&["train", "--config", &path_str(&config)]);
    for name in ["epochs.csv", "checkpoint.ckpt", "vocab.tsv", "manifest.json"] {
        assert!(run1.join(name).is_file(), "missing {name}");
    }

    // Identical config + seed => identical epoch CSV.
    let run2 = dir.path().join("run2");
    run_ok(&["train", "--config", &path_str(&config), "--out", &path_str(&run2)]);
    assert_eq!(
        std::fs::read(run1.join("epochs.csv")).unwrap(),
        std::fs::read(run2.join("epochs.csv")).unwrap(),
        "reruns diverged"
    );

    // Prediction is byte-deterministic.
    let pred1 = dir.path().join("pred1");
    let pred2 = dir.path().join("pred2");
    for pred in [&pred1, &pred2] {
        run_ok(&[
            "predict",
            "--checkpoint",
            &path_str(&run1.join("checkpoint.ckpt")),
            "--relations",
            &path_str(&test_dir.join("relations.jsonl")),
            "--tokens",
            &path_str(&test_dir.join("tokens")),
            "--out",
            &path_str(pred),
        ]);
    }
    assert_eq!(
        std::fs::read(pred1.join("predictions.jsonl")).unwrap(),
        std::fs::read(pred2.join("predictions.jsonl")).unwrap()
    );

    // Scoring emits the machine-readable reports.
    let scored = dir.path().join("scored");
    run_ok(&[
        "score",
        "--pred",
        &path_str(&pred1.join("predictions.jsonl")),
        "--gold",
        &path_str(&test_dir.join("relations.jsonl")),
        "--out",
        &path_str(&scored),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scored.join("score.json")).unwrap()).unwrap();
    let f1 = report["both"]["f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    let distance_csv = std::fs::read_to_string(scored.join("distance.csv")).unwrap();
    assert!(distance_csv.starts_with("distance,count,f1_arg1,f1_arg2,f1_both"));

    // Resume from the epoch-3 checkpoint reproduces the tail of the CSV.
    let resumed = dir.path().join("resumed");
    run_ok(&[
        "train",
        "--config",
        &path_str(&config),
        "--resume",
        &path_str(&run1.join("checkpoint_epoch_003.ckpt")),
        "--out",
        &path_str(&resumed),
    ]);
    let full: Vec<String> = std::fs::read_to_string(run1.join("epochs.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let tail: Vec<String> = std::fs::read_to_string(resumed.join("epochs.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(tail[0], full[0], "headers differ");
    assert_eq!(&tail[1..], &full[4..], "resumed epochs diverged");
}

#[test]
fn oracle_checkpoint_predicts_gold_and_scores_one() {
    use arglab_core::checkpoint::{save, Checkpoint};
    use arglab_core::embed::Vocabulary;
    use arglab_core::synth::{generate, oracle_model, write_corpus, SynthConfig};

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let synth_cfg = SynthConfig {
        n_instances: 20,
        vocab_size: 40,
        max_window: 30,
        seed: 21,
        ..SynthConfig::default()
    };
    let corpus = generate(&synth_cfg).unwrap();
    write_corpus(&corpus, &data).unwrap();
    let vocab = Vocabulary::build(
        corpus
            .documents
            .iter()
            .flat_map(|d| d.tokens().iter().map(|t| t.surface.clone())),
    );
    let (model_cfg, params) = oracle_model(&synth_cfg, &vocab, 30).unwrap();
    let ckpt_path = dir.path().join("oracle.ckpt");
    save(
        &ckpt_path,
        &Checkpoint {
            model_cfg,
            vocab,
            params,
            train: None,
        },
    )
    .unwrap();

    let pred = dir.path().join("pred");
    run_ok(&[
        "predict",
        "--checkpoint",
        &path_str(&ckpt_path),
        "--relations",
        &path_str(&data.join("relations.jsonl")),
        "--tokens",
        &path_str(&data.join("tokens")),
        "--out",
        &path_str(&pred),
    ]);
    let scored = dir.path().join("scored");
    run_ok(&[
        "score",
        "--pred",
        &path_str(&pred.join("predictions.jsonl")),
        "--gold",
        &path_str(&data.join("relations.jsonl")),
        "--out",
        &path_str(&scored),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scored.join("score.json")).unwrap()).unwrap();
    assert_eq!(report["arg1"]["f1"], 1.0);
    assert_eq!(report["arg2"]["f1"], 1.0);
    assert_eq!(report["both"]["f1"], 1.0);
    assert_eq!(report["both"]["matched"], 20);
}

#[test]
fn gradcheck_exits_clean() {
    for variant in ["m1", "m2"] {
        let output = run_ok(&["gradcheck", "--variant", variant, "--samples", "60"]);
        let stdout = String::from_utf8_lossy(&output.stdout);
        assert!(stdout.contains("gradient check passed"), "{stdout}");
    }
}

#[test]
fn error_exit_codes_are_distinct() {
    // I/O failure: missing input file.
    assert_eq!(exit_code(&["stats", "--train", "/nonexistent/file.jsonl"]), 6);

    // Parse failure: malformed relation record.
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"DocID\": \"d\"\n").unwrap();
    assert_eq!(exit_code(&["stats", "--train", &path_str(&bad)]), 3);

    // Config failure: pretrained embedding dimension mismatch.
    let corpus = dir.path().join("corpus");
    synth(&corpus, 10, 4, "synth");
    let vectors = dir.path().join("vectors.txt");
    std::fs::write(&vectors, "w0001 0.5 0.5\n").unwrap();
    let config = dir.path().join("config.toml");
    let out = dir.path().join("run");
    std::fs::write(
        &config,
        format!(
            r#"
[model]
variant = "m1"
embed_dim = 8
hidden = 6
max_len = 24

[train]
epochs = 1
batch_size = 8
eval_each_epoch = false

[embedding]
mode = "pretrained"
path = "{vectors}"

[data]
train_relations = "{rel}"
train_tokens = "{tok}"

[output]
dir = "{out}"
"#,
            vectors = path_str(&vectors),
            rel = path_str(&corpus.join("relations.jsonl")),
            tok = path_str(&corpus.join("tokens")),
            out = path_str(&out),
        ),
    )
    .unwrap();
    let output = bin().args(["train", "--config", &path_str(&config)]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dimensions"), "stderr: {stderr}");

    // Validation failure: scoring a prediction for an unknown relation.
    let pred = dir.path().join("pred.jsonl");
    std::fs::write(&pred, "{\"ID\":999,\"Arg1\":[0],\"Arg2\":[2],\"Connective\":[1]}\n").unwrap();
    assert_eq!(
        exit_code(&[
            "score",
            "--pred",
            &path_str(&pred),
            "--gold",
            &path_str(&corpus.join("relations.jsonl")),
        ]),
        4
    );
}
