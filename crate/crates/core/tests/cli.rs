use std::io::Cursor;
use std::path::Path;

use serde_json::Value;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_with_input(args: &[&str], input: &str) -> Output {
    let argv = std::iter::once("dagact").chain(args.iter().copied()).map(std::ffi::OsString::from);
    let mut stdin = Cursor::new(input.as_bytes().to_vec());
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = dagact::cli::run(argv, &mut stdin, &mut stdout, &mut stderr);
    Output { code, stdout: String::from_utf8(stdout).unwrap(), stderr: String::from_utf8(stderr).unwrap() }
}

fn run(args: &[&str]) -> Output {
    run_with_input(args, "")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small synthetic splits under `dir`.
fn synth(dir: &Path) {
    let out = run(&[
        "gen-synth",
        "--out-dir",
        p(dir),
        "--split",
        "30,6,6",
        "--conversations",
        "42",
        "--min-length",
        "3",
        "--max-length",
        "5",
        "--seed",
        "4",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().count(), 3);
}

fn train_small(dir: &Path, arch: &str, epochs: &str, extra: &[&str]) -> Output {
    let (train, dev, ckpt) = (dir.join("train.jsonl"), dir.join("dev.jsonl"), dir.join(format!("{arch}.json")));
    let mut args = vec![
        "train",
        "--data",
        p(&train),
        "--dev",
        p(&dev),
        "--arch",
        arch,
        "--out",
        p(&ckpt),
        "--emb-dim",
        "6",
        "--utterance-units",
        "6",
        "--context-units",
        "6",
        "--cnn-filters",
        "6",
        "--max-epochs",
        epochs,
        "--dropout",
        "0",
        "--lr",
        "0.01",
        "--seed",
        "7",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn diagnose_prints_sink_and_oracle() {
    let out = run(&["diagnose", "--family", "alternating", "--length", "10", "--rule", "sum"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let sink: f64 = out.stdout.lines().find_map(|l| l.strip_prefix("sink magnitude ")).unwrap().parse().unwrap();
    assert!((sink - 143.0).abs() <= 0.15, "{sink}");
    assert!(out.stdout.lines().any(|l| l == "oracle 143"));

    let out = run(&["diagnose", "--length", "12", "--rule", "max", "--json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((v["sink_magnitude"].as_f64().unwrap() - 12.0).abs() <= 0.01);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 12);
}

#[test]
fn train_eval_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let out = train_small(dir.path(), "bilstm-daglstm", "3", &[]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let epochs: Vec<&str> = out.stdout.lines().filter(|l| l.starts_with("epoch ")).collect();
    assert_eq!(epochs.len(), 3);
    let best: f64 = out.stdout.lines().last().unwrap().rsplit(' ').next().unwrap().parse().unwrap();

    let ckpt = dir.path().join("bilstm-daglstm.json");
    let csv = dir.path().join("confusion.csv");
    let out = run(&["eval", "--model", p(&ckpt), "--data", p(&dir.path().join("dev.jsonl")), "--csv", p(&csv)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let report: Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(report["macro_f1"].as_f64().unwrap(), best);
    let keys: Vec<&String> = report["per_class_f1"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["Accept", "Counteroffer", "Offer", "Other", "Refusal"]);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("gold\\predicted,Accept,"));

    let out = run(&["eval", "--model", p(&ckpt), "--data", p(&dir.path().join("test.jsonl")), "--format", "table"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().nth(1).unwrap().starts_with("bilstm-daglstm"));

    let line = r#"{"id":"x","utterances":[{"participant":"a","text":"for wood ?","label":"Preference"},{"participant":"b","text":"ok"}]}"#;
    let out = run_with_input(&["predict", "--model", p(&ckpt)], &format!("{line}\n"));
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(out.stdout.trim()).unwrap();
    let utts = v["utterances"].as_array().unwrap();
    assert_eq!(utts[0]["label"], "Preference");
    assert!(utts[1].get("label").is_none());
    for u in utts {
        let label = u["predicted"].as_str().unwrap();
        assert!(["Accept", "Counteroffer", "Offer", "Other", "Refusal"].contains(&label));
    }

    let out = run(&["predict", "--model", p(&ckpt)]);
    assert_eq!((out.code, out.stdout.as_str()), (0, ""));
}

#[test]
fn every_architecture_trains_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for arch in ["cnn-cnn", "cnn-lstm", "bilstm-none", "bilstm-lstm"] {
        let out = train_small(dir.path(), arch, "1", &["--embedding-mode", "fixed"]);
        assert_eq!(out.code, 0, "{arch}: {}", out.stderr);
    }
    let out = train_small(dir.path(), "bilstm-lstm", "1", &["--precision", "32", "--quiet"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("best_epoch 1 "));
}

#[test]
fn pretrained_embeddings_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let emb = dir.path().join("emb.txt");
    std::fs::write(&emb, "wood 0.1 0.2 0.3\nclay -0.1 0.0 0.4\nok 0.5 0.5 0.5\n").unwrap();
    let out = train_small(dir.path(), "bilstm-none", "1", &["--emb", p(&emb)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
}

#[test]
fn hpsearch_ranks_trials_and_saves_the_best() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let best = dir.path().join("best.json");
    let args = |jobs: &'static str| {
        vec![
            "hpsearch".to_string(),
            "--data".into(),
            p(&dir.path().join("train.jsonl")).into(),
            "--dev".into(),
            p(&dir.path().join("dev.jsonl")).into(),
            "--arch".into(),
            "bilstm-none".into(),
            "--emb-dim".into(),
            "4".into(),
            "--trials".into(),
            "2".into(),
            "--jobs".into(),
            jobs.into(),
            "--max-epochs".into(),
            "1".into(),
            "--out".into(),
            p(&best).into(),
            "--seed".into(),
            "3".into(),
        ]
    };
    let two = args("2");
    let out = run(&two.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows: Vec<Value> = out.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["dev_macro_f1"].as_f64().unwrap() >= rows[1]["dev_macro_f1"].as_f64().unwrap());
    assert!(best.exists());
    let one = args("1");
    let again = run(&one.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&[]).code, 1);
    assert_eq!(run(&["train", "--arch", "bilstm-gru"]).code, 1);
    assert_eq!(run(&["diagnose", "--length", "0"]).code, 1);
    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("gen-synth"));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run(&["eval", "--model", p(&missing), "--data", p(&missing)]);
    assert_eq!(out.code, 2);
    assert!(!out.stderr.is_empty());

    synth(dir.path());
    let out = train_small(dir.path(), "bilstm-none", "1", &[]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let ckpt = dir.path().join("bilstm-none.json");
    let out = run_with_input(&["predict", "--model", p(&ckpt)], "{not json\n");
    assert_eq!(out.code, 2);

    let text = std::fs::read_to_string(&ckpt).unwrap().replacen("\"1.0\"", "\"2.0\"", 1);
    std::fs::write(&ckpt, text).unwrap();
    let out = run(&["eval", "--model", p(&ckpt), "--data", p(&dir.path().join("dev.jsonl"))]);
    assert_eq!(out.code, 2);
}

#[test]
fn gen_synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for path in [&a, &b] {
        let out = run(&["gen-synth", "--out", p(path), "--conversations", "20", "--seed", "9"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 20);
}
