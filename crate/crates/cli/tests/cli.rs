//! Exit codes, artifacts and help output of the `adnet` binary.

use std::path::Path;
use std::process::{Command, Output};

fn adnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ADNET_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
output_dir = "out"

[corpus]
dir = "data"

[model]
conv_filters = 6
lstm_hidden = 6
attention_dim = 6
dense_units = 6
max_epochs = 8
batch_size = 8
learning_rate = 0.003

[experiment]
seeds = [1]

[synth]
n_participants = 50
ad_fraction = 0.5
"#;

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

#[test]
fn help_documents_every_command() {
    let dir = tempfile::tempdir().unwrap();
    let top = adnet(&["--help"], dir.path());
    assert_eq!(top.status.code(), Some(0));
    for cmd in [
        "ingest", "synth", "train", "eval", "compare", "ablate", "predict", "stats",
    ] {
        assert!(stdout(&top).contains(cmd), "{cmd} missing from --help");
        let o = adnet(&[cmd, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd} --help");
    }
    let train = stdout(&adnet(&["train", "--help"], dir.path()));
    for flag in ["--seed", "--max-epochs", "--output-dir"] {
        assert!(train.contains(flag), "train --help lacks {flag}");
    }
    assert!(stdout(&adnet(&["predict", "--help"], dir.path())).contains("--model"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = workspace("[model]\nno_such_knob = 3\n");
    assert_eq!(adnet(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(adnet(&["train"], dir.path()).status.code(), Some(1));
    let o = adnet(&["train", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_knob"));
}

#[test]
fn missing_embeddings_exit_2_before_training() {
    let dir = workspace(&format!("{SMALL}\n[resources]\nembeddings = \"nowhere.txt\"\n"));
    assert!(adnet(&["synth", "run.toml"], dir.path()).status.success());
    let o = adnet(&["train", "run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nowhere.txt"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_corpus_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(adnet(&["stats", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(adnet(&["ingest", "nope"], dir.path()).status.code(), Some(2));
}

#[test]
fn divergence_exit_3() {
    let config = SMALL.replace("learning_rate = 0.003", "learning_rate = 1e300\noptimizer = \"sgd\"");
    let dir = workspace(&config);
    assert!(adnet(&["synth", "run.toml"], dir.path()).status.success());
    assert_eq!(adnet(&["train", "run.toml"], dir.path()).status.code(), Some(3));
}

#[test]
fn ingest_and_stats_write_artifacts() {
    let dir = workspace(SMALL);
    assert!(adnet(&["synth", "run.toml"], dir.path()).status.success());
    let o = adnet(&["ingest", "data", "--output-dir", "ing"], dir.path());
    assert!(o.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("ing/manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 100);
    let o = Command::new(env!("CARGO_BIN_EXE_adnet"))
        .args(["stats", "data"])
        .current_dir(dir.path())
        .env("ADNET_OUTPUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("Participants"));
    let csv = std::fs::read_to_string(dir.path().join("from-env/stats.csv")).unwrap();
    assert!(csv.starts_with("group,participants,transcripts,median_words\nAD,25,50,"));
}

#[test]
fn train_eval_predict() {
    let dir = workspace(SMALL);
    assert!(adnet(&["synth", "run.toml"], dir.path()).status.success());
    let o = adnet(&["train", "run.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.adnm", "training_log.csv", "run.json"] {
        assert!(dir.path().join("out").join(f).is_file(), "{f}");
    }
    let o = adnet(&["eval", "run.toml", "--model", "out/model.adnm"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let eval = std::fs::read_to_string(dir.path().join("out/eval.csv")).unwrap();
    assert!(eval.starts_with("approach,accuracy,precision,recall,f1,auc,tn,fp,fn,tp\nOURS-Att-w,"));
    assert!(dir.path().join("out/roc.csv").is_file());
    assert!(dir.path().join("out/predictions.csv").is_file());

    // Long, filler-free control speech from the same generator.
    let ct = dir.path().join("data/ct/S003-1.cha");
    let ct = if ct.exists() {
        ct
    } else {
        std::fs::read_dir(dir.path().join("data/ct"))
            .unwrap()
            .next()
            .unwrap()
            .unwrap()
            .path()
    };
    let o = adnet(
        &["predict", "run.toml", "--model", "out/model.adnm", ct.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let fields: Vec<&str> = line.split(',').collect();
    let p: f64 = fields[1].parse().unwrap();
    assert!(p < 0.5, "{line}");
    assert_eq!(fields[2], "CT");

    let o = adnet(
        &[
            "predict",
            "run.toml",
            "--model",
            "out/missing.adnm",
            ct.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_and_ablate_tables() {
    let config = SMALL.replace("max_epochs = 8", "max_epochs = 1");
    let dir = workspace(&config);
    assert!(adnet(&["synth", "run.toml"], dir.path()).status.success());
    let o = adnet(&["compare", "run.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        ["C-LSTM", "C-LSTM-Att", "C-LSTM-Att-w", "OURS", "OURS-Att", "OURS-Att-w"]
    );
    assert!(stdout(&o).contains("OURS-Att-w"));

    let o = adnet(&["ablate", "run.toml", "--seed", "4"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/ablation.csv")).unwrap();
    let rows: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().to_string(), it.next().unwrap().to_string())
        })
        .collect();
    let want = [
        ("OURS-Att-w", "7"),
        ("No Psych.", "3"),
        ("No Sent.", "6"),
        ("No Demo.", "5"),
    ];
    assert_eq!(rows.len(), 4);
    for ((n, d), (wn, wd)) in rows.iter().zip(want) {
        assert_eq!((n.as_str(), d.as_str()), (wn, wd));
    }
    let per_seed = std::fs::read_to_string(dir.path().join("out/ablation_per_seed.csv")).unwrap();
    assert!(per_seed.lines().skip(1).all(|l| l.split(',').nth(1) == Some("4")));
}
