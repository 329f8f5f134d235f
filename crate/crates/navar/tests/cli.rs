//! End-to-end CLI contract: flows, file formats, and exit codes
//! (0 success, 1 runtime failure, 2 usage error).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn navar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_navar"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, contents).unwrap();
    p
}

const TINY_CFG: &str = "backbone=mlp\nk=2\nhidden_units=6\nbatch_size=32\n\
                        learning_rate=0.002\nlambda=0.05\nmu=0.0001\nepochs=5\nseed=1\n";

#[test]
fn generate_toy3_default_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = navar(dir.path(), &["generate", "--scm", "toy3", "--seed", "3", "--out", "a.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let data = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = data.lines().collect();
    assert_eq!(lines.len(), 4001); // header + 4000 rows
    assert_eq!(lines[0], "x1,x2,x3");
    assert_eq!(lines[1].split(',').count(), 3);

    let truth = fs::read_to_string(dir.path().join("a.truth.csv")).unwrap();
    let tlines: Vec<&str> = truth.lines().collect();
    assert_eq!(tlines.len(), 4); // header + 3 rows
    assert_eq!(tlines[1], "0,0,1");
    assert_eq!(tlines[2], "1,1,1");
    assert_eq!(tlines[3], "1,1,0");

    let out2 = navar(dir.path(), &["generate", "--scm", "toy3", "--seed", "3", "--out", "b.csv"]);
    assert_eq!(code(&out2), 0);
    let data2 = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(data, data2, "same seed must give identical files");
}

#[test]
fn unknown_scm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = navar(dir.path(), &["generate", "--scm", "toy7", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = navar(dir.path(), &["train", "--out-model", "m.ckpt"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn train_writes_checkpoint_and_report() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "150", "--seed", "1", "--out", "d.csv"]);
    write(dir.path(), "run.cfg", TINY_CFG);
    let out = navar(
        dir.path(),
        &["train", "--data", "d.csv", "--config", "run.cfg", "--out-model", "m.ckpt", "--report", "r.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("m.ckpt").exists());

    let report = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let data_rows = report.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 5, "one report row per epoch");
    assert!(report.lines().any(|l| l == "# k=2"));
}

#[test]
fn preset_values_are_echoed_in_report_header() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "80", "--seed", "2", "--out", "d.csv"]);
    let out = navar(
        dir.path(),
        &[
            "train", "--data", "d.csv", "--preset", "nonlinear-var-n3",
            "--epochs", "2", "--out-model", "m.ckpt", "--report", "r.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    for expected in [
        "# k=5",
        "# hidden_units=32",
        "# hidden_layers=1",
        "# batch_size=64",
        "# learning_rate=5.0000000000000002e-5",
        "# lambda=1.3439999999999999e-1",
        "# mu=2.9030000000000002e-3",
    ] {
        assert!(
            report.lines().any(|l| l == expected),
            "report header missing `{expected}`:\n{report}"
        );
    }
}

#[test]
fn missing_data_file_fails_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.cfg", TINY_CFG);
    let out = navar(
        dir.path(),
        &["train", "--data", "nope.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("nope.csv"), "stderr: {}", stderr(&out));
}

#[test]
fn score_and_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "300", "--seed", "5", "--out", "d.csv"]);
    write(dir.path(), "run.cfg", &TINY_CFG.replace("epochs=5", "epochs=60"));
    let out = navar(
        dir.path(),
        &["train", "--data", "d.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = navar(
        dir.path(),
        &["score", "--model", "m.ckpt", "--data", "d.csv", "--out-scores", "s.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let scores = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(scores.lines().count(), 4); // header + 3 rows

    let out = navar(
        dir.path(),
        &["eval", "--scores", "s.csv", "--truth", "d.truth.csv", "--out-roc", "roc.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let printed = stdout(&out);
    let auroc_line = printed.lines().next().unwrap();
    assert_eq!(auroc_line.len(), 8, "AUROC printed as 0.dddddd, got `{auroc_line}`");
    let value: f64 = auroc_line.parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
    let roc = fs::read_to_string(dir.path().join("roc.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr,threshold\n"));
}

#[test]
fn eval_prints_exact_values_for_perfect_and_tied_scores() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "truth.csv", "0,1\n0,0\n");
    write(dir.path(), "perfect.csv", "0.0,0.9\n0.1,0.0\n");
    let out = navar(
        dir.path(),
        &["eval", "--scores", "perfect.csv", "--truth", "truth.csv", "--ignore-self-links", "false"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "1.000000");

    write(dir.path(), "flat.csv", "0.5,0.5\n0.5,0.5\n");
    let out = navar(
        dir.path(),
        &["eval", "--scores", "flat.csv", "--truth", "truth.csv", "--ignore-self-links", "false"],
    );
    assert_eq!(stdout(&out).trim(), "0.500000");
}

#[test]
fn eval_rejects_degenerate_truth() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "truth.csv", "1,1\n1,1\n");
    write(dir.path(), "s.csv", "0.1,0.2\n0.3,0.4\n");
    let out = navar(dir.path(), &["eval", "--scores", "s.csv", "--truth", "truth.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn score_rejects_variable_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "150", "--seed", "1", "--out", "d3.csv"]);
    navar(dir.path(), &["generate", "--scm", "lag2", "--T", "150", "--seed", "1", "--out", "d2.csv"]);
    write(dir.path(), "run.cfg", TINY_CFG);
    navar(
        dir.path(),
        &["train", "--data", "d3.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    let out = navar(
        dir.path(),
        &["score", "--model", "m.ckpt", "--data", "d2.csv", "--out-scores", "s.csv"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("variables"));
}

#[test]
fn lags_flow_and_pair_validation() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "lag2", "--T", "200", "--seed", "4", "--out", "d.csv"]);
    write(
        dir.path(),
        "run.cfg",
        &TINY_CFG.replace("k=2", "k=6").replace("epochs=5", "epochs=20"),
    );
    navar(
        dir.path(),
        &["train", "--data", "d.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    let out = navar(
        dir.path(),
        &["lags", "--model", "m.ckpt", "--data", "d.csv", "--pair", "2,1", "--out", "lag.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lag = fs::read_to_string(dir.path().join("lag.csv")).unwrap();
    assert!(lag.starts_with("k,score,mse,delta_score\n"));
    assert_eq!(lag.lines().count(), 7); // header + k=1..6

    let out = navar(
        dir.path(),
        &["lags", "--model", "m.ckpt", "--data", "d.csv", "--pair", "0,1", "--out", "lag.csv"],
    );
    assert_eq!(code(&out), 1, "pairs are 1-indexed");
    let out = navar(
        dir.path(),
        &["lags", "--model", "m.ckpt", "--data", "d.csv", "--pair", "3,1", "--out", "lag.csv"],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn lags_rejects_lstm_models() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "lag2", "--T", "60", "--seed", "4", "--out", "d.csv"]);
    write(
        dir.path(),
        "run.cfg",
        &TINY_CFG.replace("backbone=mlp", "backbone=lstm").replace("epochs=5", "epochs=2"),
    );
    navar(
        dir.path(),
        &["train", "--data", "d.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    let out = navar(
        dir.path(),
        &["lags", "--model", "m.ckpt", "--data", "d.csv", "--pair", "2,1", "--out", "lag.csv"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).to_lowercase().contains("mlp"));
}

#[test]
fn bench_single_trial_line_format() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.cfg", &TINY_CFG.replace("epochs=5", "epochs=40"));
    let out = navar(
        dir.path(),
        &["bench", "--scm", "toy3", "--trials", "1", "--seed-base", "9", "--T", "250", "--config", "run.cfg"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    let line = line.lines().next().unwrap();
    let re_ok = line.starts_with("AUROC mean=")
        && line.contains(" std=")
        && line.ends_with(" trials=1");
    assert!(re_ok, "unexpected bench line `{line}`");
}

#[test]
fn ragged_and_non_numeric_csv_rows_fail_with_location() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.csv", "a,b\n1.0,2.0\n3.0\n");
    write(dir.path(), "run.cfg", TINY_CFG);
    let out = navar(
        dir.path(),
        &["train", "--data", "bad.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains(":3:"), "stderr: {}", stderr(&out));

    write(dir.path(), "bad2.csv", "a,b\n1.0,2.0\n3.0,oops\n");
    let out = navar(
        dir.path(),
        &["train", "--data", "bad2.csv", "--config", "run.cfg", "--out-model", "m.ckpt"],
    );
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains(":3:") && err.contains("column 2"), "stderr: {err}");
}

#[test]
fn preset_listing_and_show() {
    let dir = tempfile::tempdir().unwrap();
    let out = navar(dir.path(), &["preset", "--list"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("nonlinear-var-n3"));
    assert!(stdout(&out).contains("dream3-yeast1"));

    let out = navar(dir.path(), &["preset", "--show", "dream3-ecoli1"]);
    assert_eq!(code(&out), 0);
    let shown = stdout(&out);
    assert!(shown.contains("k=2"));
    assert!(shown.contains("hidden_units=10"));

    let out = navar(dir.path(), &["preset", "--show", "never-heard-of-it"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn full_pipeline_is_bitwise_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.cfg", &TINY_CFG.replace("epochs=5", "epochs=30"));
    let mut outputs = Vec::new();
    for run in 0..2 {
        let d = format!("d{run}.csv");
        let m = format!("m{run}.ckpt");
        let s = format!("s{run}.csv");
        navar(dir.path(), &["generate", "--scm", "toy3", "--T", "200", "--seed", "11", "--out", &d]);
        navar(dir.path(), &["train", "--data", &d, "--config", "run.cfg", "--out-model", &m]);
        navar(dir.path(), &["score", "--model", &m, "--data", &d, "--out-scores", &s]);
        outputs.push(fs::read(dir.path().join(&s)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "score CSVs differ between identical runs");
}

#[test]
fn multiple_data_files_become_replicates() {
    let dir = tempfile::tempdir().unwrap();
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "120", "--seed", "1", "--out", "r1.csv"]);
    navar(dir.path(), &["generate", "--scm", "toy3", "--T", "120", "--seed", "2", "--out", "r2.csv"]);
    write(dir.path(), "run.cfg", TINY_CFG);
    let out = navar(
        dir.path(),
        &[
            "train", "--data", "r1.csv", "--data", "r2.csv", "--config", "run.cfg",
            "--out-model", "m.ckpt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}
