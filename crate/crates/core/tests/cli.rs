//! Black-box tests of the command-line tool: argument handling, exit
//! codes, and the files and text it produces.  Every invocation uses a
//! deliberately small protocol so the whole file runs in seconds.

use std::path::Path;
use std::process::{Command, Output};

/// Runs the compiled binary with the given arguments.
fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanpred"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

/// Tiny but complete sweep protocol: one linear-only axis point pair,
/// two trials, short record.
const SMALL_SWEEP: &str = "\
[channel]
total_samples = 300

[predictor]
predictors = wiener
window = 3

[sweep]
axis = window
values = 2, 3
trials = 2
";

#[test]
fn sweep_writes_the_requested_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sweep.conf", SMALL_SWEEP);
    let out = run(&["sweep", "--config", &config, "--out", "r.csv"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis,axis_value,predictor,trials,mse,mse_db"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.starts_with("window,") && r.contains(",wiener,2,")));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("r.csv"), "stdout: {stdout}");
}

#[test]
fn trial_reports_each_predictor_once() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "trial.conf",
        "[channel]\ntotal_samples = 300\n\n[predictor]\nwindow = 3\nhidden_units = 4\n\n\
         [train]\nmax_epochs = 2\nwarmup_epochs = 0\n",
    );
    let out = run(&["trial", "--config", &config, "--seed", "5"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for predictor in ["wiener: mse", "rnn: mse", "lstm: mse"] {
        assert_eq!(stdout.matches(predictor).count(), 1, "stdout: {stdout}");
    }
    assert!(stdout.contains("wall time"), "stdout: {stdout}");
}

#[test]
fn predictor_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "t.conf", "[channel]\ntotal_samples = 300\n");
    let out =
        run(&["trial", "--config", &config, "--predictors", "wiener"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("wiener: mse"), "stdout: {stdout}");
    assert!(!stdout.contains("rnn"), "stdout: {stdout}");
}

#[test]
fn malformed_config_exits_with_the_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.conf", "[channel]\nbogus = 1\n");
    let out = run(&["trial", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bogus"), "stderr: {stderr}");
}

#[test]
fn sweep_without_an_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "noaxis.conf", "[sweep]\ntrials = 2\n");
    let out = run(&["sweep", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("axis"), "stderr: {stderr}");
}

#[test]
fn missing_config_file_exits_with_the_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["trial", "--config", "does-not-exist.conf"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn acf_check_passes_on_the_default_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["acf-check", "--seed", "3"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("-> OK"), "stdout: {stdout}");
    // One header plus lags 0..=20.
    assert_eq!(stdout.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).count(), 21);
}

#[test]
fn arch_sweep_labels_every_shape() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "arch.conf",
        "[channel]\ntotal_samples = 300\n\n[predictor]\nwindow = 3\n\n\
         [train]\nmax_epochs = 2\nwarmup_epochs = 0\n\n[sweep]\nvalues = 50\ntrials = 1\n",
    );
    let out = run(&["arch-sweep", "--config", &config, "--out", "arch.csv"], dir.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("arch.csv")).unwrap();
    for label in ["rnn_1x8", "rnn_1x16", "rnn_2x8", "rnn_2x16", "rnn_3x8", "rnn_3x16"] {
        assert_eq!(text.matches(&format!(",{label},")).count(), 1, "csv: {text}");
    }
}
