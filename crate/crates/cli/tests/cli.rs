//! Exercises the `pd` binary end to end: exit codes, artifacts, and error
//! reporting.

use std::process::Command;

fn pd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pd"))
}

#[test]
fn param_count_succeeds_and_prints_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = pd()
        .args(["param-count", "--seed", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    for count in ["1693362", "427874", "113346", "61954"] {
        assert!(stdout.contains(count), "stdout missing {count}: {stdout}");
    }
    assert!(out.join("param_counts.csv").exists());
    assert!(out.join("manifest.txt").exists());
}

#[test]
fn config_errors_exit_one_with_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.ini");
    std::fs::write(&config, "[distill]\ntau = -1\n").unwrap();
    let output = pd()
        .args(["loss-compare", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("tau"), "stderr: {stderr}");
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn unknown_preset_exits_one() {
    let output = pd().args(["teleport"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("teleport"));
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.ini");
    std::fs::write(&config, "[eval]\ncheckpoint = /nonexistent/teacher.ckpt\n").unwrap();
    let output = pd()
        .args(["eval-only", "--config"])
        .arg(&config)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
