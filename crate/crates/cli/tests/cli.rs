use std::fs;
use std::process::{Command, Output};

use minabs_core::experiment::{report_from_json, rows_from_csv};

fn minabs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minabs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn count_prints_csv() {
    let out = minabs(&["count", "--seed", "7", "--alpha1", "0.59", "--alpha2", "0.61", "--trials", "200"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows_from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].predicted_n, Some(2628.0));
    assert_eq!(rows[0].trials, 200);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# interferometer\nseed = 3\nalpha = 0.8\neps = 0.05\nk = 1\nformat = csv\n").unwrap();
    let out_path = dir.path().join("out.json");
    let out = minabs(&[
        "interf",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--k",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let report = report_from_json(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report.config.k, Some(2));
    assert_eq!(report.config.alpha, 0.8);
    assert_eq!(report.rows[0].setting, "k=2");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    let mut texts = Vec::new();
    for _ in 0..2 {
        let out = minabs(&[
            "hadamard", "--seed", "11", "--m", "3", "--eps", "0.05", "--trials", "100", "--format", "json", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(fs::read_to_string(&path).unwrap());
    }
    assert!(texts[0] == texts[1], "reports differ");
}

#[test]
fn sweep_command() {
    let out = minabs(&["sweep", "--kind", "grover", "--seed", "2", "--sweep", "m=2,4,6", "--beta2", "0.001"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = rows_from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    // A damped search row and an individual-addressing row per point.
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[4].sweep_value, Some(6.0));

    let empty = minabs(&["sweep", "--kind", "afm", "--seed", "2", "--sweep", "eps="]);
    assert_eq!(code(&empty), 0);
    assert_eq!(String::from_utf8(empty.stdout).unwrap().lines().count(), 1);

    let missing = minabs(&["sweep", "--kind", "afm", "--seed", "2"]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("sweep"));
}

#[test]
fn usage_errors_exit_one() {
    let no_seed = minabs(&["count"]);
    assert_eq!(code(&no_seed), 1);
    assert!(String::from_utf8_lossy(&no_seed.stderr).contains("`seed`"));
    assert_eq!(code(&minabs(&["count", "--seed", "1", "--pe", "0.8"])), 1);
    assert_eq!(code(&minabs(&["frobnicate"])), 1);
    assert_eq!(code(&minabs(&["count", "--seed", "1", "--alpha1", "0.6", "--alpha2", "0.6"])), 1);
    let unwritable = minabs(&["afm", "--seed", "1", "--out", "/nonexistent/dir/report.csv"]);
    assert_eq!(code(&unwritable), 1);
    assert_eq!(code(&minabs(&["--help"])), 0);
}

#[test]
fn resource_limits_exit_three() {
    let out = minabs(&["grover", "--seed", "1", "--m", "20", "--phase", "1e-5"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn underpowered_runs_fail_the_audit() {
    // One repetition trial has no error bar, so a short run can land below the bound.
    let out = minabs(&["afm", "--seed", "1", "--trials", "1", "--format", "json"]);
    assert_eq!(code(&out), 2);
    let report = report_from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows[0].passed, Some(false));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absorption_bound"));
}

#[test]
fn bound_audit_campaign_passes() {
    let out = minabs(&["bound-audit", "--seed", "1", "--scripts", "100", "--alpha1", "0.6", "--alpha2", "0.62"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows_from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap().len(), 100);
}
