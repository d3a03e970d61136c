//! End-to-end tests of the `predual` binary: exit codes, report bytes, and
//! the behavior of every subcommand on small configurations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_predual"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const KOLMOGOROV: &str = r#"
[[scenario]]
label = "kolmogorov"
alpha = 2.0
s = 0
set = "explicit(0)"
primal_windows = [16]
dual_windows = [0]
group = { kind = "integer", grid = 512 }
weight = { family = "modulus-squared", coefficients = [[0, 1.0], [1, -0.5]] }
"#;

const CYCLIC: &str = r#"
[[scenario]]
label = "ring"
alpha = 2.0
s = 1
set = "explicit(1, 3)"
primal_windows = [4]
dual_windows = [4]
group = { kind = "cyclic", order = 8 }
weight = { family = "constant", matrix = 1.0 }
"#;

#[test]
fn run_solves_and_writes_a_versioned_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "k.toml", KOLMOGOROV);
    let report = dir.path().join("out.json");
    let out = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("== kolmogorov"), "stdout: {text}");
    assert!(text.contains("sandwich:"), "stdout: {text}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["mode"], "run");
    assert_eq!(doc["scenarios"][0]["label"], "kolmogorov");
    assert_eq!(doc["scenarios"][0]["k"], 1);
    assert!(doc["scenarios"][0].get("timing_ms").is_none());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "k.toml", KOLMOGOROV);
    let mut bytes = Vec::new();
    for name in ["a.json", "b.json"] {
        let report = dir.path().join(name);
        let out = bin()
            .args([
                "run",
                config.to_str().unwrap(),
                "--report",
                report.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
        bytes.push(std::fs::read(&report).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn unsupported_combination_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "bad.toml",
        r#"
[[scenario]]
label = "matrix-general-alpha"
alpha = 3.0
s = 0
set = "explicit(0)"
primal_windows = [2]
group = { kind = "cyclic", order = 6 }
weight = { family = "constant", matrix = [[2.0, 0.0], [0.0, 1.0]] }
"#,
    );
    let out = bin()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unsupported"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn malformed_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "broken.toml",
        "[[scenario]]\nlabel = \"x\"\nnot_a_field = 1\n",
    );
    let out = bin()
        .args(["run", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("config"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_config_exits_one() {
    let out = bin()
        .args(["run", "/nonexistent/none.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_single_criterion_passes() {
    let out = bin().args(["verify", "--criterion", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("criterion 1"), "stdout: {text}");
    assert!(text.contains("PASS"), "stdout: {text}");
    assert!(text.contains("verify: 1/1 passed"), "stdout: {text}");
}

#[test]
fn verify_unknown_criterion_fails() {
    let out = bin()
        .args(["verify", "--criterion", "99"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"), "stdout: {}", stdout(&out));
}

#[test]
fn oracle_agrees_with_run_on_a_cyclic_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.toml", CYCLIC);
    let run_report = dir.path().join("run.json");
    let out = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--report",
            run_report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let oracle_report = dir.path().join("oracle.json");
    let out = bin()
        .args([
            "oracle",
            config.to_str().unwrap(),
            "--report",
            oracle_report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("oracle ring:"),
        "stdout: {}",
        stdout(&out)
    );

    let run_doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&run_report).unwrap()).unwrap();
    let oracle_doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&oracle_report).unwrap()).unwrap();
    assert_eq!(oracle_doc["schema_version"], 1);
    let upper = run_doc["scenarios"][0]["sandwich"]["upper"]
        .as_f64()
        .unwrap();
    let lower = run_doc["scenarios"][0]["sandwich"]["lower"]
        .as_f64()
        .unwrap();
    let reference = oracle_doc["oracle"][0]["distance"].as_f64().unwrap();
    assert!(
        (upper - reference).abs() <= 1e-8,
        "run {upper} vs oracle {reference}"
    );
    // Unit weight makes the characters orthonormal, so the distance is 1 and
    // both sides of the sandwich should say so.
    assert!((upper - 1.0).abs() <= 1e-9, "upper {upper}");
    assert!((lower - 1.0).abs() <= 1e-9, "lower {lower}");
}

#[test]
fn szego_sandwich_contains_one_with_small_relative_width() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "szego.toml",
        r#"
[[scenario]]
label = "szego"
alpha = 2.0
s = 0
set = "halfline(le, 0)"
primal_windows = [128]
dual_windows = [128]
group = { kind = "integer", grid = 4096 }
weight = { family = "modulus-squared", coefficients = [[0, 1.0], [1, -0.5]] }
"#,
    );
    let report = dir.path().join("szego.json");
    let out = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let upper = doc["scenarios"][0]["sandwich"]["upper"].as_f64().unwrap();
    let lower = doc["scenarios"][0]["sandwich"]["lower"].as_f64().unwrap();
    let rel = doc["scenarios"][0]["sandwich"]["rel_gap"].as_f64().unwrap();
    assert!(
        lower <= 1.0 && 1.0 <= upper + 1e-12,
        "[{lower}, {upper}] misses 1"
    );
    assert!(rel <= 1e-3, "relative width {rel}");
}

#[test]
fn sweep_replaces_both_window_lists() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "k.toml", KOLMOGOROV);
    let report = dir.path().join("sweep.json");
    let out = bin()
        .args([
            "sweep",
            config.to_str().unwrap(),
            "--windows",
            "2,4",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["mode"], "sweep");
    let primal = doc["scenarios"][0]["primal"].as_array().unwrap();
    let windows: Vec<i64> = primal
        .iter()
        .map(|b| b["window"].as_i64().unwrap())
        .collect();
    assert_eq!(windows, vec![2, 4]);
    let dual = doc["scenarios"][0]["dual"].as_array().unwrap();
    assert_eq!(dual.len(), 2);
}

#[test]
fn grid_override_reaches_the_weight() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "k.toml", KOLMOGOROV);
    let report = dir.path().join("grid.json");
    let out = bin()
        .args([
            "run",
            config.to_str().unwrap(),
            "--grid",
            "1024",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["scenarios"][0]["group"]["grid"], 1024);
}

#[test]
fn parallel_jobs_keep_configuration_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = String::new();
    for i in 0..4 {
        config.push_str(&format!(
            r#"
[[scenario]]
label = "job-{i}"
alpha = 2.0
s = 0
set = "explicit(0)"
primal_windows = [3]
dual_windows = [3]
group = {{ kind = "cyclic", order = 8 }}
weight = {{ family = "constant", matrix = {value} }}
"#,
            value = 1.0 + i as f64
        ));
    }
    let path = write(dir.path(), "many.toml", &config);
    let report = dir.path().join("many.json");
    let out = bin()
        .args([
            "run",
            path.to_str().unwrap(),
            "--jobs",
            "3",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let labels: Vec<&str> = doc["scenarios"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, vec!["job-0", "job-1", "job-2", "job-3"]);
}
