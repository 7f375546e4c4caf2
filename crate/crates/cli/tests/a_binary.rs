use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GAME: &str = r#"{
  "schema_version": 1,
  "instance": {"kind": "matrix-game", "m": 4, "n": 3, "seed": 5},
  "solver": {"p": 1, "k": 100, "oracle": "p1-closed-form"},
  "output": {"trace": "out/trace.csv", "summary": "out/summary.json"}
}
"#;

fn highprox(args: &[&str], cwd: &Path, out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_highprox"));
    cmd.args(args).current_dir(cwd).env_remove("HIGHPROX_OUTPUT_DIR");
    if let Some(dir) = out_dir {
        cmd.env("HIGHPROX_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "game.json", GAME);
    let out = highprox(&["run", "game.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 102);
    assert!(lines[0].starts_with("iter,lambda_i,omega_step"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["iterations_run"], 101);
    assert_eq!(summary["config_sha256"].as_str().unwrap().len(), 64);
    assert!(summary["final_gap"].as_f64().unwrap() < summary["initial_gap"].as_f64().unwrap());
}

#[test]
fn output_dir_override_keeps_file_names() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("elsewhere");
    write_config(dir.path(), "game.json", GAME);
    let out = highprox(&["run", "game.json"], dir.path(), Some(&target));
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("trace.csv").is_file());
    assert!(target.join("summary.json").is_file());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad.json", &GAME.replace("\"k\": 100", "\"k\": -1"));
    let out = highprox(&["run", "bad.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(!dir.path().join("out").exists());

    write_config(dir.path(), "mismatch.json", &GAME.replace("\"p\": 1", "\"p\": 2"));
    assert_eq!(highprox(&["run", "mismatch.json"], dir.path(), None).status.code(), Some(2));
    assert_eq!(highprox(&["frobnicate"], dir.path(), None).status.code(), Some(2));
}

#[test]
fn start_outside_the_set_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = GAME.replace("\"oracle\": \"p1-closed-form\"", "\"oracle\": \"p1-closed-form\", \"start\": [1, 1, 1, 1, 1, 1, 1]");
    write_config(dir.path(), "start.json", &text);
    assert_eq!(highprox(&["run", "start.json"], dir.path(), None).status.code(), Some(2));
}

#[test]
fn missing_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(highprox(&["run", "absent.json"], dir.path(), None).status.code(), Some(4));
}

#[test]
fn solver_failure_exits_3_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
  "schema_version": 1,
  "instance": {"kind": "hard", "t": 1, "p": 2, "l_f": 1.0, "l_a": 1.0},
  "solver": {"p": 2, "k": 5, "oracle": "generic-inner", "delta": 1e-14, "max_inner": 3},
  "output": {"trace": "partial.csv", "summary": "partial.json"}
}"#;
    write_config(dir.path(), "hard.json", text);
    let out = highprox(&["run", "hard.json"], dir.path(), None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("partial trace"));
    let csv = std::fs::read_to_string(dir.path().join("partial.csv")).unwrap();
    assert!(csv.starts_with("iter,"));
}

#[test]
fn sweep_reports_fit() {
    let dir = tempfile::tempdir().unwrap();
    let text = GAME.replace("\"k\": 100", "\"k_sweep\": [16, 32, 64, 128, 256]");
    write_config(dir.path(), "sweep.json", &text);
    let out = highprox(&["sweep", "sweep.json"], dir.path(), Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.split("\r\n").filter(|l| !l.is_empty()).count(), 6);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["expected_exponent"], -1.0);
    assert!(summary["fitted_exponent"].as_f64().unwrap() < 0.0);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "game.json", GAME);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(highprox(&["run", "game.json"], dir.path(), Some(&a)).status.code(), Some(0));
    assert_eq!(highprox(&["run", "game.json"], dir.path(), Some(&b)).status.code(), Some(0));
    for file in ["trace.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn schema_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = highprox(&["schema"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let schema: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(schema["required"][0], "schema_version");
}

#[test]
fn verify_known_and_unknown_suites() {
    let dir = tempfile::tempdir().unwrap();
    let out = highprox(&["verify", "power-mean"], dir.path(), None);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(highprox(&["verify", "nonsense"], dir.path(), None).status.code(), Some(2));
}
