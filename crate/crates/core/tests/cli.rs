use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn carlson(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carlson"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout.lines().last().unwrap_or_else(|| panic!("no stdout; stderr: {}", String::from_utf8_lossy(&out.stderr)));
    serde_json::from_str(line).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const ONE_PLUS_HALF: &str = r#"{"basis_dim":1,"terms":[{"n":1,"re":1.0,"im":0.0},{"n":2,"re":1.0,"im":0.0}]}"#;
const DIRAC: &str = r#"{"dim":2,"atoms":[{"theta":[1.0,2.0],"c":1.0}]}"#;

#[test]
fn verify_sigma_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.json", ONE_PLUS_HALF);
    let out = carlson(
        dir.path(),
        &["verify-sigma", "--poly", "f.json", "--sigma", "1", "--t-grid", "100,1000,10000", "--out", "s.csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["kind"], "verify-sigma");
    assert_eq!(s["pass"], true);
    assert!(s["key_metrics"]["final_abs_error"].as_f64().unwrap() < 1e-2);
    assert!(s["wall_time"].as_f64().unwrap() >= 0.0);
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "T,time_mean,target,abs_error");
    assert_eq!(lines.len(), 4);
}

#[test]
fn verify_sigma_tolerance_failure_is_status_one() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.json", ONE_PLUS_HALF);
    let out = carlson(
        dir.path(),
        &["verify-sigma", "--poly", "f.json", "--sigma", "0", "--t-grid", "1,2", "--tol", "1e-9"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["pass"], false);
}

#[test]
fn verify_sigma_monte_carlo_uses_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "f.json", ONE_PLUS_HALF);
    let args = [
        "verify-sigma", "--poly", "f.json", "--sigma", "0.5", "--t-grid", "1e4,1e6", "--mc-samples", "20000", "--seed", "11",
    ];
    let a = summary(&carlson(dir.path(), &args));
    let b = summary(&carlson(dir.path(), &args));
    assert_eq!(a["key_metrics"]["mc_mean"], b["key_metrics"]["mc_mean"]);
    assert_eq!(a["key_metrics"]["mc_within_3se"], true);
}

#[test]
fn build_measure_mass_trace() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "mu.json", DIRAC);
    let out = carlson(dir.path(), &["build-measure", "--mu", "mu.json", "--levels", "4", "--out", "atoms.jsonl"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    let trace: Vec<f64> = s["key_metrics"]["mass_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(trace, vec![2.0, 10.0, 90.0, 1530.0]);
    let text = fs::read_to_string(dir.path().join("atoms.jsonl")).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["format"], "lambda-atoms");
    assert_eq!(first["growth"], "2^k");
    assert_eq!(text.lines().count(), 1530 + 2);

    let out = carlson(
        dir.path(),
        &["verify-boundary", "--poly", "g.json", "--atoms", "atoms.jsonl", "--mu", "mu.json"],
    );
    assert_eq!(out.status.code(), Some(2), "missing poly file is a usage error");

    write(
        dir.path(),
        "g.json",
        r#"{"basis_dim":2,"terms":[{"n":1,"re":1.0,"im":0.0},{"n":3,"re":0.5,"im":-0.5}]}"#,
    );
    let out = carlson(
        dir.path(),
        &["verify-boundary", "--poly", "g.json", "--atoms", "atoms.jsonl", "--mu", "mu.json", "--out", "b.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);

    let out = carlson(
        dir.path(),
        &["moments", "--atoms", "atoms.jsonl", "--mu", "mu.json", "--pairs", "1,0:0,0;0,1:0,0;1,1:1,1", "--out", "m.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert!(csv.lines().nth(3).unwrap().starts_with("\"(1,1)\",\"(1,1)\",1,0,"));
}

#[test]
fn weights_not_summing_to_one_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "mu.json",
        r#"{"dim":1,"atoms":[{"theta":[0.0],"c":0.5},{"theta":[1.0],"c":0.4}]}"#,
    );
    let out = carlson(dir.path(), &["build-measure", "--mu", "mu.json", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out);
    assert!(s["error"].as_str().unwrap().contains("Σ c_j = 1"), "{s}");
    assert!(!dir.path().join("atoms.jsonl").exists());
}

#[test]
fn parameter_ranges_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "mu.json", DIRAC);
    for args in [
        vec!["build-measure", "--mu", "mu.json", "--levels", "9"],
        vec!["build-measure", "--mu", "mu.json", "--levels", "2", "--budget", "20000000000"],
        vec!["build-measure", "--mu", "mu.json", "--levels", "2", "--growth", "3^k"],
        vec!["kronecker", "--dim", "1", "--theta", "0", "--eps", "4"],
        vec!["kronecker", "--dim", "1", "--theta", "0", "--eps", "1e-7"],
        vec!["kronecker", "--dim", "2", "--theta", "0", "--eps", "0.1"],
        vec!["build-measure", "--levels", "2"],
        vec!["no-such-command"],
        vec![],
    ] {
        let out = carlson(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn kronecker_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = carlson(
        dir.path(),
        &["kronecker", "--dim", "2", "--theta", "1.0,-2.0", "--eps", "0.05", "--t-min", "3"],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let s = summary(&out);
    assert!(s["t"].as_f64().unwrap() > 3.0);
    let residuals = s["residuals"].as_array().unwrap();
    assert!(residuals.iter().all(|r| r.as_f64().unwrap() < 0.05));
    assert_eq!(s["q"].as_array().unwrap().len(), 2);
}

#[test]
fn kronecker_budget_exhaustion_is_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = carlson(
        dir.path(),
        &["kronecker", "--dim", "3", "--theta", "1,2,3", "--eps", "0.001", "--budget", "100"],
    );
    assert_eq!(out.status.code(), Some(3));
    let s = summary(&out);
    assert_eq!(s["pass"], false);
    assert_eq!(s["key_metrics"]["best_residuals"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "mu.json", DIRAC);
    write(
        dir.path(),
        "run.json",
        r#"{"kind":"build-measure","mu":"mu.json","levels":5,"growth":"const:2","out":"c.jsonl"}"#,
    );
    let out = carlson(dir.path(), &["--config", "run.json", "build-measure", "--levels", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&out);
    assert_eq!(s["key_metrics"]["levels"], 3);
    assert_eq!(s["key_metrics"]["growth"], "const:2");
    assert!(dir.path().join("c.jsonl").exists());

    let out = carlson(dir.path(), &["--config", "run.json"]);
    assert_eq!(summary(&out)["key_metrics"]["levels"], 5);

    write(dir.path(), "bad.json", r#"{"kind":"build-measure","levles":3}"#);
    let out = carlson(dir.path(), &["--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn nested_build_writes_windows() {
    let dir = tempfile::tempdir().unwrap();
    let mu = r#"{"dim":2,"atoms":[{"theta":[0.3,1.1],"c":0.5},{"theta":[2.0,4.0],"c":0.5}]}"#;
    let plan = format!(
        r#"{{"mu_sequence":[{mu},{mu}],"test_polynomials":[{{"terms":[{{"alpha":[],"re":1.0,"im":0.0}},{{"alpha":[1],"re":1.0,"im":0.0}}]}}]}}"#
    );
    write(dir.path(), "plan.json", &plan);
    let out = carlson(
        dir.path(),
        &["nested-build", "--plan", "plan.json", "--levels", "2", "--growth", "const:2", "--windows", "w.csv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&out);
    assert_eq!(s["key_metrics"]["windows"], 3);
    let csv = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.path().join("atoms.jsonl").exists());
}

#[test]
fn lebesgue_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = carlson(
        dir.path(),
        &["moments", "--lebesgue", "--pairs", "1,0:0,0;0,1:1,0;1,1:1,1", "--t-max", "1e5"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(&out)["key_metrics"]["worst"].as_f64().unwrap() < 0.01);
    let out = carlson(dir.path(), &["moments", "--lebesgue", "--pairs", "1:0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn artifacts_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mu = r#"{"dim":3,"atoms":[{"theta":[0.1,2.0,5.0],"c":0.25},{"theta":[3.0,0.0,1.0],"c":0.75}]}"#;
    write(dir.path(), "mu.json", mu);
    for (threads, name) in [("1", "a.jsonl"), ("4", "b.jsonl")] {
        let out = carlson(
            dir.path(),
            &["build-measure", "--mu", "mu.json", "--levels", "3", "--threads", threads, "--seed", "5", "--out", name],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        fs::read(dir.path().join("a.jsonl")).unwrap(),
        fs::read(dir.path().join("b.jsonl")).unwrap()
    );
}
