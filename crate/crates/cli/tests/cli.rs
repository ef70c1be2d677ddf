use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn physarum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_physarum")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn generated(dir: &TempDir, kind: &str, extra: &[&str]) -> PathBuf {
    let path = dir.path().join(format!("{kind}.json"));
    let mut args = vec!["generate", kind, "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = physarum(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn oracle_on_the_named_instances() {
    let dir = TempDir::new().unwrap();
    let out = physarum(&["oracle", p(&generated(&dir, "thm-one", &[]))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["opt"], "1");
    assert_eq!(v["phi"], "1");
    let out = physarum(&["oracle", p(&generated(&dir, "triangle", &[]))]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["opt"], "2");
    assert_eq!(v["phi"], "1");
    assert_eq!(v["num_optimal"], 1);
}

#[test]
fn constants_are_fractions() {
    let dir = TempDir::new().unwrap();
    let out = physarum(&["constants", p(&generated(&dir, "triangle", &[]))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["h0"], "1/20");
    assert_eq!(v["Psi0"], "3");
    assert_eq!(v["n"], 2);
}

#[test]
fn solve_converges_and_reports() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "thm-one", &[]);
    let out = physarum(&["solve", "--instance", p(&inst), "--h", "0.1", "--eps", "1e-3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(field(&text, "verdict"), "converged");
    assert_eq!(field(&text, "iterations"), "129");
    assert_eq!(field(&text, "opt"), "1");
}

#[test]
fn auto_step_prints_the_plan() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "thm-one", &[]);
    let out = physarum(&["solve", "--instance", p(&inst), "--use-oracle-phi", "--eps", "1e-2"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(field(&text, "regime"), "feasible");
    assert_eq!(field(&text, "verdict"), "converged");
}

#[test]
fn continuous_triangle() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "triangle", &[]);
    let out = physarum(&["solve", "--instance", p(&inst), "--mode", "undirected-continuous", "--trace-stride", "1000"]);
    assert_eq!(code(&out), 0);
    let cost: f64 = field(&stdout(&out), "cost").parse().unwrap();
    assert!((2.0..=2.001).contains(&cost));
}

#[test]
fn iteration_cap_exits_two() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "thm-one", &[]);
    let out = physarum(&["solve", "--instance", p(&inst), "--h", "0.1", "--max-iters", "3"]);
    assert_eq!(code(&out), 2);
    assert_eq!(field(&stdout(&out), "verdict"), "iteration-cap");
}

#[test]
fn invalid_input_exits_three() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"n\": 1");
    assert_eq!(code(&physarum(&["oracle", p(&bad)])), 3);
    let inst = generated(&dir, "thm-one", &[]);
    assert_eq!(code(&physarum(&["solve", "--instance", p(&inst), "--h", "1.5"])), 3);
    assert_eq!(code(&physarum(&["lowerbound", "--h", "0.6"])), 3);
    assert_eq!(code(&physarum(&["lowerbound", "--eps", "1"])), 3);
    assert_eq!(code(&physarum(&["no-such-command"])), 3);
    assert_eq!(code(&physarum(&["--help"])), 0);
}

#[test]
fn non_dominating_start_exits_four() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "neg.json", r#"{"n": 1, "m": 2, "A": [[1, -1]], "b": [1], "c": [1, 1], "x0": [1.0, 2.0]}"#);
    let out = physarum(&["solve", "--instance", p(&inst)]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn size_cap_exits_five() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random-positive-lp", &["--n", "3", "--m", "7"]);
    let out = Command::new(env!("CARGO_BIN_EXE_physarum"))
        .args(["constants", p(&inst)])
        .env("PHYSARUM_SIZE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn lowerbound_table() {
    let out = physarum(&["lowerbound"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,k_lb,k_observed,holds"));
    let rows: Vec<Vec<&str>> = lines.by_ref().take(3).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.iter().map(|r| r[2]).collect::<Vec<_>>(), ["38", "84", "129"]);
    assert!(rows.iter().all(|r| r[3] == "true"));
    assert_eq!(field(&text, "lower_envelope_holds"), "true");
}

#[test]
fn check_passes_on_named_instances() {
    let dir = TempDir::new().unwrap();
    for kind in ["triangle", "zero-cost-demo", "thm-one"] {
        let out = physarum(&["check", p(&generated(&dir, kind, &[]))]);
        assert_eq!(code(&out), 0, "{kind}: {}", stdout(&out));
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn check_rejects_a_corrupted_trace() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "triangle", &[]);
    let trace = dir.path().join("trace.csv");
    let out = physarum(&["solve", "--instance", p(&inst), "--h", "0.05", "--max-iters", "40", "--trace", p(&trace)]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&physarum(&["check", p(&inst), "--trace", p(&trace)])), 0);
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[5].split(',').map(String::from).collect();
    let r: f64 = cols[3].parse().unwrap();
    cols[3] = (r * 1.01).to_string();
    lines[5] = cols.join(",");
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();
    let out = physarum(&["check", p(&inst), "--trace", p(&trace), "--h", "0.05"]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
}

#[test]
fn precondition_writes_the_extended_instance() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "neg.json", r#"{"n": 1, "m": 2, "A": [[1, -1]], "b": [1], "c": [1, 1], "x0": [1.0, 2.0]}"#);
    let ext = dir.path().join("ext.json");
    let out = physarum(&["precondition", p(&inst), "--out", p(&ext)]);
    assert_eq!(code(&out), 0);
    assert!(field(&stdout(&out), "c_prime").parse::<i64>().unwrap() >= 1);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ext).unwrap()).unwrap();
    assert_eq!(v["m"], 3);
    let out = physarum(&["solve", "--instance", p(&ext), "--h", "0.05", "--eps", "1e-3"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn generation_is_seeded() {
    let a = physarum(&["generate", "shortest-path", "--seed", "7", "--nodes", "5", "--edges", "8"]);
    let b = physarum(&["generate", "shortest-path", "--seed", "7", "--nodes", "5", "--edges", "8"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}
