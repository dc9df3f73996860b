//! End-to-end tests of the command line interface: output containers,
//! determinism, error JSON, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankcsp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn stderr_error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is json");
    v["error"]["kind"].as_str().expect("kind").to_string()
}

fn gen_file(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let path = dir.join(name);
    let mut args = vec!["gen"];
    args.extend_from_slice(extra);
    args.push("--out");
    let out = bin()
        .args(&args)
        .arg(&path)
        .output()
        .expect("spawn gen");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn gen_is_deterministic_and_parseable() {
    let a = run(&["gen", "--family", "betweenness", "--n", "7", "--noise", "1/10", "--seed", "3"]);
    let b = run(&["gen", "--family", "betweenness", "--n", "7", "--noise", "1/10", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "same seed must give identical bytes");
    let v = stdout_json(&a);
    assert_eq!(v["format"], "rankcsp-v1");
    assert_eq!(v["n"], 7);
    assert_eq!(v["family"], "betweenness");
    assert_eq!(v["planted"].as_array().expect("planted").len(), 7);
}

#[test]
fn gen_rejects_incompatible_arity() {
    let out = run(&["gen", "--family", "kbetweenness", "--k", "3", "--n", "6"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(stderr_error_kind(&out), "incompatible_family");
}

#[test]
fn solve_recovers_plant_and_is_reproducible() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(
        dir.path(),
        "b3.json",
        &["--family", "betweenness", "--n", "8", "--noise", "0", "--seed", "5"],
    );
    let args = ["solve", path.to_str().expect("utf8"), "--eps", "1/4", "--seed", "9"];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v = stdout_json(&a);
    assert_eq!(v["best_cost"], 0);
    assert_eq!(v["took_additive_branch"], false);
    assert_eq!(v["eps"], "1/4");
    assert!(v["best"].as_array().expect("best").len() == 8);
    assert!(v.get("candidates").is_none(), "candidates only on request");
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout, "same invocation must give identical output");
}

#[test]
fn solve_can_emit_candidates() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(
        dir.path(),
        "b3.json",
        &["--family", "betweenness", "--n", "7", "--noise", "0", "--seed", "1"],
    );
    let out = run(&[
        "solve",
        path.to_str().expect("utf8"),
        "--guess",
        "restarts:4",
        "--emit-candidates",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let cands = v["candidates"].as_array().expect("candidates");
    assert_eq!(cands.len(), v["guesses"].as_u64().expect("count") as usize);
    for c in cands {
        assert!(c["cost"].is_u64());
        assert_eq!(c["ranking"].as_array().expect("ranking").len(), 7);
    }
}

#[test]
fn solve_exact_core_refuses_large_instances() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(
        dir.path(),
        "n25.json",
        &["--family", "betweenness", "--n", "25", "--noise", "0", "--seed", "1"],
    );
    let out = run(&["solve", path.to_str().expect("utf8"), "--fast", "exact", "--guess", "oracle"]);
    assert!(!out.status.success());
    assert_eq!(stderr_error_kind(&out), "size_cap");
}

#[test]
fn solve_rejects_bad_epsilon() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(dir.path(), "b3.json", &["--family", "betweenness", "--n", "6"]);
    let out = run(&["solve", path.to_str().expect("utf8"), "--eps", "3/2"]);
    assert!(!out.status.success());
    assert_eq!(stderr_error_kind(&out), "invalid_epsilon");
}

#[test]
fn exact_respects_size_cap() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(dir.path(), "big.json", &["--family", "betweenness", "--n", "12"]);
    let out = run(&["exact", path.to_str().expect("utf8")]);
    assert!(!out.status.success());
    assert_eq!(stderr_error_kind(&out), "size_cap");
    let ok = run(&["exact", path.to_str().expect("utf8"), "--cap", "12"]);
    assert!(ok.status.success());
    assert_eq!(stdout_json(&ok)["opt_cost"], 0);
}

#[test]
fn check_passes_on_planted_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(
        dir.path(),
        "kf.json",
        &["--family", "kfast", "--k", "3", "--n", "7", "--noise", "1/5", "--seed", "2"],
    );
    let out = run(&["check", path.to_str().expect("utf8")]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().expect("checks").len() >= 4);
}

#[test]
fn check_fails_on_corrupted_plant() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = gen_file(
        dir.path(),
        "b3.json",
        &["--family", "betweenness", "--n", "6", "--noise", "0", "--seed", "4"],
    );
    // Swap two plant entries so a zero-noise file claims a wrong optimum.
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).expect("read")).expect("json");
    let planted = v["planted"].as_array_mut().expect("planted");
    planted.swap(0, 5);
    std::fs::write(&path, serde_json::to_string(&v).expect("emit")).expect("write");

    let out = run(&["check", path.to_str().expect("utf8")]);
    assert!(!out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["passed"], false);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .expect("checks")
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().expect("name"))
        .collect();
    assert_eq!(failed, ["planted_zero_noise_cost"]);
}

#[test]
fn usage_errors_exit_two_with_json() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error_kind(&out), "usage");
    let help = run(&["--help"]);
    assert!(help.status.success());
}

#[test]
fn bench_streams_sorted_rows_to_stdout() {
    let out = bin()
        .args([
            "bench", "--family", "kfast", "--n", "6,7", "--noise", "0", "--eps", "1/3", "--seeds",
            "2",
        ])
        .env("RANKCSP_THREADS", "2")
        .output()
        .expect("spawn");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).expect("utf8");
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(String, String)> = rows
        .iter()
        .map(|r| {
            let cols: Vec<&str> = r.split(',').collect();
            (cols[0].to_string(), cols[17].to_string())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted, "rows must arrive sorted by instance then seed");
}
