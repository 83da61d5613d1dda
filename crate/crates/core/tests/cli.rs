//! End-to-end runs of the `csg` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn csg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csg")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn names(v: &Value) -> Vec<String> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn solve_brackets_the_running_example() {
    let report = json(&csg(&["solve", &fixture("irrational_value"), "--epsilon", "0.01"]));
    let s0 = &report["states"]["s0"];
    let (lo, hi) = (s0["lower"].as_f64().unwrap(), s0["upper"].as_f64().unwrap());
    assert!(lo <= hi && hi - lo <= 0.01, "[{lo}, {hi}]");
    assert!(lo > 0.41 && hi < 0.42, "[{lo}, {hi}]");
    assert_eq!(report["termination"], "gap");
    assert_eq!(report["method"], "bvi");
}

#[test]
fn solve_with_strategy_iteration_agrees() {
    let a = json(&csg(&["solve", &fixture("mixed_exit"), "--epsilon", "1e-6"]));
    let b = json(&csg(&["solve", &fixture("mixed_exit"), "--method", "bsi", "--epsilon", "1e-6"]));
    assert_eq!(b["method"], "bsi");
    for (name, bounds) in a["states"].as_object().unwrap() {
        let other = &b["states"][name];
        let lo = bounds["lower"].as_f64().unwrap().max(other["lower"].as_f64().unwrap());
        let hi = bounds["upper"].as_f64().unwrap().min(other["upper"].as_f64().unwrap());
        assert!(lo <= hi + 1e-9, "{name}: intervals disjoint");
    }
    let s5 = &b["states"]["s5"];
    assert!((s5["lower"].as_f64().unwrap() - 0.5).abs() <= 1e-6);
}

#[test]
fn naive_upper_bound_hits_the_iteration_cap() {
    let out = csg(&["solve", &fixture("ec_trap"), "--naive-upper", "--max-iters", "50"]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["termination"], "iterCap");
    assert_eq!(report["states"]["s1"]["upper"].as_f64(), Some(1.0));
}

#[test]
fn safety_objective_complements_reachability() {
    let reach = json(&csg(&["solve", &fixture("irrational_value"), "--epsilon", "1e-6"]));
    let safe = json(&csg(&["solve", &fixture("irrational_value"), "--epsilon", "1e-6", "--objective", "safety"]));
    assert_eq!(safe["objective"], "safety");
    for (name, bounds) in reach["states"].as_object().unwrap() {
        let s = &safe["states"][name];
        let lo = 1.0 - bounds["upper"].as_f64().unwrap();
        let hi = 1.0 - bounds["lower"].as_f64().unwrap();
        assert!((s["lower"].as_f64().unwrap() - lo).abs() <= 1e-12, "{name}");
        assert!((s["upper"].as_f64().unwrap() - hi).abs() <= 1e-12, "{name}");
    }
}

#[test]
fn trace_and_out_file() {
    let path = scratch("trace_report.json");
    let out = csg(&["solve", &fixture("irrational_value"), "--epsilon", "0.01", "--trace", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = report["trace"].as_array().unwrap();
    assert_eq!(rows.len() as u64, report["iterations"].as_u64().unwrap());
}

#[test]
fn analyze_reports_regions_and_components() {
    let report = json(&csg(&["analyze", &fixture("irrational_value")]));
    assert_eq!(names(&report["winningRegion"]), ["s1"]);
    let mecs: Vec<Vec<String>> = report["mecs"].as_array().unwrap().iter().map(names).collect();
    assert!(mecs.contains(&vec!["s3".to_string(), "s4".to_string()]));

    let report = json(&csg(&["analyze", &fixture("mixed_exit")]));
    let mecs: Vec<Vec<String>> = report["mecs"].as_array().unwrap().iter().map(names).collect();
    assert!(mecs.contains(&vec!["s5".to_string()]));
}

#[test]
fn evaluate_fixed_strategies() {
    let path = scratch("safe_pure.json");
    std::fs::write(&path, r#"{"safe": {"s0": {"d": 1}, "s3": {"b": 1}}}"#).unwrap();
    let report = json(&csg(&[
        "evaluate",
        &fixture("irrational_value"),
        "--strategy",
        path.to_str().unwrap(),
        "--samples",
        "4000",
    ]));
    let exact = report["exact"]["s0"].as_f64().unwrap();
    assert!((exact - 1.0 / 3.0).abs() <= 1e-12);
    let mc = &report["monteCarlo"]["s0"];
    let gap = (mc["estimate"].as_f64().unwrap() - exact).abs();
    assert!(gap <= 2.0 * mc["halfWidth"].as_f64().unwrap(), "estimate off by {gap}");
}

#[test]
fn evaluate_accepts_a_solve_report() {
    let path = scratch("solved.json");
    let out = csg(&["solve", &fixture("irrational_value"), "--method", "bsi", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report = json(&csg(&["evaluate", &fixture("irrational_value"), "--strategy", path.to_str().unwrap()]));
    let solved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // the pair of certificates plays to a value inside the interval
    let bounds = &solved["states"]["s0"];
    let v = report["exact"]["s0"].as_f64().unwrap();
    assert!(bounds["lower"].as_f64().unwrap() - 1e-8 <= v && v <= bounds["upper"].as_f64().unwrap() + 1e-8, "{v}");
}

#[test]
fn unavailable_move_is_an_input_error() {
    let path = scratch("bad_move.json");
    std::fs::write(&path, r#"{"reach": {"s0": {"zz": 1}}}"#).unwrap();
    let out = csg(&["evaluate", &fixture("irrational_value"), "--strategy", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not available"));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = csg(&["solve", "/nonexistent/game.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn strict_mode_rejects_unknown_keys() {
    let src = std::fs::read_to_string(fixture("irrational_value")).unwrap();
    let mut game: Value = serde_json::from_str(&src).unwrap();
    game["comment"] = Value::from("extra");
    let path = scratch("extra_key.json");
    std::fs::write(&path, game.to_string()).unwrap();
    assert!(csg(&["analyze", path.to_str().unwrap()]).status.success());
    assert_eq!(csg(&["analyze", path.to_str().unwrap(), "--strict"]).status.code(), Some(1));
}

#[test]
fn gen_is_deterministic() {
    let a = csg(&["gen", "--states", "12", "--moves", "3", "--seed", "7"]);
    let b = csg(&["gen", "--states", "12", "--moves", "3", "--seed", "7"]);
    let c = csg(&["gen", "--states", "12", "--moves", "3", "--seed", "8"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn generated_single_move_games_solve() {
    for seed in 0..10 {
        let path = scratch(&format!("single_move_{seed}.json"));
        let seed = seed.to_string();
        assert!(csg(&["gen", "--moves", "1", "--seed", &seed, "--out", path.to_str().unwrap()]).status.success());
        let report = json(&csg(&["solve", path.to_str().unwrap(), "--epsilon", "1e-6"]));
        assert_eq!(report["termination"], "gap");
    }
}

#[test]
fn end_component_bias_produces_components() {
    let mut nontrivial = 0;
    for seed in 0..100 {
        let path = scratch(&format!("biased_{seed}.json"));
        let seed = seed.to_string();
        let out = csg(&["gen", "--states", "50", "--ec-bias", "0.5", "--seed", &seed, "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        let report = json(&csg(&["analyze", path.to_str().unwrap()]));
        if report["mecs"].as_array().unwrap().iter().any(|c| c.as_array().unwrap().len() > 1) {
            nontrivial += 1;
        }
    }
    assert!(nontrivial >= 50, "{nontrivial} of 100 games have a multi-state end component");
}
