use std::path::Path;
use std::process::{Command, Output};

use risia::assignment::Assignment;
use risia::bench::{rows_from_csv, CSV_HEADER};
use risia::loss::{expected_loss, LossMatrix};
use risia::solver::SolverReport;

fn risia(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risia"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = risia(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--K", "16", "--N", "16", "--M", "4", "--b", "2", "--seed", "7", "--out", "inst.json", "--quiet"]);
    ok(d, &["loss", "inst.json", "--out", "loss.csv", "--quiet"]);
    assert!(d.join("loss.meta.json").exists());
    ok(d, &["solve", "loss.csv", "--seed", "3", "--out", "rep.json", "--quiet"]);
    let report = SolverReport::from_json(&std::fs::read_to_string(d.join("rep.json")).unwrap()).unwrap();
    assert_eq!(report.best_pi.len(), 16);

    let eval: serde_json::Value =
        serde_json::from_str(&ok(d, &["eval", "loss.csv", "rep.assign.json", "--q", "0.001"])).unwrap();
    let (loss, _) = LossMatrix::load(d.join("loss.csv")).unwrap();
    let a = Assignment::from_json(&std::fs::read_to_string(d.join("rep.assign.json")).unwrap()).unwrap();
    assert_eq!(eval["expected_loss"].as_f64().unwrap(), expected_loss(&loss, &a, 0.001).unwrap());
    assert!((eval["path_cost"].as_f64().unwrap() - report.best_cost).abs() < 1e-12);

    // A bare permutation file is labelled along the path.
    let from_perm: serde_json::Value =
        serde_json::from_str(&ok(d, &["eval", "loss.csv", "rep.perm.json", "--q", "0.001"])).unwrap();
    assert_eq!(from_perm, eval);
}

#[test]
fn q_overrides_snr_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--dist", "uniform", "--K", "8", "--seed", "1", "--out", "m.csv"]);
    std::fs::write(d.join("p.json"), "[0,1,2,3,4,5,6,7]").unwrap();
    let out = risia(d, &["eval", "m.csv", "p.json", "--q", "0.02", "--bsc-snr-db", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["q"].as_f64().unwrap(), 0.02);
}

#[test]
fn solve_is_reproducible_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--dist", "clustered", "--K", "20", "--seed", "4", "--out", "m.csv"]);
    let a = ok(d, &["solve", "m.csv", "--seed", "9", "--no-timing", "--threads", "1"]);
    let b = ok(d, &["solve", "m.csv", "--seed", "9", "--no-timing", "--threads", "8"]);
    assert_eq!(a, b);
}

#[test]
fn every_solver_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--dist", "exploded", "--K", "8", "--seed", "2", "--out", "m.csv"]);
    for s in ["tsp", "natural", "random", "greedy", "greedy-best", "two-opt", "three-opt", "exact"] {
        let r = SolverReport::from_json(&ok(d, &["solve", "m.csv", "--solver", s, "--quiet"])).unwrap();
        assert_eq!(r.best_pi.len(), 8, "{s}");
    }
    // Non-power-of-two K still yields an ordering.
    ok(d, &["synth", "--dist", "uniform", "--K", "6", "--out", "six.csv"]);
    ok(d, &["solve", "six.csv", "--solver", "greedy", "--quiet"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| risia(d, args).status.code().unwrap();
    assert_eq!(code(&["gen", "--K", "0", "--N", "2", "--M", "1", "--b", "1"]), 2);
    assert_eq!(code(&["gen", "--K", "2"]), 2);
    assert_eq!(code(&["loss", "missing.json"]), 4);

    ok(d, &["synth", "--dist", "uniform", "--K", "8", "--out", "m.csv"]);
    assert_eq!(code(&["solve", "m.csv", "--solver", "lkh"]), 2);
    assert_eq!(code(&["synth", "--dist", "uniform", "--K", "8", "--out", "no/such/dir/m.csv"]), 4);

    // Zero reflected channel for UE 0 makes its relative loss undefined.
    ok(d, &["gen", "--K", "4", "--N", "4", "--M", "2", "--b", "2", "--out", "inst.json"]);
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("inst.json")).unwrap()).unwrap();
    for z in v["h_r"][0].as_array_mut().unwrap() {
        *z = serde_json::json!([0.0, 0.0]);
    }
    std::fs::write(d.join("bad.json"), v.to_string()).unwrap();
    assert_eq!(code(&["loss", "bad.json"]), 3);
}

#[test]
fn bench_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = serde_json::json!({
        "experiment": "smoke", "K": [8], "N": [8], "M": [2], "b": [2],
        "bsc_snr_db": [0.0, 4.0], "solvers": ["tsp", "natural", "random"],
        "runs": 2, "seed": 11, "output_dir": "res",
        "solver_params": {"n_shot": 40, "n_cate": 60, "T": 2}
    });
    std::fs::write(d.join("c.json"), cfg.to_string()).unwrap();
    ok(d, &["bench", "c.json", "--quiet"]);
    let text = std::fs::read_to_string(d.join("res/smoke.csv")).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert_eq!(rows_from_csv(&text).unwrap().len(), 6);

    std::fs::write(d.join("bad.json"), cfg.to_string().replace("natural", "nope")).unwrap();
    assert_eq!(risia(d, &["bench", "bad.json"]).status.code(), Some(2));
}
