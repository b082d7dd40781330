use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qpaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpaug")).args(args).arg("-q").output().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["generate", "--rows", "12", "--cols", "6", "--count", "10", "--out", s(dir)];
    args.extend_from_slice(extra);
    qpaug(&args)
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qpaug(&["generate", "--nope"]).status.code(), Some(2));
    assert_eq!(qpaug(&["generate", "--family", "milp", "--out", s(dir.path())]).status.code(), Some(2));
    assert_eq!(qpaug(&["generate"]).status.code(), Some(2));
    assert_eq!(qpaug(&["augment", "--ops", "warp:1", "--input", "x", "--out", "y"]).status.code(), Some(2));

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"count": "many"}"#).unwrap();
    let out = qpaug(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("d"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("count"));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let out = qpaug(&["verify", "--input", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"count": 4, "rows": 9, "cols": 3, "family": "lp"}"#).unwrap();
    let out = qpaug(&["generate", "--config", s(&cfg), "--count", "2", "--out", s(&dir.path().join("d"))]);
    let r = report(&out);
    assert_eq!(r["count"], 2);
    assert_eq!(r["family"], "lp");
    let inst: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d/lp-00000.json")).unwrap()).unwrap();
    assert_eq!(inst["n"], 3);
}

#[test]
fn solver_budget_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), &["--solve", "--max-iter", "1", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(3));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!r["failures"].as_array().unwrap().is_empty());

    let out = qpaug(&["solve", "--input", s(&dir.path().join("manifest.json")), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unlabeled_input_with_solution_op_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    report(&generate(dir.path(), &[]));
    let m = dir.path().join("manifest.json");
    let out = qpaug(&["augment", "--input", s(&m), "--out", s(&dir.path().join("a")), "--ops", "drop-vars:0.5"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("drop-vars"));

    let r = report(&qpaug(&[
        "augment",
        "--input",
        s(&m),
        "--out",
        s(&dir.path().join("b")),
        "--ops",
        "scale-vars:1,add-cons:0.5",
    ]));
    assert_eq!(r["labeled"], 0);
    assert_eq!(r["outputs"], 10);
}

#[test]
fn solve_then_verify_then_tamper_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    report(&generate(dir.path(), &[]));
    let m = dir.path().join("manifest.json");
    assert_eq!(report(&qpaug(&["solve", "--input", s(&m)]))["solved"], 10);
    let r = report(&qpaug(&["verify", "--input", s(&m)]));
    assert_eq!(r["checked"], 10);

    let f = dir.path().join("qp-00003.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let x0 = doc["solution"]["x"][0].as_f64().unwrap();
    doc["solution"]["x"][0] = Value::from(x0 + 1.0);
    std::fs::write(&f, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = qpaug(&["verify", "--input", s(&m)]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qp-00003.json"));
}

#[test]
fn enumeration_labels_a_single_file() {
    let dir = tempfile::tempdir().unwrap();
    report(&qpaug(&[
        "generate", "--rows", "4", "--cols", "2", "--count", "1", "--out", s(dir.path()),
    ]));
    let f = dir.path().join("qp-00000.json");
    let r = report(&qpaug(&["solve", "--input", s(&f), "--method", "enumeration"]));
    assert_eq!(r["solved"], 1);
    report(&qpaug(&["verify", "--input", s(&f), "--tol", "1e-9"]));
}

#[test]
fn augment_views_graph_and_split() {
    let dir = tempfile::tempdir().unwrap();
    report(&generate(dir.path(), &["--solve"]));
    let m = dir.path().join("manifest.json");

    let aug = dir.path().join("aug");
    let r = report(&qpaug(&["augment", "--input", s(&m), "--out", s(&aug), "--per-instance", "2", "--seed", "5"]));
    assert_eq!(r["outputs"], 20);
    report(&qpaug(&["verify", "--input", s(&aug.join("manifest.json"))]));
    let entries: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(aug.join("manifest.json")).unwrap()).unwrap();
    assert!(entries.iter().all(|e| e["solver_status"] == "mapped"));

    let views = dir.path().join("views");
    let r = report(&qpaug(&["augment", "--input", s(&m), "--out", s(&views), "--views", "2"]));
    assert_eq!(r["labeled"], 0);

    let g = dir.path().join("g");
    report(&qpaug(&["graph", "--input", s(&views.join("manifest.json")), "--out", s(&g), "--embed", "--width", "4"]));
    let emb: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(g.join("embeddings.json")).unwrap()).unwrap();
    assert_eq!(emb.len(), 20);
    assert_eq!(emb[0]["embedding"].as_array().unwrap().len(), 4);
    let graph: Value = serde_json::from_str(&std::fs::read_to_string(g.join("qp-00000-v0.graph.json")).unwrap()).unwrap();
    assert_eq!(graph["n_var_nodes"], 6);

    let out = dir.path().join("elsewhere/split.json");
    let r = report(&qpaug(&["split", "--input", s(&m), "--seed", "1", "--output", s(&out)]));
    assert_eq!((r["train"].as_u64(), r["val"].as_u64(), r["test"].as_u64()), (Some(8), Some(1), Some(1)));
    report(&qpaug(&["verify", "--input", s(&out)]));
}

#[test]
fn heuristic_eval_reports_both_rules() {
    let dir = tempfile::tempdir().unwrap();
    report(&generate(dir.path(), &["--solve"]));
    let m = dir.path().join("manifest.json");
    for rule in ["active-count", "m-minus-n"] {
        let r = report(&qpaug(&["heuristic-eval", "--input", s(&m), "--k-rule", rule]));
        assert_eq!(r["k_rule"], rule);
        let mean = r["overall"]["mean"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&mean));
    }
}

#[test]
fn metrics_accepts_pairs_and_objects() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("p.json");
    std::fs::write(&f, "[[1.1, 1.0], [-3.0, -2.0]]").unwrap();
    let r = report(&qpaug(&["metrics", "--input", s(&f)]));
    assert!((r["mean_relative_error_percent"].as_f64().unwrap() - 30.0).abs() < 1e-9);

    std::fs::write(&f, r#"[{"predicted": 2.0, "optimal": 2.0}]"#).unwrap();
    assert_eq!(report(&qpaug(&["metrics", "--input", s(&f)]))["mean_relative_error_percent"], 0.0);

    std::fs::write(&f, "[[1.0, 0.0]]").unwrap();
    assert_eq!(qpaug(&["metrics", "--input", s(&f)]).status.code(), Some(1));
}
