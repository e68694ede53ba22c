mod support;

use lmr_core::LinearTransformation;
use serde_json::{json, Value};
use support::{diag_null, gaussian, lmr, operator_json, validate, write_json};

fn parse(out: &std::process::Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let vec = write_json(
        dir.path(),
        "vec.json",
        &operator_json(&LinearTransformation::vectorization(3, 3)),
    );
    let empty = write_json(
        dir.path(),
        "empty.json",
        &json!({"m": 2, "n": 2, "p": 0, "frames": []}),
    );
    let diag = write_json(dir.path(), "diag.json", &operator_json(&diag_null()));

    let out = lmr(&["certify", s(&vec), "--s", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = parse(&out);
    validate("certificate", &cert).unwrap();
    assert_eq!(cert["verdict"], "S_GOOD");

    let out = lmr(&["certify", s(&empty), "--s", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(parse(&out)["lower"], 1.0);

    let out = lmr(&[
        "certify",
        s(&diag),
        "--s",
        "1",
        "--seed",
        "1",
        "--beta",
        "2",
        "--kind",
        "gamma",
    ]);
    assert_eq!(out.status.code(), Some(1));
    validate("certificate", &parse(&out)).unwrap();
}

#[test]
fn inconclusive_certificates_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // One-dimensional null space whose element has σ₁/‖X‖_∗ ≈ 0.436: the
    // lower bound stays below 1/2 and no sound upper bound is available.
    let op = write_json(dir.path(), "g.json", &operator_json(&gaussian(4, 4, 15, 0)));
    let out = lmr(&["certify", s(&op), "--s", "1", "--seed", "2"]);
    let cert = parse(&out);
    assert_eq!(cert["verdict"], "INCONCLUSIVE", "{cert}");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    assert_eq!(
        lmr(&["certify", s(&bad), "--s", "1", "--seed", "1"])
            .status
            .code(),
        Some(64)
    );
    let short = write_json(
        dir.path(),
        "short.json",
        &json!({"m": 2, "n": 2, "p": 1, "frames": [[1, 2, 3]]}),
    );
    assert_eq!(
        lmr(&["certify", s(&short), "--s", "1", "--seed", "1"])
            .status
            .code(),
        Some(65)
    );
    let vec = write_json(
        dir.path(),
        "vec.json",
        &operator_json(&LinearTransformation::vectorization(2, 2)),
    );
    assert_eq!(
        lmr(&["certify", s(&vec), "--s", "3", "--seed", "1"])
            .status
            .code(),
        Some(65)
    );
    assert_eq!(
        lmr(&["certify", s(&vec), "--s", "1"]).status.code(),
        Some(64)
    );
    assert_eq!(
        lmr(&[
            "certify",
            s(&vec),
            "--s",
            "1",
            "--seed",
            "1",
            "--beta",
            "-1"
        ])
        .status
        .code(),
        Some(64)
    );
    assert_eq!(lmr(&["frobnicate"]).status.code(), Some(64));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        lmr(&["certify", s(&missing), "--s", "1", "--seed", "1"])
            .status
            .code(),
        Some(66)
    );
    let b = write_json(dir.path(), "b.json", &json!([1.0, 2.0]));
    assert_eq!(
        lmr(&["recover", s(&vec), "--b", s(&b)]).status.code(),
        Some(65)
    );
    let w = write_json(
        dir.path(),
        "w.json",
        &json!({"rows": 3, "cols": 1, "entries": [1, 2, 3]}),
    );
    assert_eq!(
        lmr(&["recover", s(&vec), "--w", s(&w)]).status.code(),
        Some(65)
    );
    let cfg = write_json(dir.path(), "cfg.json", &json!({"feas_tol": 0.0}));
    assert_eq!(
        lmr(&["phase", "--seed", "1", "--config", s(&cfg)])
            .status
            .code(),
        Some(65)
    );
    let env = support::lmr_env(
        &["certify", s(&vec), "--s", "1", "--seed", "1"],
        &[("LMR_THREADS", "zero")],
    );
    assert_eq!(env.status.code(), Some(64));
}

#[test]
fn recover_from_matrix_emits_trial_record() {
    let dir = tempfile::tempdir().unwrap();
    let vec = write_json(
        dir.path(),
        "vec.json",
        &operator_json(&LinearTransformation::vectorization(2, 3)),
    );
    let w = write_json(
        dir.path(),
        "w.json",
        &json!({"rows": 2, "cols": 3, "entries": [1, 2, 3, 2, 4, 6]}),
    );
    let out_path = dir.path().join("x.json");
    let out = lmr(&["recover", s(&vec), "--w", s(&w), "--out", s(&out_path)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    validate("recover", &doc).unwrap();
    validate("trial-record", &doc["trial"]).unwrap();
    assert_eq!(doc["trial"]["success"], true);
    assert_eq!(doc["trial"]["w"]["s"], 1);

    // Re-reading the solution reproduces X bit for bit.
    let x: Vec<f64> = serde_json::from_value(doc["solution"]["x"]["entries"].clone()).unwrap();
    let again = serde_json::to_string(&x).unwrap();
    let back: Vec<f64> = serde_json::from_str(&again).unwrap();
    assert!(x.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn large_eps_gives_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let vec = write_json(
        dir.path(),
        "vec.json",
        &operator_json(&LinearTransformation::vectorization(2, 2)),
    );
    let b = write_json(dir.path(), "b.json", &json!([1.0, 2.0, 2.0, 4.0]));
    let out = lmr(&["recover", s(&vec), "--b", s(&b), "--eps", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse(&out);
    validate("recover", &doc).unwrap();
    let x: Vec<f64> = serde_json::from_value(doc["solution"]["x"]["entries"].clone()).unwrap();
    assert!(x.iter().all(|v| v.abs() < 1e-9), "{x:?}");
    assert_eq!(doc["trial"], Value::Null);
}

#[test]
fn rip_reports_estimates_and_guarantees() {
    let dir = tempfile::tempdir().unwrap();
    let vec = write_json(
        dir.path(),
        "vec.json",
        &operator_json(&LinearTransformation::vectorization(3, 3)),
    );
    let out = lmr(&[
        "rip",
        s(&vec),
        "--s",
        "1,3",
        "--seed",
        "4",
        "--samples",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parse(&out);
    validate("rip", &doc).unwrap();
    for est in doc["estimates"].as_array().unwrap() {
        assert_eq!(est["delta_lower"], 0.0);
    }
    assert_eq!(doc["estimates"][0]["delta_exact"], "unknown");
    assert_eq!(doc["estimates"][1]["delta_exact"], 0.0);
    let table = doc["guarantees"][0]["entries"].as_array().unwrap();
    assert_eq!(table.len(), 9);
    assert!(table.iter().any(|e| e["status"] == "UNKNOWN"));
}

#[test]
fn gnum_bounds_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let op = write_json(dir.path(), "g.json", &operator_json(&gaussian(3, 3, 5, 8)));
    let lo = parse(&lmr(&["gnum-lower", s(&op), "--s", "1", "--seed", "5"]));
    let up = parse(&lmr(&["gnum-upper", s(&op), "--s", "1", "--seed", "5"]));
    validate("gnum-lower", &lo).unwrap();
    validate("gnum-upper", &up).unwrap();
    let l = lo["gamma_hat_lower"].as_f64().unwrap();
    assert!(l <= up["gamma_s_sampled"].as_f64().unwrap() + 1e-6);
    assert!(l <= up["gamma1_sampled"].as_f64().unwrap() + 1e-6);
}

#[test]
fn phase_writes_csv_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("trials.jsonl");
    let cfg = write_json(
        dir.path(),
        "cfg.json",
        &json!({"seed": 3, "phase": {"m": 3, "n": 3, "s_values": [1], "p_values": [0, 9], "trials": 3}}),
    );
    validate(
        "run-config",
        &serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap(),
    )
    .unwrap();
    let out = lmr(&["phase", "--config", s(&cfg), "--records", s(&rec)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "s,p,trials,successes,mean_rel_error,mean_iterations"
    );
    assert!(lines[1].starts_with("1,0,3,0,"));
    assert!(lines[2].starts_with("1,9,3,3,"));
    let records = std::fs::read_to_string(&rec).unwrap();
    assert_eq!(records.lines().count(), 6);
    for line in records.lines() {
        validate("trial-record", &serde_json::from_str(line).unwrap()).unwrap();
    }
}

#[test]
fn input_files_match_their_schemas() {
    validate("operator", &operator_json(&gaussian(2, 3, 4, 1))).unwrap();
    validate(
        "matrix",
        &json!({"rows": 1, "cols": 2, "entries": [0.5, 1.0]}),
    )
    .unwrap();
    validate("measurements", &json!([1.0, 2.0])).unwrap();
    assert!(validate("operator", &json!({"m": 2, "n": 2})).is_err());
}
