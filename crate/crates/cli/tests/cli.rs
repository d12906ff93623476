//! End-to-end CLI tests: golden files, exit codes, determinism, and file
//! format handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metricdp_core::accuracy::ErrorReport;
use metricdp_core::verifier::VerificationReport;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metricdp"))
        .args(args)
        .current_dir(fixtures())
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).expect("fixture exists")
}

#[test]
fn golden_calibrate_rr() {
    let out = run(&[
        "calibrate",
        "rr",
        "--m",
        "3",
        "--epsilon",
        "0.693147",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), read_fixture("golden_calibrate.json"));
}

#[test]
fn golden_verify_violation() {
    let args = [
        "verify",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.693147",
        "--delta",
        "0",
        "--mode",
        "exhaustive",
    ];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1), "violation exits 1");
    assert_eq!(stdout(&out), read_fixture("golden_verify.json"));

    // Byte-identical across reruns.
    let again = run(&args);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn golden_error_report() {
    let out = run(&[
        "error",
        "--kernel",
        "rr_p02.json",
        "--space",
        "discrete4.json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), read_fixture("golden_error.json"));
}

#[test]
fn reports_reparse_into_their_types() {
    let verify: VerificationReport =
        serde_json::from_str(&read_fixture("golden_verify.json")).expect("verify report parses");
    assert!(!verify.passed);
    assert_eq!(verify.witness.unwrap().event, vec![0]);

    let error: ErrorReport =
        serde_json::from_str(&read_fixture("golden_error.json")).expect("error report parses");
    assert!(error.tight);
    assert!((error.max_error - 0.6).abs() < 1e-12);

    let out = run(&[
        "certify-functional",
        "--k",
        "3",
        "--lo",
        "0",
        "--hi",
        "1",
        "--epsilon",
        "1",
        "--delta",
        "0",
    ]);
    let cert: metricdp_core::functional::ProjectionCertificate =
        serde_json::from_str(&stdout(&out)).expect("certificate parses");
    assert!(cert.certified);

    let out = run(&["decompose", "--pairs", "pairs.json"]);
    let decomposition: metricdp_core::verifier::RectangleDecomposition<String> =
        serde_json::from_str(&stdout(&out)).expect("decomposition parses");
    assert_eq!(decomposition.parts.len(), 3);
}

#[test]
fn verify_passes_at_larger_epsilon() {
    // rr p = 0.3 has pure-DP epsilon ln(7/3) ~ 0.847.
    let out = run(&[
        "verify",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.9",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: VerificationReport = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report.passed);
    assert!(report.witness.is_none());
}

#[test]
fn verify_product_and_query_modes() {
    let out = run(&[
        "verify",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.9",
        "--delta",
        "0",
        "--mode",
        "product",
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&[
        "verify",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.693147",
        "--delta",
        "0",
        "--mode",
        "query",
        "--n",
        "2",
        "--query",
        "count_a.json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "count query inherits the violation"
    );
}

#[test]
fn slack_against_target() {
    // Slack at epsilon = ln 2 is ~0.1.
    let ok = run(&[
        "slack",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.693147",
        "--delta",
        "0.15",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let exceeded = run(&[
        "slack",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.693147",
        "--delta",
        "0.05",
    ]);
    assert_eq!(exceeded.status.code(), Some(1));
    let value: serde_json::Value = serde_json::from_str(&stdout(&exceeded)).unwrap();
    let slack = value["delta_slack"].as_f64().unwrap();
    assert!((slack - 0.1).abs() < 1e-5);
    assert_eq!(value["within_target"], serde_json::Value::Bool(false));
}

#[test]
fn sanitize_is_deterministic_per_seed() {
    let args = [
        "sanitize",
        "--kernel",
        "rr_p03.json",
        "--db",
        "db_aa.csv",
        "--seed",
        "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let value: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(value["seed"], serde_json::json!(42));
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn sanitize_generates_and_reports_a_seed_when_omitted() {
    let out = run(&["sanitize", "--kernel", "rr_p03.json", "--db", "db_aa.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(value["seed"].is_u64());
}

#[test]
fn sanitize_powerset_database() {
    let args = [
        "sanitize",
        "--kernel",
        "rr_powerset.json",
        "--db",
        "db_powerset.csv",
        "--seed",
        "7",
    ];
    let out = run(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = value["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    // Every released row is a subset label over the universe {h1, h2}.
    for row in rows {
        let label = row.as_str().unwrap();
        assert!(
            ["", "h1", "h2", "h1;h2"].contains(&label),
            "unexpected label {label:?}"
        );
    }
}

#[test]
fn query_exact_distribution() {
    let out = run(&[
        "query",
        "--kernel",
        "rr_p03.json",
        "--db",
        "db_aa.csv",
        "--query",
        "count_a.json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["mode"], "exact");
    let entries = value["entries"].as_array().unwrap();
    // P(count = 2) = 0.49, P(1) = 0.42, P(0) = 0.09.
    let lookup = |key: &str| -> f64 {
        entries
            .iter()
            .find(|e| e[0] == key)
            .map(|e| e[1].as_f64().unwrap())
            .unwrap()
    };
    assert!((lookup("2") - 0.49).abs() < 1e-12);
    assert!((lookup("1") - 0.42).abs() < 1e-12);
    assert!((lookup("0") - 0.09).abs() < 1e-12);
}

#[test]
fn query_monte_carlo_mode() {
    let out = run(&[
        "query",
        "--kernel",
        "rr_p03.json",
        "--db",
        "db_aa.csv",
        "--query",
        "count_a.json",
        "--samples",
        "4000",
        "--seed",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["mode"], "monte-carlo");
    let entries = value["entries"].as_array().unwrap();
    let two = entries.iter().find(|e| e[0] == "2").unwrap();
    let freq = two[1].as_f64().unwrap();
    assert!((freq - 0.49).abs() < 0.05, "freq {freq}");
}

#[test]
fn sanitize_functional_clips_and_is_deterministic() {
    let args = [
        "sanitize",
        "--functional-db",
        "functional.csv",
        "--lo",
        "0",
        "--hi",
        "1",
        "--epsilon",
        "1",
        "--delta",
        "0",
        "--seed",
        "3",
    ];
    let a = run(&args);
    assert_eq!(
        a.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, run(&args).stdout);
    let value: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    // b = k(hi-lo)/eps = 3.
    assert_eq!(value["b"].as_f64().unwrap(), 3.0);
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
    assert_eq!(value["grid"], serde_json::json!([0.0, 0.5, 1.0]));
}

#[test]
fn certify_functional_at_calibrated_and_reduced_scale() {
    let out = run(&[
        "certify-functional",
        "--k",
        "4",
        "--lo",
        "0",
        "--hi",
        "1",
        "--epsilon",
        "1",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["certified"], serde_json::Value::Bool(true));
    assert_eq!(value["scale"].as_f64().unwrap(), 4.0);

    let out = run(&[
        "certify-functional",
        "--k",
        "4",
        "--lo",
        "0",
        "--hi",
        "1",
        "--epsilon",
        "1",
        "--delta",
        "0",
        "--scale",
        "2",
        "--indices",
        "1,2,3,4",
    ]);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["certified"], serde_json::Value::Bool(false));
}

#[test]
fn decompose_pairs_file() {
    let out = run(&["decompose", "--pairs", "pairs.json"]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let parts = value["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 3);
    assert_eq!(parts[0]["a"], serde_json::json!(["1"]));
    assert_eq!(parts[0]["b"], serde_json::json!(["x"]));
    assert_eq!(parts[2]["a"], serde_json::json!(["1", "2"]));
    assert_eq!(parts[2]["b"], serde_json::json!(["y"]));
}

#[test]
fn malformed_files_exit_2_with_diagnostics() {
    let out = run(&[
        "verify",
        "--kernel",
        "bad_kernel.json",
        "--epsilon",
        "1",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad_kernel.json"), "stderr: {stderr}");

    let out = run(&[
        "verify",
        "--kernel",
        "missing.json",
        "--epsilon",
        "1",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["verify", "--kernel", "rr_p03.json"]); // no epsilon/delta
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    // Capacity error: product mode over too many outcomes.
    let out = run(&[
        "verify",
        "--kernel",
        "discrete5_uniform.json",
        "--epsilon",
        "1",
        "--delta",
        "0",
        "--mode",
        "product",
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn text_format_is_available() {
    let out = run(&[
        "--format",
        "text",
        "verify",
        "--kernel",
        "rr_p03.json",
        "--epsilon",
        "0.693147",
        "--delta",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("FAIL"), "text: {text}");
    assert!(text.contains("witness"), "text: {text}");
}
