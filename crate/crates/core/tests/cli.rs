use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ergotrans"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn report(verb: &str, spec: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![verb, "--spec", spec.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, stdout, stderr) = run(&args);
    let value = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout} {stderr}"));
    (code, value)
}

fn float(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

#[test]
fn pressure_of_example_one() {
    let (code, r) = report("pressure", &fixture("example1.json"), &[]);
    assert_eq!(code, 0);
    let expected = ((5.0 + 17f64.sqrt()) / 2.0).ln();
    assert!((float(&r["results"]["pressure"]) - expected).abs() <= 1e-12);
}

#[test]
fn entropy_of_two_atom_plan() {
    let (code, r) = report("entropy", &fixture("example2_3.json"), &[]);
    assert_eq!(code, 0);
    assert_eq!(float(&r["results"]["entropy"]), 0.0);
}

#[test]
fn dual_of_zero_cost() {
    let (code, r) = report("dual", &fixture("zero_cost_mu.json"), &[]);
    assert_eq!(code, 0);
    let phi = r["results"]["phi_tilde"].as_array().unwrap();
    assert!((float(&phi[0]) - 6f64.ln()).abs() <= 1e-9);
    assert!((float(&phi[1]) - 3f64.ln()).abs() <= 1e-9);
}

#[test]
fn certify_and_zerotemp_pass_on_fixtures() {
    for f in [
        "example1.json",
        "zero_cost_mu.json",
        "three_point_depth3.json",
    ] {
        for verb in ["certify", "zerotemp"] {
            let (code, r) = report(verb, &fixture(f), &[]);
            assert_eq!(code, 0, "{verb} on {f}: {r}");
            assert_eq!(r["status"], "ok");
        }
    }
}

#[test]
fn digest_matches_input_bytes() {
    for f in [
        "example1.json",
        "example2_3.json",
        "zero_cost_mu.json",
        "three_point_depth3.json",
    ] {
        let path = fixture(f);
        let (_, r) = report("pressure", &path, &[]);
        let digest = hex::encode(Sha256::digest(std::fs::read(&path).unwrap()));
        assert_eq!(r["spec_sha256"], Value::from(digest));
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing_field.json", r#"{"num_x": 2}"#, "alphabet_size"),
        (
            "short_cost.json",
            r#"{"num_x": 1, "alphabet_size": 2, "depth": 1, "cost": [0]}"#,
            "cost",
        ),
        (
            "zero_mu.json",
            r#"{"num_x": 2, "alphabet_size": 2, "depth": 1, "cost": [0, 0, 0, 0], "mu": [1, 0]}"#,
            "mu",
        ),
        (
            "no_mu.json",
            r#"{"num_x": 2, "alphabet_size": 2, "depth": 1, "cost": [0, 0, 0, 0]}"#,
            "mu",
        ),
    ];
    for (name, text, field) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let (code, stdout, stderr) = run(&["dual", "--spec", path.to_str().unwrap()]);
        assert_eq!(code, 2, "{name}: {stderr}");
        assert!(stdout.is_empty());
        assert!(stderr.contains(field), "{name}: {stderr}");
    }
    let (code, _, _) = run(&["pressure", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&[
        "unknown",
        "--spec",
        fixture("example1.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&[
        "pressure",
        "--spec",
        fixture("example1.json").to_str().unwrap(),
        "--tol-eigen",
        "-1",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn failed_certificate_exits_with_three_and_keeps_residuals() {
    let (code, r) = report(
        "dual",
        &fixture("zero_cost_mu.json"),
        &["--tol-dual", "1e-30"],
    );
    assert_eq!(code, 3);
    assert_eq!(r["status"], "failed");
    assert!(r["residuals"]["marginal_residual"].is_number());
    assert!(r["results"]["phi_tilde"].is_array());
}

#[test]
fn output_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let sweep = dir.path().join("sweep.tsv");
    let (code, stdout, _) = run(&[
        "zerotemp",
        "--spec",
        fixture("example1.json").to_str().unwrap(),
        "--beta-max",
        "16",
        "--out",
        out.to_str().unwrap(),
        "--sweep-out",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["verb"], "zerotemp");
    let table = std::fs::read_to_string(&sweep).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("beta\tlog_lambda_over_beta\tgap_to_limit"));
    assert_eq!(lines.len(), 1 + 5);
}
