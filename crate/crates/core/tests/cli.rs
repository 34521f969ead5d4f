use std::fs;
use std::path::{Path, PathBuf};

use lowerframe::cli::{self, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK};
use serde_json::Value;
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = cli::run(
        std::iter::once("lowerframe").chain(args.iter().copied()),
        &mut stdout,
        &mut stderr,
    );
    Out {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn analyze_orthonormal_reports_closed_form_bound() {
    let out = run(&["analyze", "--gen", "orthonormal", "--dim", "4"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let cert: Value = serde_json::from_str(&out.stdout).unwrap();
    let eig = cert["min_frame_eig"].as_f64().unwrap();
    assert!((eig - 4.0 * 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(cert["passed"], Value::Bool(true));
    assert!(out.stderr.contains("min_frame_eig"));
}

#[test]
fn analyze_with_out_prints_summary_on_stdout() {
    let dir = TempDir::new().unwrap();
    let cert = path(&dir, "cert.json");
    let out = run(&[
        "analyze",
        "--gen",
        "orthonormal",
        "--dim",
        "4",
        "--out",
        s(&cert),
    ]);
    assert_eq!(out.code, EXIT_OK);
    for key in ["T_norm", "min_frame_eig", "lambda", "checks"] {
        assert!(
            out.stdout.contains(key),
            "summary lacks {key}: {}",
            out.stdout
        );
    }
    let doc = json(&cert);
    assert_eq!(doc["dim"], 4);
    assert!(doc["config"].is_object());
}

#[test]
fn analyze_quantized_neumann_has_small_nonzero_perturbation() {
    let out = run(&[
        "analyze",
        "--gen",
        "random_gaussian",
        "--dim",
        "5",
        "--count",
        "12",
        "--mode",
        "quantized",
        "--method",
        "neumann",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let cert: Value = serde_json::from_str(&out.stdout).unwrap();
    let t = cert["T_norm"].as_f64().unwrap();
    assert!(t > 0.0 && t <= 0.5, "T_norm = {t}");
}

#[test]
fn analyze_rank_deficient_input_is_a_totality_error() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    fs::write(
        &bad,
        r#"{"field": "real", "dim": 3, "tail": "zero", "vectors": [[1, 0, 0], [2, 0, 0]]}"#,
    )
    .unwrap();
    let out = run(&["analyze", "--input", s(&bad)]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("total"), "{}", out.stderr);
    assert!(
        out.stderr.contains("chain"),
        "stage not named: {}",
        out.stderr
    );
}

#[test]
fn analyze_csv_input_and_weight_table() {
    let dir = TempDir::new().unwrap();
    let fam = path(&dir, "fam.csv");
    fs::write(&fam, "1,0\n1,1\n").unwrap();
    let out = run(&["analyze", "--input", s(&fam), "--format", "csv"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(lines.next(), Some("k,value,log2"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!((first[1].parse::<f64>().unwrap() - 2f64.powf(3.5)).abs() < 1e-12);
}

#[test]
fn verify_round_trip_and_scaled_weights() {
    let dir = TempDir::new().unwrap();
    let fam = path(&dir, "fam.json");
    let cert = path(&dir, "cert.json");
    assert_eq!(
        run(&[
            "generate",
            "--gen",
            "random_gaussian",
            "--dim",
            "4",
            "--count",
            "9",
            "--seed",
            "2",
            "--out",
            s(&fam)
        ])
        .code,
        EXIT_OK
    );
    assert_eq!(
        run(&["analyze", "--input", s(&fam), "--out", s(&cert)]).code,
        EXIT_OK
    );

    let ok = run(&["verify", "--cert", s(&cert), "--input", s(&fam)]);
    assert_eq!(ok.code, EXIT_OK, "{}{}", ok.stdout, ok.stderr);

    let mut doc = json(&cert);
    for entry in doc["lambda"].as_array_mut().unwrap() {
        let v = entry["value"].as_f64().unwrap();
        entry["value"] = Value::from(v * 1e-6);
    }
    let scaled = path(&dir, "scaled.json");
    fs::write(&scaled, serde_json::to_string(&doc).unwrap()).unwrap();
    let report = path(&dir, "report.json");
    let bad = run(&[
        "verify",
        "--cert",
        s(&scaled),
        "--input",
        s(&fam),
        "--out",
        s(&report),
    ]);
    assert_eq!(bad.code, EXIT_CHECK_FAILED);
    let rep = json(&report);
    let min_eig = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "lower_frame.min_eig")
        .unwrap();
    assert_eq!(min_eig["passed"], Value::Bool(false));
}

#[test]
fn verify_rejects_truncated_and_mismatched_inputs() {
    let dir = TempDir::new().unwrap();
    let fam = path(&dir, "fam.json");
    let other = path(&dir, "other.json");
    let cert = path(&dir, "cert.json");
    run(&[
        "generate",
        "--gen",
        "shifted_sum",
        "--dim",
        "3",
        "--out",
        s(&fam),
    ]);
    run(&[
        "generate",
        "--gen",
        "shifted_sum",
        "--dim",
        "4",
        "--out",
        s(&other),
    ]);
    assert_eq!(
        run(&["analyze", "--input", s(&fam), "--out", s(&cert)]).code,
        EXIT_OK
    );

    let text = fs::read_to_string(&cert).unwrap();
    let truncated = path(&dir, "truncated.json");
    fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let out = run(&["verify", "--cert", s(&truncated), "--input", s(&fam)]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("error"));

    let out = run(&["verify", "--cert", s(&cert), "--input", s(&other)]);
    assert_eq!(out.code, EXIT_INPUT);
    assert!(out.stderr.contains("dimension"), "{}", out.stderr);

    let out = run(&[
        "verify",
        "--cert",
        s(&path(&dir, "missing.json")),
        "--input",
        s(&fam),
    ]);
    assert_eq!(out.code, EXIT_INPUT);
}

#[test]
fn sweep_shifted_sum_rows() {
    let out = run(&["sweep", "--gen", "shifted_sum", "--dims", "4,8,16"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let mut lines = out.stdout.lines();
    assert_eq!(
        lines.next(),
        Some("d,N,mode,T_norm,min_frame_eig,max_lambda,status")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for (row, d) in rows.iter().zip(["4", "8", "16"]) {
        assert_eq!(row[0], d);
        assert!(row[4].parse::<f64>().unwrap() >= 1.0);
        assert_eq!(row[6], "ok");
    }
}

#[test]
fn sweep_timing_column_is_opt_in() {
    let out = run(&["sweep", "--gen", "orthonormal", "--dims", "2", "--timing"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out
        .stdout
        .starts_with("d,N,mode,T_norm,min_frame_eig,max_lambda,status,runtime_ms\n"));
}

#[test]
fn sweep_repeats_byte_for_byte() {
    let args = [
        "sweep",
        "--gen",
        "random_gaussian",
        "--dims",
        "2,5",
        "--count",
        "10",
        "--seed",
        "7",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["sweep", "--gen", "shifted_sum", "--dims", "0,4"][..],
        &["analyze", "--dim", "3"],
        &["analyze", "--gen", "orthonormal"],
        &[
            "analyze",
            "--gen",
            "orthonormal",
            "--dim",
            "2",
            "--samples",
            "0",
        ],
        &[
            "analyze",
            "--gen",
            "orthonormal",
            "--dim",
            "2",
            "--rank-tol",
            "0",
        ],
        &["analyze", "--gen", "nonsense", "--dim", "2"],
        &["frobnicate"],
        &[],
    ] {
        let out = run(args);
        assert_eq!(out.code, EXIT_INPUT, "{args:?}: {}", out.stderr);
        assert!(!out.stderr.is_empty(), "{args:?} printed nothing");
    }
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["sweep", "--help"]);
    assert_eq!(help.code, EXIT_OK);
    assert!(help.stdout.contains("runtime_ms"));
    assert_eq!(run(&["--version"]).code, EXIT_OK);
}

#[test]
fn generate_csv_requires_real_zero_tail() {
    let out = run(&[
        "generate",
        "--gen",
        "shifted_sum",
        "--dim",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(out.stdout.lines().count(), 3);
    let out = run(&[
        "generate",
        "--gen",
        "random_gaussian",
        "--dim",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(out.code, EXIT_INPUT);
}
