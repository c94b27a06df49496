//! End-to-end tests of the `clipcx` binary: exit codes, artifacts, and
//! report determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn clipcx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clipcx"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch clipcx")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_two_well(dir: &Path) -> std::path::PathBuf {
    let text = r#"{
        "n": 1,
        "base": {"ridge": 0.0, "quad_terms": [], "box": {"l": [null], "u": [null]}},
        "terms": [
            {"loss": {"kind": "square"}, "a": [1.0], "b": 0.0, "weight": 1.0, "alpha": 1.0},
            {"loss": {"kind": "square"}, "a": [1.0], "b": -10.0, "weight": 1.0, "alpha": 1.0}
        ]
    }"#;
    let path = dir.join("two_well.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_writes_report_and_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write_two_well(tmp.path());
    let out = clipcx(
        &[
            "solve",
            "--problem",
            problem.to_str().unwrap(),
            "--method",
            "altmin",
            "--out",
            "run",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");

    let report = fs::read_to_string(tmp.path().join("run/report.txt")).unwrap();
    assert!(report.contains("solver: altmin"));
    assert!(report.contains("objective: 1.0000"), "{report}");

    // Objective trace nonincreasing, one row per iteration.
    let csv = fs::read_to_string(tmp.path().join("run/objective_trace.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!values.is_empty());
    for w in values.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{values:?}");
    }

    // Lambda rows stay in [0, 1].
    let lam = fs::read_to_string(tmp.path().join("run/lambda_trace.csv")).unwrap();
    for line in lam.lines().skip(1) {
        for field in line.split(',').skip(1) {
            let v: f64 = field.parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn bound_below_solve_value() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write_two_well(tmp.path());
    let p = problem.to_str().unwrap();

    let solve = clipcx(&["solve", "--problem", p, "--out", "s"], tmp.path());
    assert!(solve.status.success());
    let value: f64 = stdout(&solve)
        .lines()
        .find_map(|l| l.strip_prefix("objective: ").map(|v| v.parse().unwrap()))
        .unwrap();

    let bound = clipcx(&["bound", "--problem", p, "--out", "b"], tmp.path());
    assert!(bound.status.success());
    let q: f64 = stdout(&bound)
        .lines()
        .find_map(|l| l.strip_prefix("lower bound: ").map(|v| v.parse().unwrap()))
        .unwrap();
    assert!(value - q >= -1e-6, "gap negative: p {value} q {q}");
}

#[test]
fn exact_modes_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write_two_well(tmp.path());
    let p = problem.to_str().unwrap();
    let mut values = Vec::new();
    for mode in ["exhaustive", "bnb"] {
        let out = clipcx(
            &["exact", "--problem", p, "--mode", mode, "--out", mode],
            tmp.path(),
        );
        assert!(out.status.success(), "{out:?}");
        let v: f64 = stdout(&out)
            .lines()
            .find_map(|l| l.strip_prefix("objective: ").map(|s| s.parse().unwrap()))
            .unwrap();
        values.push(v);
    }
    assert!((values[0] - 1.0).abs() < 1e-6, "{values:?}");
    assert!((values[0] - values[1]).abs() < 1e-4, "{values:?}");
}

#[test]
fn subset_sum_pipeline_reports_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = clipcx(
        &["example", "subset-sum", "--list", "2,3,-5", "--out", "gadget"],
        tmp.path(),
    );
    assert!(gen.status.success(), "{gen:?}");
    assert!(stdout(&gen).contains("reporting offset: -0.75"));

    let out = clipcx(
        &[
            "exact",
            "--problem",
            "gadget/problem.json",
            "--m-limit",
            "12",
            "--offset",
            "-0.75",
            "--out",
            "gadget",
        ],
        tmp.path(),
    );
    assert!(out.status.success(), "{out:?}");
    let v: f64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("objective: ").map(|s| s.parse().unwrap()))
        .unwrap();
    assert!(v.abs() <= 1e-6, "gadget value {v}");
    let report = fs::read_to_string(tmp.path().join("gadget/exact.txt")).unwrap();
    assert!(report.contains("reporting offset: -0.75"), "{report}");
}

#[test]
fn example_generators_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for (args, name) in [
        (vec!["example", "regression", "--seed", "3"], "regression"),
        (
            vec![
                "example", "logistic", "--seed", "3", "--total", "200", "--train", "50",
                "--outliers", "10",
            ],
            "logistic",
        ),
        (vec!["example", "lane"], "lane"),
    ] {
        for run in ["a", "b"] {
            let dir = format!("{name}_{run}");
            let mut full = args.clone();
            full.extend(["--out", &dir]);
            let out = clipcx(&full, tmp.path());
            assert!(out.status.success(), "{name}: {out:?}");
        }
        let a = fs::read(tmp.path().join(format!("{name}_a/problem.json"))).unwrap();
        let b = fs::read(tmp.path().join(format!("{name}_b/problem.json"))).unwrap();
        assert_eq!(a, b, "{name} generator not deterministic");
    }
    // Logistic also emits its held-out test set.
    assert!(tmp.path().join("logistic_a/test_set.csv").exists());
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    // Missing file: usage/I-O error.
    let out = clipcx(&["solve", "--problem", "missing.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // Malformed problem document: parse error.
    fs::write(tmp.path().join("bad.json"), "not json").unwrap();
    let out = clipcx(&["solve", "--problem", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{out:?}");

    // Too many terms for exhaustive enumeration: solver error.
    let gen = clipcx(
        &[
            "example", "subset-sum", "--list", "1,2,3,4,5,6,7,8,9,10", "--out", "big",
        ],
        tmp.path(),
    );
    assert!(gen.status.success());
    let out = clipcx(
        &["exact", "--problem", "big/problem.json", "--m-limit", "12"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{out:?}");
}

#[test]
fn solve_report_deterministic_modulo_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = write_two_well(tmp.path());
    let p = problem.to_str().unwrap();
    for dir in ["r1", "r2"] {
        let out = clipcx(&["solve", "--problem", p, "--out", dir], tmp.path());
        assert!(out.status.success());
    }
    let strip = |path: &str| -> String {
        fs::read_to_string(tmp.path().join(path))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall time"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip("r1/report.txt"), strip("r2/report.txt"));
    assert_eq!(
        fs::read_to_string(tmp.path().join("r1/objective_trace.csv")).unwrap(),
        fs::read_to_string(tmp.path().join("r2/objective_trace.csv")).unwrap()
    );
}
