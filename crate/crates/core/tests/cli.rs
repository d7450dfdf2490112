mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

use common::*;
use paley_core::cli::techprop_output;
use paley_core::json::to_canonical_value;
use paley_core::multiindex::Smoothness;
use paley_core::operators::{estimate_paley_constant, PaleySampler};
use paley_core::property_o::find_witness;
use paley_core::riesz::riesz_summary;
use paley_core::sequence::{build_sequence_with, BuildOptions, LacunaryPlan};

fn paley(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_paley"));
    cmd.args(args).env_remove("PALEY_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad stdout ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn reference_input(dir: &Path) -> String {
    write(dir, "s.json", &json!({"generators": [[2, 0], [0, 1]]}))
}

#[test]
fn property_o_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = paley(&["check-property-o", "--input", &reference_input(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
    let w = find_witness(&reference_smoothness()).unwrap();
    assert_eq!(stdout_json(&out), to_canonical_value(&w).unwrap());
    assert_eq!(stdout_json(&out)["c"], json!(["1/2", "1/1"]));

    let bad = write(dir.path(), "bad.json", &json!({"generators": [[1, 1]]}));
    let out = paley(&["check-property-o", "--input", &bad], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["failure"], "no_witness");

    let out = paley(&["check-property-o", "--bogus"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = paley(&["build-sequence", "--K", "three"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{not json").unwrap();
    let out = paley(&["check-property-o", "--input", broken.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"], "validation");
}

#[test]
fn check_smoothness_reports_closure() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "rows.json", &json!([[0, 0], [1, 1]]));
    let out = paley(&["check-smoothness", "--input", &input], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["is_smoothness"], false);
    assert_eq!(v["saturation"], json!([[0, 0], [0, 1], [1, 0], [1, 1]]));
}

#[test]
fn wrappers_match_library_calls() {
    let dir = tempfile::tempdir().unwrap();
    let input = reference_input(dir.path());
    let plan_path = dir.path().join("plan.json");
    let out = paley(
        &["build-sequence", "--input", &input, "--K", "3", "--output", plan_path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let file: Value = serde_json::from_str(&std::fs::read_to_string(&plan_path).unwrap()).unwrap();
    let s = reference_smoothness();
    let w = find_witness(&s).unwrap();
    let plan = build_sequence_with(&s, &w, 3, 100.0, 10.0, &BuildOptions::default()).unwrap();
    assert_eq!(file, to_canonical_value(&plan).unwrap());
    let read_back: LacunaryPlan = serde_json::from_value(file).unwrap();
    assert_eq!(read_back.sequence, plan.sequence);

    let plan_arg = plan_path.to_str().unwrap();
    let out = paley(&["riesz-spectrum", "--input", plan_arg, "--count", "5"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v, to_canonical_value(&riesz_summary(&plan.sequence, 3, 5).unwrap()).unwrap());
    assert_eq!(v["size"], 27);

    let out = paley(
        &["estimate-paley", "--input", plan_arg, "--count", "3", "--matrix-dim", "1,2", "--seed", "4"],
        &[("PALEY_THREADS", "1")],
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let sampler = PaleySampler {
        count: 3,
        support: None,
        seed: 4,
        matrix_dims: vec![1, 2],
        quadrature: None,
    };
    let est = estimate_paley_constant(&plan.smoothness, &plan.sequence, &sampler).unwrap();
    assert_eq!(v["sup_ratio"], to_canonical_value(&est.sup_ratio).unwrap());
    assert_eq!(v["m"], json!([1, 2]));
    assert_eq!(v["plan_digest"].as_str().unwrap().len(), 64);

    let simple = write(dir.path(), "simple.json", &json!([[0, 0], [1, 0], [0, 1]]));
    let out = paley(&["techprop", "--input", &simple, "--D", "2", "--eps", "0.1"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let s = Smoothness::from_rows(&[vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
    let want = techprop_output(&s, &[10, 20, 40, 80], 2, 0.1, 0).unwrap();
    assert_eq!(stdout_json(&out), to_canonical_value(&want).unwrap());
}

#[test]
fn project_applies_the_composite() {
    let dir = tempfile::tempdir().unwrap();
    let input = reference_input(dir.path());
    let plan_path = dir.path().join("plan.json");
    let plan_arg = plan_path.to_str().unwrap();
    paley(&["build-sequence", "--input", &input, "--K", "2", "--output", plan_arg], &[]);
    let poly = write(
        dir.path(),
        "f.json",
        &json!({"dim": 2, "kind": "scalar", "terms": [
            {"n": [10, 100], "re": 1.0, "im": 0.0},
            {"n": [3, 4], "re": 2.0, "im": 0.0}
        ]}),
    );
    let out = paley(&["project", "--plan", plan_arg, "--input", &poly], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["projection"]["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["composite"]["terms"][0]["n"], json!([10, 100]));
    assert_eq!(v["outside_sigma"], 1);
}

#[test]
fn cr_norm_of_scalars() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.json", &json!({"matrices": [[[[3.0, 0.0]]], [[[0.0, 4.0]]]]}));
    let out = paley(&["cr-norm", "--input", &input], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["value"].as_f64().unwrap() - 5.0).abs() < 1e-6);
    assert_eq!(v["restarts_used"], 4);
}

#[test]
fn run_all_replays() {
    let dir = tempfile::tempdir().unwrap();
    let input = reference_input(dir.path());
    let report = dir.path().join("report.json");
    let args = ["run-all", "--input", &input, "--K", "2", "--count", "2", "--matrix-dim", "1,2"];
    let mut first = args.to_vec();
    first.extend(["--output", report.to_str().unwrap()]);
    let out = paley(&first, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut again = args.to_vec();
    again.extend(["--replay", report.to_str().unwrap()]);
    let out = paley(&again, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["matches"], true);
    let mut other = again.clone();
    other[4] = "3";
    let out = paley(&other, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stdout_json(&out)["matches"], false);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let input = reference_input(dir.path());
    let out = paley(&["check-property-o", "--input", &input], &[("PALEY_THREADS", "0")]);
    assert_eq!(out.status.code(), Some(2));
    let out = paley(&["check-property-o", "--input", &input], &[("PALEY_THREADS", "2")]);
    assert_eq!(out.status.code(), Some(0));
}
