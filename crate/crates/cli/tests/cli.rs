use std::collections::BTreeSet;
use std::process::{Command, Output};

use serde_json::Value;

fn nzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nzeta"))
        .args(args)
        .env_remove("NZETA_MAX_EVALS")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = nzeta(&a);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stderr))
    });
    (v, out.status.code().unwrap())
}

fn schema() -> jsonschema::JSONSchema {
    let text = include_str!("../../../docs/report.schema.json");
    let s: &'static Value = Box::leak(Box::new(serde_json::from_str(text).unwrap()));
    jsonschema::JSONSchema::compile(s).expect("schema compiles")
}

fn assert_valid(v: &Value) {
    let s = schema();
    let msgs: Vec<String> = match s.validate(v) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "schema violations:\n{}", msgs.join("\n"));
}

const EX1: [&str; 7] = ["--f", "x^2-y", "--g", "x^2*y", "--p", "3", "--s-samples=0,0.2,-0.2"];

#[test]
fn example_all_reports_expected_poles() {
    let mut args = vec!["all"];
    args.extend(EX1);
    let (v, code) = json(&args);
    assert_eq!(code, 0);
    assert_valid(&v);
    let poles: BTreeSet<&str> = v["poles"]["actual_real_poles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["real_part"].as_str().unwrap())
        .collect();
    assert_eq!(poles, BTreeSet::from(["-1", "1/2", "1", "3/2"]));
    assert_eq!(v["poles"]["largest_negative"]["value"], "-1");
    assert_eq!(v["poles"]["smallest_positive"]["value"], "1/2");
    assert_eq!(v["band"]["lower"], "-1");
    assert_eq!(v["band"]["upper"], "1/2");
    assert_eq!(v["nondegeneracy"]["nondegenerate"], true);
    for s in v["verify"]["samples"].as_array().unwrap() {
        assert_eq!(s["within_bound"], true, "{s}");
    }
}

#[test]
fn degenerate_pair_exits_2_with_witness() {
    let (v, code) = json(&["nondeg", "--f", "(x+y)^2", "--g", "x*y", "--p", "3"]);
    assert_eq!(code, 2);
    assert_valid(&v);
    let w = &v["nondegeneracy"]["witness"];
    assert_eq!(v["nondegeneracy"]["nondegenerate"], false);
    assert_eq!(w["point"], serde_json::json!([2, 1]));

    let out = nzeta(&["zeta", "--f", "(x+y)^2", "--g", "x*y", "--p", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error [residue]"), "{err}");
    assert!(err.contains("point [2, 1]"), "{err}");
}

#[test]
fn allow_degenerate_proceeds() {
    let out = nzeta(&["zeta", "--f", "(x+y)^2", "--g", "x*y", "--p", "3", "--allow-degenerate"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn twisted_monomials_vanish() {
    let (v, code) = json(&["zeta", "--f", "x", "--g", "y", "--p", "5", "--char", "mult:e=1,M=2,k=1"]);
    assert_eq!(code, 0);
    assert_valid(&v);
    assert_eq!(v["zeta"]["canonical"]["numerator_text"], "0");
    assert_eq!(v["zeta"]["canonical"]["denominator"], serde_json::json!(["1"]));
}

#[test]
fn every_command_matches_schema() {
    for cmd in ["polyhedron", "fan", "nondeg", "zeta", "poles", "verify", "all"] {
        let mut args = vec![cmd];
        args.extend(EX1);
        let (v, code) = json(&args);
        assert_eq!(code, 0, "{cmd}");
        assert_eq!(v["command"], cmd);
        assert_valid(&v);
    }
    let (v, _) = json(&["all", "--f", "x^2+y^3", "--g", "x*y+x^3", "--p", "5", "--char", "mult:e=1,M=4,k=1"]);
    assert_valid(&v);
}

#[test]
fn output_is_deterministic() {
    for fmt in ["json", "text"] {
        let args = ["all", "--f", "x^2-y", "--g", "x^2*y", "--p", "3", "--format", fmt, "--s-samples", "0.1"];
        let a = nzeta(&args);
        let b = nzeta(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{fmt}");
    }
}

#[test]
fn text_output_names_justifications() {
    let out = nzeta(&["poles", "--f", "x^2-y", "--g", "x^2*y", "--p", "3"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Thm-negative-(2)"), "{text}");
    assert!(text.contains("Thm-positive-(1.a')"), "{text}");
    assert!(text.contains("Remark-Char-i"), "{text}");
}

#[test]
fn budget_overflow_exits_3() {
    let out = nzeta(&["zeta", "--f", "x^2-y", "--g", "x^2*y", "--p", "3", "--max-evals", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_nzeta"))
        .args(["zeta", "--f", "x^2-y", "--g", "x^2*y", "--p", "3"])
        .env("NZETA_MAX_EVALS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn input_errors_exit_1() {
    for args in [
        vec!["zeta", "--f", "x^2-", "--g", "y", "--p", "3"],
        vec!["zeta", "--f", "x", "--g", "y", "--p", "4"],
        vec!["zeta", "--f", "x", "--g", "y", "--p", "3", "--char", "mult:e=1,M=3,k=1"],
        vec!["zeta", "--f", "x*z", "--g", "y", "--p", "3", "--vars", "x,y"],
        vec!["verify", "--f", "x^2-y", "--g", "x^2*y", "--p", "3", "--s-samples", "0.7"],
    ] {
        let out = nzeta(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("error ["), "{args:?}");
    }
}

#[test]
fn uncertified_samples_warn_without_failing() {
    let args = [
        "verify", "--f", "x^2+y^3", "--g", "x*y+x^3", "--p", "5", "--char", "mult:e=1,M=4,k=1",
        "--s-samples", "0.1", "--depth", "3",
    ];
    let (v, code) = json(&args);
    assert_eq!(code, 0);
    assert_valid(&v);
    let sample = &v["verify"]["samples"][0];
    assert_eq!(sample["status"], "uncertified");
    assert!(sample["bound"].is_null());
    let err = String::from_utf8_lossy(&nzeta(&args).stderr).to_string();
    assert!(err.contains("no certified tail bound"), "{err}");
}
