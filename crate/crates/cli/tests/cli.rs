use std::path::Path;
use std::process::{Command, Output};

use liepair_core::{catalog, io};
use serde_json::Value;

fn liepair(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liepair"))
        .args(args)
        .current_dir(dir)
        .env_remove("LIEPAIR_PROFILE")
        .output()
        .unwrap()
}

fn json(dir: &Path, args: &[&str]) -> (i32, Value) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let out = liepair(dir, &a);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

#[test]
fn catalog_emit_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for name in catalog::PAIR_NAMES {
        let out = liepair(dir.path(), &["catalog", "emit", name]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let (p, flag) = io::read_pair(&text).unwrap();
        assert!(flag);
        assert_eq!(io::write_pair(&p, true).unwrap(), text, "{name}");
    }
}

#[test]
fn heisenberg_file_is_critical() {
    let dir = tempfile::tempdir().unwrap();
    let out = liepair(dir.path(), &["catalog", "emit", "heisenberg-sl3", "--out", "heisenberg-sl3.pair"]);
    assert!(out.status.success());
    let (code, v) = json(dir.path(), &["critical", "heisenberg-sl3.pair"]);
    assert_eq!(code, 0);
    assert_eq!(v["criticality"]["is_critical"], Value::Bool(true));
    assert!((v["criticality"]["energy"].as_f64().unwrap() - 9.0 / 19.0).abs() < 1e-12);
}

#[test]
fn flow_writes_trajectory_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "flow",
        "random",
        "--n",
        "2",
        "--algebra",
        "sl2R",
        "--seed",
        "7",
        "--trajectory",
        "t.csv",
        "--record-every",
        "5",
    ];
    let a = liepair(dir.path(), &args);
    let ta = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let b = liepair(dir.path(), &args);
    let tb = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(ta, tb);
    let mut lines = ta.lines();
    assert_eq!(lines.next(), Some("step,energy,grad_norm,jacobi_res,hom_res,norm"));
    let energies: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(energies.len() > 2);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}

#[test]
fn fan_out_assigns_strata() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) =
        json(dir.path(), &["flow", "random", "--n", "2", "--algebra", "sl2", "--count", "6", "--trajectory", "t.csv"]);
    assert_eq!(code, 0);
    assert_eq!(v["runs"].as_array().unwrap().len(), 6);
    let strata: f64 = v["strata"].as_array().unwrap().iter().map(|s| s["count"].as_f64().unwrap()).sum();
    assert_eq!(strata, 6.0);
    for s in 0..6 {
        assert!(dir.path().join(format!("t-{s}.csv")).is_file());
    }
}

#[test]
fn random_ambient_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["random", "--mode", "ambient", "--n", "2", "--seed", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["in_variety"], Value::Bool(false));
    let (_, v) = json(
        dir.path(),
        &[
            "random",
            "--mode",
            "orbit-perturb",
            "--n",
            "3",
            "--algebra",
            "sl3",
            "--base",
            "heisenberg-sl3",
            "--seed",
            "2",
        ],
    );
    assert_eq!(v["in_variety"], Value::Bool(true));
}

#[test]
fn abelian_generator_kills_jacobi() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) =
        json(dir.path(), &["validate", "random", "--mode", "abelian", "--n", "2", "--algebra", "sl2", "--seed", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["residuals"]["jacobi"].as_f64(), Some(0.0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(liepair(d, &["critical", "missing.json"]).status.code(), Some(3));
    std::fs::write(d.join("bad.json"), "{ not json").unwrap();
    assert_eq!(liepair(d, &["moment", "bad.json"]).status.code(), Some(3));
    assert_eq!(liepair(d, &["moment", "--bogus"]).status.code(), Some(1));
    assert_eq!(liepair(d, &["critical", "principal-sl3"]).status.code(), Some(1));
    assert_eq!(liepair(d, &["gradation", "principal-sl3"]).status.code(), Some(1));
    // a flow capped far before convergence
    assert_eq!(liepair(d, &["flow", "random", "--n", "2", "--seed", "1", "--max-steps", "2"]).status.code(), Some(2));
    // an ambient point violates the guard at once
    assert_eq!(liepair(d, &["flow", "random", "--mode", "ambient", "--n", "2", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(liepair(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn off_variety_file_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"n":2,"algebra":"sl2","mu":[],"phi":[[0,0],[1,0],[0,1]]}"#;
    std::fs::write(dir.path().join("p.json"), text).unwrap();
    let (code, v) = json(dir.path(), &["validate", "p.json"]);
    assert_eq!(code, 1);
    assert!(v["residuals"]["hom"].as_f64().unwrap() > 1e-3);
}

#[test]
fn profile_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |profile: &str| -> Value {
        let out = Command::new(env!("CARGO_BIN_EXE_liepair"))
            .args(["critical", "heisenberg-sl3", "--format", "json"])
            .current_dir(dir.path())
            .env("LIEPAIR_PROFILE", profile)
            .output()
            .unwrap();
        serde_json::from_slice(&out.stdout).unwrap()
    };
    assert_eq!(run("strict")["criticality"]["tolerance"].as_f64(), Some(1e-10));
    assert_eq!(run("loose")["criticality"]["tolerance"].as_f64(), Some(1e-6));
    let (_, v) = json(dir.path(), &["critical", "heisenberg-sl3", "--tol", "1e-3"]);
    assert_eq!(v["criticality"]["tolerance"].as_f64(), Some(1e-3));
}

#[test]
fn moment_oracle_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) =
        json(dir.path(), &["moment", "random", "--mode", "ambient", "--n", "4", "--algebra", "sl3", "--oracle"]);
    assert_eq!(code, 0);
    assert_eq!(v["oracle"]["agrees"], Value::Bool(true));
}

#[test]
fn emitted_products_are_readable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(liepair(d, &["extend", "heisenberg-sl3", "--emit", "prod.json"]).status.success());
    let (code, v) = json(d, &["critical", "prod.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["criticality"]["is_critical"], Value::Bool(true));
    assert!(liepair(d, &["decompose", "prod.json", "--emit", "nil.json"]).status.success());
    let (_, v) = json(d, &["gradation", "nil.json"]);
    assert_eq!(v["ok"], Value::Bool(true));
    assert!(liepair(d, &["reductive", "borel-sl3", "--emit", "red.json"]).status.success());
    let (code, v) = json(d, &["classify-abelian", "red.json"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["classification"]["minimal"], Value::Bool(true));
}

#[test]
fn fixtures_match_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = json(dir.path(), &["catalog", "--fixtures"]);
    assert_eq!(code, 0);
    for (_, inst) in v.as_object().unwrap() {
        for (key, q) in inst.as_object().unwrap() {
            if let Some(e) = q.get("error") {
                assert!(e.as_f64().unwrap() < 1e-12, "{key}: {q}");
            }
        }
    }
    assert_eq!(v["heisenberg-sl3"]["weights"]["d_ints"], serde_json::json!([2, 2, 4]));
}

#[test]
fn help_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = String::from_utf8(liepair(dir.path(), &["flow", "--help"]).stdout).unwrap();
    for flag in [
        "--step",
        "--tol",
        "--max-steps",
        "--guard",
        "--record-every",
        "--seed",
        "--trajectory",
        "--count",
        "--profile",
    ] {
        assert!(out.contains(flag), "{flag}");
    }
}
