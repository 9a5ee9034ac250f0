use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn schamel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schamel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn wave_writes_positive_profile() {
    let o = schamel(&["wave", "--period", "16", "--modulus", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,phi,psi,dphi_dx"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1024);
    assert!(rows.iter().all(|r| r.len() == 4 && r[1] > 0.0));
    assert!((rows[1][0] - 16.0 / 1024.0).abs() < 1e-15);

    let manifest: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(manifest["command"], "wave");
    assert_eq!(manifest["parameters"]["period"], 16.0);
    assert_eq!(manifest["parameters"]["samples"], 1024);
    for key in ["speed", "beta1", "beta2", "beta3", "a_integration", "eta", "m_tilde", "max_modulus"] {
        assert!(manifest["wave"][key].is_f64(), "{key}");
    }
}

#[test]
fn floats_round_trip() {
    let o = schamel(&["wave", "--period", "16", "--modulus", "0.3", "--samples", "8"]);
    let text = stdout(&o);
    let cell = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let mantissa = cell.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
    let v: f64 = cell.parse().unwrap();
    assert_eq!(format!("{v:.16e}"), cell);
}

#[test]
fn out_flag_writes_sidecar_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wave.csv");
    let o = schamel(&[
        "wave",
        "--period",
        "20",
        "--modulus",
        "0.5",
        "--samples",
        "64",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 65);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("wave.csv.json")).unwrap()).unwrap();
    assert_eq!(meta["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(meta["parameters"]["modulus"], 0.5);
}

#[test]
fn short_period_is_a_domain_error() {
    let o = schamel(&["spectrum", "--period", "10", "--modulus", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("period must exceed 4π"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn bad_arguments_exit_two() {
    for args in [
        &["wave", "--period", "16", "--modulus", "0.95"][..],
        &["wave", "--period", "16"][..],
        &["wave", "--period", "abc", "--modulus", "0.3"][..],
        &["evolve", "--period", "16", "--modulus", "0.3", "--perturb", "1e-3", "--tmax", "1", "--dt", "0.3"][..],
        &["evolve", "--period", "16", "--modulus", "0.3", "--perturb", "1e-3", "--tmax", "1", "--dt", "1e-3", "--scheme", "euler"][..],
        &["family", "--period", "16", "--k-min", "0.001", "--k-max", "0.5", "--steps", "3"][..],
        &["spectrum", "--period", "16", "--modulus", "0.3", "--grid", "128"][..],
        &["frobnicate"][..],
    ] {
        assert_eq!(schamel(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn evolve_is_deterministic() {
    let args = [
        "evolve", "--period", "16", "--modulus", "0.3", "--perturb", "1e-3", "--tmax", "0.5", "--dt", "1e-2",
        "--seed", "42", "--record-every", "10",
    ];
    let a = schamel(&args);
    let b = schamel(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("t,rho,E,Q,V"));
    assert_eq!(text.lines().count(), 7);
    let other = schamel(&[
        "evolve", "--period", "16", "--modulus", "0.3", "--perturb", "1e-3", "--tmax", "0.5", "--dt", "1e-2",
        "--seed", "43", "--record-every", "10",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn family_rows_follow_input_order() {
    let o = schamel(&["family", "--period", "16", "--k-min", "0.05", "--k-max", "0.7", "--steps", "14"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let ks: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ks.len(), 14);
    assert!(ks.windows(2).all(|w| w[0] < w[1]));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",stable")));
}

#[test]
fn stability_reports_json() {
    let o = schamel(&["stability", "--period", "16", "--modulus", "0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(report["phi_analytic"].as_f64().unwrap() < 0.0);
    assert!(report["f2"].as_f64().unwrap() > 0.0);
}

#[test]
fn spectrum_rows() {
    let o = schamel(&["spectrum", "--period", "16", "--modulus", "0.3", "--grid", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("index,lambda_analytic,lambda_numeric,abs_gap,rel_gap"));
    assert_eq!(text.lines().count(), 6);
}
