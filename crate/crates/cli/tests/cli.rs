use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const MODEL: &str = r#"{
  "alpha": {},
  "nu_E": {"densities": [{"family": "uniform", "lo": 0, "hi": 2, "height": 1}]},
  "nu_B": {"atoms": [[1, 1]]},
  "fixed_atoms": []
}"#;

const SEMICIRCLE: &str = r#"{"kind": "free", "a": 1, "eta": 0, "nu": {}}"#;

fn fcrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcrm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn law_of_compound_poisson_model() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let out = fcrm(&["law", "--model", s(&m), "--set", "[0,2)"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "free");
    assert_eq!(v["a"], 0.0);
    assert_eq!(v["eta"], 2.0);
    assert_eq!(v["nu"]["atoms"], serde_json::json!([[1.0, 2.0]]));
}

#[test]
fn semicircle_density_at_origin() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", SEMICIRCLE);
    let csv = dir.path().join("d.csv");
    let out = fcrm(&["density", "--triplet", s(&t), "--grid", "-3:3:600", "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,density"));
    let rows: Vec<(f64, f64)> = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (x, r) = l.split_once(',').unwrap();
            (x.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 600);
    let (_, rho0) = rows.iter().copied().min_by(|a, b| a.0.abs().total_cmp(&b.0.abs())).unwrap();
    assert!((rho0 - 1.0 / std::f64::consts::PI).abs() < 1e-3, "rho(0) = {rho0}");
}

#[test]
fn oracle_compare_passes_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let args = [
        "oracle-compare", "--model", s(&m), "--set", "[0,2)", "--n", "1000", "--seed", "42",
        "--ks-max", "0.05",
    ];
    let a = fcrm(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = fcrm(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("x,analytic_cdf,empirical_cdf\n"));
    assert!(text.lines().any(|l| l.starts_with("# ks,")));
}

#[test]
fn ks_threshold_breach_exits_5() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let out = fcrm(&[
        "oracle-compare", "--model", s(&m), "--set", "[0,2)", "--n", "50", "--seed", "1",
        "--ks-max", "0.0",
    ]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn classical_oracle_compare() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let out = fcrm(&[
        "oracle-compare", "--classical", "--model", s(&m), "--set", "[0,2)", "--reps", "20000",
        "--seed", "3", "--ks-max", "0.02",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn atom_at_zero_is_rejected() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", r#"{"kind": "free", "a": 0, "eta": 0, "nu": {"atoms": [[0, 1]]}}"#);
    let out = fcrm(&["validate", "--triplet", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("atom at zero"));
    let out = fcrm(&["density", "--triplet", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("atom at zero"));
}

#[test]
fn power_exponent_out_of_range_names_integrability() {
    let dir = TempDir::new().unwrap();
    let t = write(
        &dir,
        "t.json",
        r#"{"kind": "free", "a": 0, "eta": 0,
            "nu": {"densities": [{"family": "power", "p": 2.5, "c": 1, "side": "+"}]}}"#,
    );
    let out = fcrm(&["density", "--triplet", s(&t)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrability"));
}

#[test]
fn malformed_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let t = write(&dir, "t.json", "{ not json");
    assert_eq!(fcrm(&["law", "--triplet", s(&t)]).status.code(), Some(2));
    let m = write(&dir, "m.json", MODEL);
    assert_eq!(fcrm(&["law", "--model", s(&m), "--set", "[2,1)"]).status.code(), Some(2));
    assert_eq!(
        fcrm(&["density", "--model", s(&m), "--set", "[0,2)", "--grid", "0:1"]).status.code(),
        Some(2)
    );
}

#[test]
fn additivity_report() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let out = fcrm(&["additivity", "--model", s(&m), "--set", "[0,0.5)", "--set", "[0.5,2)"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exact"], true);
    assert_eq!(v["union"], "[0,2)");
    let overlapping = fcrm(&["additivity", "--model", s(&m), "--set", "[0,1)", "--set", "[0.5,2)"]);
    assert_eq!(overlapping.status.code(), Some(3));
}

#[test]
fn fixed_atoms_have_no_classical_counterpart() {
    let dir = TempDir::new().unwrap();
    let m = write(
        &dir,
        "m.json",
        r#"{"nu_E": {"densities": [{"family": "uniform", "lo": 0, "hi": 2, "height": 1}]},
            "nu_B": {"atoms": [[1, 1]]},
            "fixed_atoms": [{"location": 0.5, "triplet": {"kind": "free", "a": 0, "eta": 1, "nu": {"atoms": [[1, 1]]}}}]}"#,
    );
    let out = fcrm(&["classical", "--model", s(&m), "--set", "[0,2)"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("without fixed atoms"));
}

#[test]
fn classical_counterpart_is_poisson_lattice() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", MODEL);
    let out = fcrm(&["classical", "--model", s(&m), "--set", "[0,2)", "--grid", "0:6:50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let atoms: Vec<(f64, f64)> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# atom,"))
        .map(|l| {
            let (x, w) = l.split_once(',').unwrap();
            (x.parse().unwrap(), w.parse().unwrap())
        })
        .collect();
    // Poisson(2) masses at the integers.
    let p1 = atoms.iter().find(|a| a.0 == 1.0).unwrap().1;
    assert!((p1 - 2.0 * (-2.0f64).exp()).abs() < 1e-12);
}
