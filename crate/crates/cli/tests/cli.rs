use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eigenbound"));
    c.env_remove("EIGENBOUND_SEED");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn write_spec(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_unit_square_exits_zero() {
    let o = bin()
        .args(["validate", "--domain"])
        .arg(data("unit_square.json"))
        .args(["--r", "0.6,1.0,1.5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# eigenbound-report v1 domain=unit_square.json seed=20240601\n"));
    let checks: Vec<&str> = text.lines().filter(|l| l.starts_with("check,")).collect();
    assert!(checks.len() >= 9);
    assert!(checks.iter().all(|l| l.contains(",true,margin 0.02")));
}

#[test]
fn oracle_exits_zero() {
    let o = bin().args(["oracle", "--trials", "2000"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("oracle,")).count(), 4);
    assert!(text.contains("20000 trials, 0 failures"));
}

#[test]
fn grid_spec_without_bounding_box_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(&dir, "g.json", r#"{"type": "grid", "grid": {"shape": [2, 2], "cells": [1, 1, 1, 1]}}"#);
    let o = bin().args(["bound", "--mode", "certify", "--domain"]).arg(&spec).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bounding_box"));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(&dir, "bad.json", "{ not json");
    assert_eq!(bin().args(["bound", "--domain"]).arg(&bad).output().unwrap().status.code(), Some(2));
    let missing = dir.path().join("absent.json");
    assert_eq!(bin().args(["bound", "--domain"]).arg(&missing).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["bound"]).output().unwrap().status.code(), Some(2));
    let sq = data("unit_square.json");
    let cases: [&[&str]; 4] = [
        &["eig", "--kind", "poly", "--m", "3"],
        &["bound", "--r", "-1"],
        &["bound", "--kind", "heisenberg"],
        &["eig", "--kind", "robin", "--h", "0.3"],
    ];
    for args in cases {
        let o = bin().args(args).arg("--domain").arg(&sq).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = bin().args(["oracle"]).env("EIGENBOUND_SEED", "abc").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_precedence() {
    let header = |o: Output| stdout(&o).lines().next().unwrap().to_string();
    let o = bin().args(["oracle", "--trials", "10"]).output().unwrap();
    assert!(header(o).ends_with("seed=20240601"));
    let o = bin().args(["oracle", "--trials", "10"]).env("EIGENBOUND_SEED", "5").output().unwrap();
    assert!(header(o).ends_with("seed=5"));
    let o = bin().args(["oracle", "--trials", "10", "--seed", "7"]).env("EIGENBOUND_SEED", "5").output().unwrap();
    assert!(header(o).ends_with("seed=7"));
}

#[test]
fn sweep_keeps_one_row_per_bound() {
    let o = bin().args(["sweep", "--domain"]).arg(data("unit_square.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let ids: Vec<&str> = text.lines().filter(|l| l.starts_with("bound,")).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ids, ["lieb", "davies_lieb1", "davies_lieb2", "rfk_volume", "hersch_protter"]);
}

#[test]
fn robin_bound_rows_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = bin()
        .args(["bound", "--kind", "robin", "--sigma", "2", "--format", "json", "--out"])
        .arg(&out)
        .arg("--domain")
        .arg(data("unit_square.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.trim_start().starts_with('{'));
    assert!(text.contains("\"robin_thm_main\""));
    assert!(text.contains("\"appendix_convex\""));
    assert!(!text.contains("\"rfk_volume\""));
}

#[test]
fn eig_with_richardson() {
    let o = bin()
        .args(["eig", "--richardson", "--h", "0.03125", "--domain"])
        .arg(data("unit_square.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().find(|l| l.starts_with("eigenvalue,")).unwrap().to_string();
    let cols: Vec<&str> = row.split(',').collect();
    let value: f64 = cols[13].parse().unwrap();
    let extrapolated: f64 = cols[15].parse().unwrap();
    let exact = 2.0 * std::f64::consts::PI.powi(2);
    assert!((extrapolated - exact).abs() < (value - exact).abs());
    assert!((extrapolated - exact).abs() < 1e-2 * exact);
}

#[test]
fn estimate_mode_bounds_are_not_checked() {
    let o = bin()
        .args(["validate", "--mode", "estimate", "--samples", "500", "--r", "1.0", "--h", "0.015625", "--domain"])
        .arg(data("unit_disk.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let checked: Vec<&str> = text.lines().filter(|l| l.starts_with("check,")).collect();
    assert!(checked.iter().all(|l| !l.contains("@r=")));
    assert!(text.contains("fraction is an estimate"));
}

#[test]
fn heisenberg_bounds_from_spec() {
    let o = bin()
        .args(["bound", "--kind", "heisenberg", "--r", "2", "--cover-h", "0.2", "--cell", "0.05", "--domain"])
        .arg(data("heisenberg_cube.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("bound,heisenberg_eq1,,1,"));
    assert!(text.contains("bound,heisenberg_eq2,,1,"));
}

// The volume bound is attained by the disk, while the masked grid
// underestimates its eigenvalue; on a coarse grid the gap exceeds the margin.
#[test]
fn coarse_disk_fails_validation_but_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disk.csv");
    let o = bin()
        .args(["validate", "--mode", "estimate", "--samples", "200", "--r", "1.0", "--h", "0.03125", "--out"])
        .arg(&out)
        .arg("--domain")
        .arg(data("unit_disk.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL rfk_volume"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("check,rfk_volume,") && l.contains(",false,")));
}
