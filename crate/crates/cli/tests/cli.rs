use std::path::Path;
use std::process::Command;

use pdwg_cli::{describe, run, ExperimentConfig, RunOptions};
use pdwg_core::analysis::read_vtk;

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out: Some(dir.to_path_buf()), threads: 1, quad_degree: None }
}

#[test]
fn csv_has_one_row_per_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config(r#"{"example": 1, "p": [2], "refinements": [1, 2]}"#), &opts(dir.path())).unwrap();
    assert!(summary.all_converged);
    let text = std::fs::read_to_string(dir.path().join("ex1_p2_h1-2.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    assert_eq!(&rows[0][col("rate_e_u")], "");
    let rate: f64 = rows[1][col("rate_e_u")].parse().unwrap();
    let (e0, e1): (f64, f64) = (rows[0][col("e_u")].parse().unwrap(), rows[1][col("e_u")].parse().unwrap());
    assert!((rate - (e0 / e1).log2()).abs() < 1e-3);
    assert!(dir.path().join("ex1_p2_h1-2.md").exists());
    assert!(dir.path().join("ex1_p2_h1-2.json").exists());
}

#[test]
fn field_export_writes_one_vtk_per_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(r#"{"example": 5, "p": [2], "refinements": [2, 4], "export_fields": true}"#);
    run(&c, &opts(dir.path())).unwrap();
    let mut vtk: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "vtk"))
        .collect();
    vtk.sort();
    assert_eq!(vtk.len(), 2);
    for path in &vtk {
        let field = read_vtk(path).unwrap();
        assert_eq!(field.vectors.len(), field.cells.len());
        assert!(field.vectors.iter().any(|v| v.norm() > 0.0));
    }
    assert!(vtk[0].ends_with("ex5_p2_h2_eta.vtk"));
}

#[test]
fn log_records_default_eps0_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(r#"{"example": 1, "p": [3], "refinements": [1], "overrides": {"rho1": 900, "rho2": 900, "max_iters": 5}}"#);
    let summary = run(&c, &opts(dir.path())).unwrap();
    assert!(!summary.all_converged);
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ex1_p3_h1.json")).unwrap()).unwrap();
    assert!((log["default_eps0"].as_f64().unwrap() - 1e-3).abs() < 1e-15);
    assert_eq!(log["rho1"].as_f64().unwrap(), 900.0);
    let case = &log["cases"][0];
    assert_eq!(case["iterations"].as_u64().unwrap(), 5);
    assert_eq!(case["history"].as_array().unwrap().len(), 5);
    assert!(!case["converged"].as_bool().unwrap());
}

#[test]
fn identical_configs_give_identical_tables() {
    let c = config(r#"{"example": 2, "p": [2], "refinements": [2]}"#);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&c, &opts(a.path())).unwrap();
    run(&c, &opts(b.path())).unwrap();
    let read = |d: &Path| std::fs::read_to_string(d.join("ex2_p2_h2.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn descriptions_list_default_rho() {
    assert!(describe(1, None).unwrap().contains("9*10^(p-1)"));
    assert!(describe(4, Some(1.0)).unwrap().contains("3000"));
    assert!(describe(5, None).unwrap().contains("50000"));
    assert!(describe(7, None).is_err());
}

#[test]
fn binary_reports_bad_config_and_describes() {
    let exe = env!("CARGO_BIN_EXE_pdwg");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"example": 1, "p": [0.5], "refinements": [2]}"#).unwrap();
    let out = Command::new(exe).args(["run", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let out = Command::new(exe).args(["describe", "2"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("Example 2"));
}

#[test]
fn binary_runs_a_config() {
    let exe = env!("CARGO_BIN_EXE_pdwg");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"example": 1, "p": [2], "refinements": [1]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(exe)
        .args(["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--quad-degree", "6"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("ex1_p2_h1.json")).unwrap()).unwrap();
    assert_eq!(log["quad_degree"].as_u64().unwrap(), 6);
}
