use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use soliton_core::manufactured::Manufactured;
use soliton_core::{Grid, GridFunction};

const BIN: &str = env!("CARGO_BIN_EXE_acyl-soliton");

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/manufactured_F.csv")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("KRS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_field(path: &Path) -> GridFunction {
    GridFunction::from_csv(fs::read(path).unwrap().as_slice()).unwrap()
}

#[test]
fn fixture_matches_the_closed_form() {
    let f = read_field(&fixture());
    assert!(f.grid().same_as(&Grid::standard()));
    let exact = Manufactured::new(0.25).rhs_on(&Grid::standard()).unwrap();
    assert!(f.sup_distance(&exact).unwrap() <= 1e-12);
}

#[test]
fn weights_window_zero_two_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["weights", "--window", "0", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(dir.path().join("weights.csv")).unwrap(),
        "epsilon,mu,branch\n"
    );
    let m = manifest(dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["notes"]["margin"], 0.0);
    assert_eq!(m["notes"]["fredholm"], true);
    assert_eq!(m["notes"]["boundary_weights"].as_array().unwrap().len(), 2);
}

#[test]
fn weights_in_a_wide_window_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["weights", "--window", "-1", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("weights.csv")).unwrap();
    let eps: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    // μ = 1 contributes 1 - √2
    assert!(eps.iter().any(|e| (e - (1.0 - 2f64.sqrt())).abs() < 1e-12), "{csv}");
    assert!(eps.iter().all(|&e| e > -1.0 && e < 3.0));
    assert_eq!(manifest(dir.path())["notes"]["fredholm"], false);
    // (-3, 5) needs eigenvalues up to 15, beyond the default cut-off
    let out = run(&["weights", "--window", "-3", "5"], &dir.path().join("wide"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_ma_recovers_the_fixture_potential() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve-ma", "--rhs", fixture().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let phi = read_field(&dir.path().join("phi.csv"));
    let exact = Manufactured::new(0.25).phi_on(phi.grid());
    assert!(phi.sup_distance(&exact).unwrap() <= 1e-6);
    let path: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("path.json")).unwrap()).unwrap();
    assert_eq!(path["status"], "converged");
    assert_eq!(path["records"].as_array().unwrap().len(), 11);
    let m = manifest(dir.path());
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"], serde_json::json!(["path.json", "phi.csv"]));
}

#[test]
fn large_data_stops_with_partial_path() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.csv");
    let f = read_field(&fixture()).scaled(1e3);
    fs::write(&big, f.to_csv()).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["solve-ma", "--rhs", big.to_str().unwrap()], &out_dir);
    let code = out.status.code().unwrap();
    assert!(code == 2 || code == 3, "{code}");
    let path: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("path.json")).unwrap()).unwrap();
    assert_eq!(path["status"], "failed");
    assert!(!path["records"].as_array().unwrap().is_empty());
    let m = manifest(&out_dir);
    assert_eq!(m["status"], "failed");
    assert_eq!(m["exit_code"], code);
    assert!(!out_dir.join("phi.csv").exists());
}

#[test]
fn verification_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("loose.cfg");
    fs::write(&cfg, "# stop Newton early\ncontinuity.tolerance = 1e-2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--rhs",
            fixture().to_str().unwrap(),
        ],
        &out_dir,
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["checks"][0]["name"], "equation_residual");
    assert_eq!(report["checks"][0]["pass"], false);
    assert_eq!(manifest(&out_dir)["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("grid.h = -1\n", "grid.h"),
        ("model.n = 1\nsolver.speed = 3\n", "line 2"),
        ("glue.t0 3\n", "line 1"),
    ] {
        let cfg = dir.path().join("bad.cfg");
        fs::write(&cfg, text).unwrap();
        let out = run(&["report", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{err}");
    }
    assert!(!dir.path().join("out").exists());
    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["solve-ma"], &dir.path().join("x")).status.code(), Some(1));
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let status = Command::new(BIN)
        .args(["spectrum"])
        .env("KRS_OUT_DIR", &env_dir)
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(env_dir.join("spectrum.csv").exists());
    let flag_dir = dir.path().join("from_flag");
    let status = Command::new(BIN)
        .args(["spectrum", "--out"])
        .arg(&flag_dir)
        .env("KRS_OUT_DIR", &env_dir)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag_dir.join("spectrum.csv").exists());
}

#[test]
fn linear_solve_reports_order_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "solve-linear",
            "--rhs",
            fixture().to_str().unwrap(),
            "--order",
            "--plot",
            "--log-scale",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let diag: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert!(diag["convergence_order"].as_f64().unwrap() >= 1.9);
    assert!(diag["relative_residual"].as_f64().unwrap() <= 1e-12);
    let svg = fs::read_to_string(dir.path().join("u.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("log10"));
}

#[test]
fn glue_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["glue", "--inner", "cigar", "--t0", "3", "--margin", "0.01"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let block = fs::read_to_string(dir.path().join("glued_model.txt")).unwrap();
    assert!(block.starts_with("kind = glued\n") && block.contains("glue.t0 = 3\n"));
    let c = read_field(&dir.path().join("coefficient.csv"));
    let g = *c.grid();
    assert!((g.nearest(3.5)..g.len()).all(|i| c.values()[i] == 1.0));
    assert!(manifest(dir.path())["notes"]["region_min"].as_f64().unwrap() >= 0.01);

    let rep = dir.path().join("report");
    assert_eq!(run(&["report", "--model", "glued"], &rep).status.code(), Some(0));
    let r: Value = serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert!(r["poincare"]["lambda_min"].as_f64().unwrap() > 0.0);
    assert_eq!(r["references"][0]["value"], 0.125);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn identical_runs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run(&["verify", "--model", "glued", "--decay"], d);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_eq!(sa.len(), 4);
    assert_eq!(sa, sb);
    assert_eq!(manifest(&a)["config_hash"], manifest(&b)["config_hash"]);
}
