use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_beltrami"))
        .arg("--quiet")
        .arg("--out-dir")
        .arg(&out)
        .args(args)
        .arg(&cfg)
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/manifest.json")).unwrap()).unwrap()
}

const ANALYTIC: &str = "schema_version = 1\n[grid]\nn = 64\n[phi]\npreset = \"cos\"\n";

#[test]
fn analytic_beltrami_exits_zero_with_hashed_outputs() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["solve-beltrami"], ANALYTIC);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stderr.is_empty(), "--quiet");
    let m = manifest(t.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "solve-beltrami");
    let files = m["files"].as_array().unwrap();
    for name in ["omega.csv", "f.csv", "S.csv", "H.csv", "A.csv", "omega_re.pgm"] {
        let e = files.iter().find(|f| f["path"] == name).unwrap_or_else(|| panic!("{name} missing"));
        let bytes = fs::read(t.path().join("out").join(name)).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap().len(), 64);
        assert!(!bytes.is_empty());
    }
    let csv = fs::read_to_string(t.path().join("out/omega.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,y,re,im"));
    assert!(m["residuals"]["boundary_error"].as_f64().unwrap() < 2e-2);
}

#[test]
fn global_overrides_reach_the_manifest() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["--grid-n", "32", "--seed", "7", "qc-map"], "schema_version = 1\n[mu]\npreset = \"radial-stretch\"\nK = 2\n");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(t.path());
    assert_eq!(m["seed"], 7);
    assert_eq!(m["parameters"]["grid"]["n"], 32);
    let j = fs::read_to_string(t.path().join("out/J.csv")).unwrap();
    assert_eq!(j.lines().next(), Some("x,y,val"));
    assert_eq!(j.lines().count(), 1 + 32 * 32);
}

#[test]
fn configuration_errors_exit_one_with_location() {
    let t = tempfile::tempdir().unwrap();
    let o = run(t.path(), &["solve-beltrami"], "schema_version = 1\n[mu]\npreset = \"radial-stretch\"\nK = 0.5\n");
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ellipticity bound") && err.contains("line 3"), "{err}");

    let o = run(t.path(), &["solve-beltrami"], "schema_version = 1\n[grid]\nn = 64\n[sigma]\npreset = \"disk-indicator\"\nradius = 0.99\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("compact-support margin"));

    let o = run(t.path(), &["--grid-n", "100", "qc-map"], ANALYTIC);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stage_failure_exits_three() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\n[grid]\nn = 64\n[mu]\npreset = \"radial-stretch\"\nK = 2\n[solver]\nmax_iterations = 2\n";
    let o = run(t.path(), &["solve-beltrami"], cfg);
    assert_eq!(o.status.code(), Some(3));
    let status = manifest(t.path())["status"].as_str().unwrap().to_string();
    assert!(status.starts_with("failed") && status.contains("mu-conformal map"), "{status}");
}

#[test]
fn warnings_exit_two() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\n[grid]\nn = 64\n[phi]\npreset = \"cos\"\n[solver]\nboundary_tolerance = 1e-20\n";
    let o = run(t.path(), &["solve-beltrami"], cfg);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(t.path())["status"], "warnings");
}

#[test]
fn audit_writes_one_row_per_point_and_criterion() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\n[mu]\npreset = \"tangent\"\nk = 0.2\nz0 = [0, 0]\n[audit]\npoints = [[0, 0], [0.5, 0]]\ncriteria = [\"MEAN\", \"LEHTO\"]\nlevels = 40\n";
    let o = run(t.path(), &["audit-criteria"], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(t.path().join("out/audit.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "x,y,criterion,verdict,growth_exponent,trace_file");
    assert_eq!(rows.len(), 5);
    assert!(rows[1..].iter().all(|r| r.contains("SATISFIED")));
    let trace = rows[1].rsplit(',').next().unwrap();
    assert!(fs::read_to_string(t.path().join("out").join(trace)).unwrap().starts_with("eps,value\n"));
    assert_eq!(manifest(t.path())["verdicts"].as_array().unwrap().len(), 4);
}

#[test]
fn poisson_identity_case_is_clean() {
    let t = tempfile::tempdir().unwrap();
    let cfg = "schema_version = 1\n[grid]\nn = 64\n[g]\npreset = \"gaussian\"\nwidth = 0.15\n";
    let o = run(t.path(), &["solve-poisson"], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(t.path());
    assert!(m["residuals"]["weak_residual_max"].as_f64().unwrap() < 1e-2);
    for name in ["u.csv", "G.csv", "N_G.csv", "H.csv", "f.csv"] {
        assert!(t.path().join("out").join(name).exists(), "{name}");
    }
}
