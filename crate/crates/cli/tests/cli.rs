use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn geolab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolab")).args(args).arg("--out").arg(out).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_bad_flags() {
    let help = Command::new(env!("CARGO_BIN_EXE_geolab")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("thm3"));

    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["distance", "--no-such-flag"][..],
        &["frobnicate"],
        &["distance", "--metric", "kind:hyperbolic"],
        &["distance", "--metric", "kind:conformal,c=oops"],
        &["thm1", "--psi", "radial,amp=0.05,r1=0.9,r2=0.5"],
        &["fbp", "--metric", "kind:conformal,c=0.1"],
        &["distance", "--nr", "2"],
        &["distance", "--step", "-1"],
    ] {
        let o = geolab(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn failed_checks_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = geolab(&["certify", "--metric", "kind:conformal,c=3,profile=parabolic", "--nbeta", "32", "--nalpha", "16"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["passed"], false);
    assert_eq!(report["result"]["simplicity"]["no_conjugate"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL no_conjugate"));
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["distance", "--pairs", "6", "--seed", "11"];
    assert!(geolab(&args, a.path()).status.success());
    assert!(geolab(&args, b.path()).status.success());
    for f in ["distances.csv", "report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    assert!(geolab(&["distance", "--pairs", "6", "--seed", "12"], c.path()).status.success());
    assert_ne!(std::fs::read(a.path().join("distances.csv")).unwrap(), std::fs::read(c.path().join("distances.csv")).unwrap());
}

#[test]
fn manifest_lists_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(geolab(&["scatter", "--nbeta", "16", "--nalpha", "8", "--seed", "3"], dir.path()).status.success());
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["seed"], 3);
    assert!(m["timestamp"].as_u64().unwrap() > 0);
    assert_eq!(m["config"]["command"], "scatter");
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    for f in ["scattering.csv", "report.json", "manifest.json"] {
        assert!(files.contains(&f), "{files:?}");
        assert!(dir.path().join(f).is_file());
    }
    let checks = m["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c[1] == true));
}

#[test]
fn rerun_reproduces_report() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(geolab(&["dn", "--metric", "kind:sheared,s=0.1", "--modes", "3", "--nr", "16", "--ntheta", "32"], a.path()).status.success());
    let report = a.path().join("report.json");
    let o = geolab(&["rerun", report.to_str().unwrap()], b.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["dn_spectrum.csv", "report.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let missing = geolab(&["rerun", "/nonexistent/report.json"], b.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn out_dir_environment_variable() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("nested");
    let o = Command::new(env!("CARGO_BIN_EXE_geolab")).args(["distance", "--pairs", "2"]).env("OUT_DIR", &target).output().unwrap();
    assert!(o.status.success());
    assert!(target.join("distances.csv").is_file());
    assert!(target.join("manifest.json").is_file());
}

#[test]
fn plots_accompany_refinement_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = geolab(&["identity", "transport", "--refine", "1", "--plots"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("transport_bump.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let table = std::fs::read_to_string(dir.path().join("transport_bump.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("level,nr,ntheta"));
}
