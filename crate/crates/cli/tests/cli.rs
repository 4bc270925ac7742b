use std::path::Path;
use std::process::{Command, Output};

fn modlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modlab")).args(args).arg("--out").arg(out).env_remove("MODLAB_OUT").output().unwrap()
}

#[test]
fn verify_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = modlab(&["verify", "--trials", "1", "--seed", "5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "tidy_bounds.csv", "contour_convergence.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["summary"]["fail"], 0);
    // no temporaries left behind by the atomic writer
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn env_var_overrides_out_flag() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_modlab"))
        .args(["verify", "--trials", "1", "--suite", "modular", "--out"])
        .arg(flag.path())
        .env("MODLAB_OUT", env.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env.path().join("report.json").is_file());
    assert!(!flag.path().join("report.json").exists());
}

#[test]
fn subcommands_restrict_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = modlab(&["contour-study", "--trials", "1", "--model", "maximal-abelian", "--factor-size", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["suites"], serde_json::json!(["contour"]));
}

#[test]
fn fixture_subcommand_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = modlab(&["fixture", "--model", "direct-sum", "--blocks", "2x2,1x1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("fixture.json")).unwrap();
    let f: modlab_core::Fixture = serde_json::from_str(&text).unwrap();
    assert_eq!(f.dim(), 5);
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = modlab(&["verify", "--trials", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = modlab(&["verify", "--model", "direct-sum", "--blocks", "2-2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
