use std::fs;
use std::process::{Command, Output};

fn orbitlets(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitlets")).args(args).output().expect("binary runs")
}

#[test]
fn passing_scenario_exits_zero_and_embeds_config() {
    let out = orbitlets(&["covering-stats", "--override", "group=\"dyadic1d\""]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], true);
    assert_eq!(r["config"]["group"], "dyadic1d");
    // defaults are resolved into the embedded config
    assert_eq!(r["config"]["seed"], 7);
}

#[test]
fn failing_assertion_exits_one() {
    // a tolerance no partition can meet
    let out = orbitlets(&["bapu-check", "--override", "group=\"dyadic1d\"", "--override", "tolerance=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["passed"], false);
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "group = \"similitude2d\"\n[window]\nradious = 0.5\n").unwrap();
    let out = orbitlets(&["covering-stats", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window.radious"));
}

#[test]
fn shear_rotation_rejects_increasing_eps() {
    let out = orbitlets(&["shear-rotation", "--override", "eps=[0.125, 0.25]"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strictly decreasing"));
}

#[test]
fn unknown_scenario_is_an_error() {
    let out = orbitlets(&["no-such-scenario"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let args = ["parseval-check", "--override", "group=\"shearlet2d\"", "--override", "family.count=2"];
    let (a, b) = (orbitlets(&args), orbitlets(&args));
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn emit_csv_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbitlets(&[
        "decomp-norm",
        "--override",
        "group=\"dyadic1d\"",
        "--emit-csv",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["decomp-norm.json", "pieces.csv", "fhat.bin", "fhat.bin.txt"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let json = fs::read_to_string(dir.path().join("decomp-norm.json")).unwrap();
    assert_eq!(json.trim(), String::from_utf8_lossy(&out.stdout).trim());
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "group = \"similitude2d\"\n[index]\nk = [-3, 3]\n").unwrap();
    let out = orbitlets(&["covering-stats", "--config", cfg.to_str().unwrap(), "--override", "index.k=[-2, 2]"]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["config"]["index.k"], serde_json::json!([-2, 2]));
    assert_eq!(r["results"]["indices"], 5);
}
