use std::path::Path;
use std::process::{Command, Output};

fn eig(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eig"))
        .arg("run")
        .args(args)
        .arg("--output")
        .arg(dir)
        .env("EIG_THREADS", "2")
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let Ok(rd) = std::fs::read_dir(dir) else { return vec![] };
    let mut v: Vec<String> = rd.map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

const COARSE: [&str; 8] = ["--domain", "square", "--family", "rt", "--k", "0", "--levels", "4,6,8"];

#[test]
fn coarse_square_disagrees_with_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eig(&COARSE, tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(files(tmp.path()), vec!["square_rt_k0_full.csv", "square_rt_k0_full.json"]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("square_rt_k0_full.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], false);
    assert_eq!(json["comparison"]["table"], 1);
    assert_eq!(json["config"]["levels"], serde_json::json!([4, 6, 8]));
}

#[test]
fn loose_tolerances_pass() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"domain":"square","family":"rt","k":0,"levels":[4,6,8],"tolerances":{"extr":0.5,"order":10,"raw":1}}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = eig(&["--config", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn missing_reference_is_not_a_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eig(&["--domain", "disk", "--family", "bdm", "--k", "0", "--formulation", "reduced", "--levels", "3,4,5"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("disk_bdm_k0_reduced.json")).unwrap()).unwrap();
    assert_eq!(json["reference"], "missing");
    assert!(json["comparison"].is_null());
}

#[test]
fn invalid_config_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"domain":"square","family":"rt","k":7,"levels":[10,20],"mu":-1}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = eig(&["--config", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k must be 0, 1 or 2") && err.contains("mu must be positive"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn unknown_config_key_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"domain":"square","family":"rt","k":0,"levels":[4,6,8],"level":[1]}"#).unwrap();
    let out = eig(&["--config", cfg.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("'level'"));
}

#[test]
fn flags_override_preset_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let out = eig(&["--preset", "table3", "--k", "0", "--levels", "3,4,5"], tmp.path());
    assert!(matches!(out.status.code(), Some(0 | 2)));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flags override: k, levels"));
    assert_eq!(files(tmp.path()), vec!["square_bdm_k0_full.csv", "square_bdm_k0_full.json"]);
}

#[test]
fn csv_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    eig(&COARSE, a.path());
    eig(&COARSE, b.path());
    let ca = std::fs::read(a.path().join("square_rt_k0_full.csv")).unwrap();
    let cb = std::fs::read(b.path().join("square_rt_k0_full.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("domain,family,k,formulation,N,h,i,lambda_h\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 5);
}
