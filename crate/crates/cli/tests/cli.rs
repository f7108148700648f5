use std::path::Path;
use std::process::Command;

fn mfz() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mfz"));
    c.env("RUST_LOG", "warn");
    c
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.json");
    std::fs::write(&p, r#"{ "n_samples": 300, "plots": false }"#).unwrap();
    p
}

#[test]
fn simulate_writes_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("sim");
    let o = mfz()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let period = v["period"].as_f64().unwrap();
    assert!((800.0..880.0).contains(&period), "{period}");
    for id in ["X", "Y", "Z"] {
        let text = std::fs::read_to_string(out.join(format!("trajectory_{id}.csv"))).unwrap();
        assert!(text.starts_with("t,s0,s1"));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("asm");
    let o = mfz()
        .args(["assemble", "--seed", "17", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["seed"], 17);
    assert!(out.join("sensor1.csv").exists());
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{ "no_such_key": 1 }"#).unwrap();
    let o = mfz().args(["simulate", "--config"]).arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reproduce_exits_two_on_failed_criteria() {
    // the regression error bands cannot all hold, so the run reports failure
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("repro");
    let o = mfz()
        .args(["reproduce", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("base: parsimonious_dim=")));
    assert!(out.join("summary.json").exists());
}
