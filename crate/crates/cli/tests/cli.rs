use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn quasinorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasinorm")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = quasinorm(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn generated_sets_have_the_requested_sizes() {
    let points = |args: &[&str]| json(args)["points"].as_array().unwrap().len();
    assert_eq!(points(&["generate", "cube-vertices", "n=4"]), 16);
    assert_eq!(points(&["generate", "lp-ball", "n=3", "p=0.5"]), 6);
    assert_eq!(points(&["generate", "sphere-sample", "n=5", "count=7"]), 7);
    assert_eq!(points(&["generate", "random-vertex-subset", "n=10", "size=100"]), 100);
    // density size ⌈2^{n(1−cε)}⌉ with the default c = 0.1
    let v = json(&["generate", "random-vertex-subset", "n=10", "epsilon=0.5"]);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 725);
    let mut keys: Vec<String> = pts.iter().map(|p| p.to_string()).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 725);
    for p in pts {
        assert!(p.as_array().unwrap().iter().all(|x| x.as_f64().unwrap().abs() == 1.0));
    }
    let csv = quasinorm(&["--format", "csv", "generate", "sphere-sample", "n=3", "count=9"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 9);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| quasinorm(args).status.code();
    assert_eq!(code(&["verify", "delta", "n=3"]), Some(0));
    assert_eq!(
        code(&["verify", "dvoretzky", "n=10", "count=50", "trials=2", "eta=0.01", "samples=3"]),
        Some(1)
    );
    assert_eq!(code(&["verify", "no-such-lemma"]), Some(2));
    assert_eq!(code(&["generate", "lp-ball", "n=3"]), Some(2));
    assert_eq!(code(&["generate", "cube-vertices", "n=3", "unused=1"]), Some(2));
    assert_eq!(code(&["--const.nope=1", "calibrate"]), Some(2));
    assert_eq!(code(&["--format", "xml", "calibrate"]), Some(2));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["--seed", "3", "run", "cube-quotient", "n=5", "queries=10", "trials=8"],
        &["--seed", "3", "run", "dvoretzky-search", "n=8", "count=40", "trials=5"],
        &["--seed", "3", "--format", "csv", "generate", "sphere-sample", "n=4", "count=20"],
    ];
    for args in runs {
        let a = quasinorm(args);
        let b = quasinorm(args);
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let other = quasinorm(&["--seed", "4", "--format", "csv", "generate", "sphere-sample", "n=4", "count=20"]);
    assert_ne!(other.stdout, quasinorm(runs[2]).stdout);
}

#[test]
fn constants_and_config_files() {
    let cfg = scratch("constants.cfg");
    std::fs::write(&cfg, "seed = 7\n# comment\nconst.c1 = 0.1\nconst.C = 9\n").unwrap();
    let path = cfg.to_str().unwrap();
    let v = json(&["--config", path, "--const.C=12", "calibrate"]);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["calibration"]["C"], 12.0);
    assert_eq!(v["calibration_sources"]["C"], "override");
    assert_eq!(v["calibration"]["c1"], 0.1);
    assert_eq!(v["calibration_sources"]["c1"], "config");
    assert_eq!(v["calibration_sources"]["c"], "default");
    let v = json(&["--const.c2", "2.5", "calibrate"]);
    assert_eq!(v["calibration"]["c2"], 2.5);
    // command-line flags beat the file
    let v = json(&["--config", path, "--seed", "11", "calibrate"]);
    assert_eq!(v["seed"], 11);
}

#[test]
fn out_flag_writes_the_report() {
    let out = scratch("report.json");
    let _ = std::fs::remove_file(&out);
    let status = quasinorm(&["--out", out.to_str().unwrap(), "verify", "delta", "n=2"]);
    assert_eq!(status.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
}
