//! End-to-end runs of the `uniconsist` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use uniconsist::alternatives::{make_inconsistent, Family, Thresholds};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_uniconsist"));
    c.env_remove("UNICONSIST_SEED");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn maxiset_suite_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["suite", "maxiset-counterexample", "--config"])
        .arg(config("maxiset-counterexample.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("maxiset-counterexample.csv")).unwrap();
    assert!(csv.starts_with("family,case,n,param,replicates,empirical_alpha,empirical_beta,predicted_beta,abs_gap,within_band,index"));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("maxiset-counterexample_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["suite"], "maxiset-counterexample");
    assert!(summary["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn seed_from_environment_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("UNICONSIST_SEED", "99")
        .args(["--threads", "2", "suite", "unbiasedness", "--replicates", "200", "--config"])
        .arg(config("unbiasedness.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("unbiasedness_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);
    assert_eq!(summary["replicates"], 200);
}

#[test]
fn violated_threshold_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(config("compactness.json")).unwrap()).unwrap();
    cfg["max_excess"] = (-1.0).into();
    cfg["null_replicates"] = 5000.into();
    let path = dir.path().join("bad.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = bin()
        .args(["suite", "compactness", "--replicates", "200", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("check failed"));
    assert!(dir.path().join("compactness.csv").exists());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().to_str().unwrap();

    let missing = bin().args(["suite", "power", "--config", "/nonexistent.json", "--out", outdir]).output().unwrap();
    assert_eq!(code(&missing), 2);

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\n  \"suite\": \"power\",\n  \"mc\": {\"seed\": 1,,}\n}").unwrap();
    let out = bin().args(["suite", "power", "--out", outdir, "--config"]).arg(&broken).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let unknown = bin()
        .args(["suite", "nope", "--out", outdir, "--config"])
        .arg(config("power.json"))
        .output()
        .unwrap();
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("calibration"));

    let mismatch = bin()
        .args(["suite", "calibration", "--out", outdir, "--config"])
        .arg(config("power.json"))
        .output()
        .unwrap();
    assert_eq!(code(&mismatch), 2);

    let usage = bin().args(["statistic", "median"]).output().unwrap();
    assert_eq!(code(&usage), 2);

    let few = bin()
        .args(["suite", "power", "--replicates", "10", "--out", outdir, "--config"])
        .arg(config("power.json"))
        .output()
        .unwrap();
    assert_eq!(code(&few), 2);
}

#[test]
fn statistic_commands() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, v: Value| {
        let p = dir.path().join(name);
        fs::write(&p, v.to_string()).unwrap();
        p
    };

    let fixed = write("fixed.json", serde_json::json!({"z": [1.0, 2.0, 3.0], "kappa_sq": [1.0, 0.25, 0.0]}));
    let out = bin().args(["statistic", "fixed", "--data"]).arg(&fixed).output().unwrap();
    assert_eq!(code(&out), 0);
    assert!((stdout_json(&out)["statistic"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    // Two points in distinct halves: chi2 with m = 2 is exactly zero.
    let chi2 = write("chi2.json", serde_json::json!({"points": [0.25, 0.75], "m": 2}));
    let out = bin().args(["statistic", "chi2", "--data"]).arg(&chi2).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["statistic"].as_f64().unwrap(), 0.0);

    // Single point at 1/2: 1/12 + (1/2 - 1/2)^2.
    let cvm = write("cvm.json", serde_json::json!({"points": [0.5], "critical": 0.05}));
    let out = bin().args(["statistic", "cvm", "--data"]).arg(&cvm).output().unwrap();
    let v = stdout_json(&out);
    assert!((v["statistic"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-12);
    assert_eq!(v["reject"], true);

    let outside = write("cvm_bad.json", serde_json::json!({"points": [1.5]}));
    let out = bin().args(["statistic", "cvm", "--data"]).arg(&outside).output().unwrap();
    assert_eq!(code(&out), 2);

    let quad = write(
        "quad.json",
        serde_json::json!({"y": [0.1, -0.2, 0.05], "kappa_sq": [1.0, 1.0, 0.5], "n": 100}),
    );
    let out = bin().args(["statistic", "quad", "--data"]).arg(&quad).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_json(&out).get("reject").is_some());
}

#[test]
fn classify_nulltable_and_widths() {
    let dir = tempfile::tempdir().unwrap();
    let seq = make_inconsistent(Family::Cvm, 0.3, &[2.3, 4.3, 8.3], &[256, 1024, 4096], 1.5, None).unwrap();
    let thresholds = Thresholds { c1: 1.0, c2: 1.5, eps: 0.1, far: 4.0 };
    let input = dir.path().join("seq.json");
    fs::write(&input, serde_json::json!({"sequence": seq, "thresholds": thresholds}).to_string()).unwrap();
    let out = bin().args(["classify", "--sequence"]).arg(&input).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["verdict"], "inconsistent-witness");

    let out = bin()
        .args(["nulltable", "cvm", "--alpha", "0.1,0.05", "--replicates", "20000", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let entries = stdout_json(&out)["entries"].as_array().unwrap().clone();
    assert_eq!(entries.len(), 2);
    // Tabulated quantiles of the limiting law: 0.347 and 0.461.
    let crit: Vec<f64> = entries.iter().map(|e| e["critical"].as_f64().unwrap()).collect();
    assert!((crit[0] - 0.347).abs() < 0.02 && (crit[1] - 0.461).abs() < 0.02, "{crit:?}");

    let set = dir.path().join("set.json");
    fs::write(&set, r#"{"kind": "ellipsoid", "axes": [0.5, 2.0, 1.0]}"#).unwrap();
    let out = bin().args(["widths", "--epsilon", "0.75", "--set"]).arg(&set).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let w: Vec<f64> = v["widths"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (a, b) in w.iter().zip([2.0, 1.0, 0.5]) {
        assert!((a - b).abs() < 1e-9, "{w:?}");
    }
    assert!(!v["diagnostic"].is_null());
}
