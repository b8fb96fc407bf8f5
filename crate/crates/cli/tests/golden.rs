//! Golden-file tests for every subcommand. Set UPDATE_GOLDEN=1 to rewrite
//! the files under tests/golden after an intended output change.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn nearsym(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nearsym"))
        .env("NEARSYM_THREADS", "1")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"))
}

/// Runs the command, expects exit 0 and compares stdout with the golden file.
fn check(name: &str, args: &[&str]) -> (tempfile::TempDir, Value) {
    let dir = tempfile::tempdir().unwrap();
    let out = nearsym(dir.path(), args);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{name}: {}\n{stdout}",
        String::from_utf8_lossy(&out.stderr)
    );
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &stdout).unwrap();
    } else {
        let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert!(stdout == want, "{name}: output differs from {}", path.display());
    }
    let v: Value = serde_json::from_str(&stdout).unwrap();
    (dir, v)
}

fn artifacts(v: &Value) -> Vec<String> {
    v["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().to_string())
        .collect()
}

#[test]
fn verify_theta() {
    let (dir, v) = check("verify-theta", &["verify", "theta", "--grid", "5"]);
    for key in ["command", "model", "parameters", "verdicts", "artifacts", "tool_version"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let written = fs::read_to_string(dir.path().join("verify-theta.json")).unwrap();
    assert_eq!(written, serde_json::to_string_pretty(&v).unwrap() + "\n");
}

#[test]
fn verify_omega_delta_t() {
    check(
        "verify-omega-delta-t",
        &["verify", "omega-delta-t", "--grid", "5", "--estimate-grid", "9", "--t", "-0.5"],
    );
}

#[test]
fn trace_surgery() {
    let (dir, v) = check("trace-surgery", &["trace", "surgery", "--steps", "11", "--seeds", "9"]);
    let events = &v["data"]["events"];
    assert_eq!(events.as_array().unwrap().len(), 1);
    for a in artifacts(&v) {
        assert!(dir.path().join(a).is_file());
    }
}

#[test]
fn trace_birth() {
    check("trace-birth", &["trace", "birth", "--steps", "11", "--seeds", "9"]);
}

#[test]
fn parity_theta_odd_reversed() {
    let (_, v) = check("parity-theta-odd", &["parity", "theta-odd", "--samples", "32", "--reverse"]);
    assert_eq!(v["data"]["parity"], "odd");
}

#[test]
fn contours_figure() {
    let (dir, v) = check("contours", &["contours", "--cells", "60"]);
    let files = artifacts(&v);
    assert_eq!(files.iter().filter(|f| f.ends_with(".svg")).count(), 5);
    let svg = fs::read_to_string(dir.path().join("contours/panel-2.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn moser_small() {
    check("moser", &["moser", "--samples", "5", "--reference-steps", "128"]);
}

#[test]
fn hopf_maps() {
    check("hopf-hopf", &["hopf", "--map", "hopf", "--samples", "20000"]);
    check("hopf-lemma-f", &["hopf", "--map", "lemma-f", "--r", "10", "--samples", "20000"]);
}

#[test]
fn obstruction_k3() {
    check("obstruction-k3", &["obstruction", "--manifold", "k3"]);
}

#[test]
fn report_all_quick() {
    let (dir, v) = check("report-all", &["report-all", "--quick"]);
    for a in artifacts(&v) {
        assert!(dir.path().join(&a).is_file(), "{a}");
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["contours", "--cells", "40", "--t", "-1,1"];
    let a = nearsym(tempfile::tempdir().unwrap().path(), &args);
    let b = nearsym(tempfile::tempdir().unwrap().path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "nope"][..],
        &["--bogus"],
        &["trace", "surgery", "--steps", "1"],
        &["hopf", "--map", "lemma-f", "--r", "2"],
        &["obstruction", "--parities", "even,maybe"],
        &["verify", "omega-delta-t", "--delta", "0.5"],
    ] {
        let out = nearsym(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failed_verdict_exits_1_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = nearsym(dir.path(), &["obstruction", "--manifold", "cp2", "--parities", "even"]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["verdicts"].as_array().unwrap().iter().any(|x| x["pass"] == false));
    assert!(dir.path().join("obstruction.json").is_file());
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# defaults\nsamples = 16\nreverse = true\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let run = |extra: &[&str]| -> Value {
        let mut args = vec!["--config", cfg, "parity", "theta-ev"];
        args.extend(extra);
        serde_json::from_slice(&nearsym(dir.path(), &args).stdout).unwrap()
    };
    let v = run(&[]);
    assert_eq!(v["parameters"]["samples"], 16);
    assert_eq!(v["parameters"]["reverse"], true);
    assert_eq!(run(&["--samples", "24"])["parameters"]["samples"], 24);

    fs::write(dir.path().join("run.conf"), "colour = blue\n").unwrap();
    assert_eq!(nearsym(dir.path(), &["--config", cfg, "moser"]).status.code(), Some(2));
}
