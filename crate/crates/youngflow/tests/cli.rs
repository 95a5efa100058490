use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use youngflow::io::load_path;
use youngflow::{ExperimentConfig, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_PASS};
use youngflow_core::p_variation;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn youngflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_youngflow")).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn every_bundled_config_round_trips() {
    let mut count = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg, "{}", path.display());
        assert_eq!(cfg.name, path.file_stem().unwrap().to_str().unwrap());
        count += 1;
    }
    assert!(count >= 15);
}

#[test]
fn zero_field_passes_with_a_constant_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = youngflow(&["run", s(&configs().join("zero_field.json")), "--output-dir", s(dir.path())]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["config"]["name"], "zero_field");
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut rows = traj.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string());
    let first = rows.next().unwrap();
    assert_eq!(first.parse::<f64>().unwrap(), 0.5);
    assert!(rows.all(|y| y == first));
}

#[test]
fn hypothesis_violation_is_refused_unless_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rough.json",
        r#"{
            "name": "rough",
            "driver": {"kind": "smooth", "cells": 200, "horizon": 1.0, "amplitude": [0.5], "frequency": [3.0]},
            "field": {"name": "sine", "alpha": 1.2},
            "p": 1.5,
            "checks": ["solve"]
        }"#,
    );
    let out = youngflow(&["run", s(&cfg), "--output-dir", s(&dir.path().join("a"))]);
    assert_eq!(code(&out), EXIT_INVALID);
    assert!(stderr(&out).contains("alpha"), "{}", stderr(&out));
    assert!(!dir.path().join("a").exists());

    let out = youngflow(&["run", s(&cfg), "--output-dir", s(&dir.path().join("b")), "--allow-hypothesis-violation"]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b/report.json")).unwrap()).unwrap();
    assert!(report["warnings"][0].as_str().unwrap().contains("outside the theory"));
}

#[test]
fn invalid_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown_field", r#"{"name": "x", "driver": {"kind": "smooth", "cells": 10, "horizon": 1.0, "amplitude": [1.0], "frequency": [1.0]}, "field": {"name": "nope"}, "p": 1.0, "checks": ["solve"]}"#),
        ("unknown_key", r#"{"name": "x", "driver": {"kind": "smooth", "cells": 10, "horizon": 1.0, "amplitude": [1.0], "frequency": [1.0]}, "field": {"name": "sine"}, "p": 1.0, "checks": ["solve"], "extra": 1}"#),
        ("bad_p", r#"{"name": "x", "driver": {"kind": "smooth", "cells": 10, "horizon": 1.0, "amplitude": [1.0], "frequency": [1.0]}, "field": {"name": "sine"}, "p": 2.5, "checks": ["solve"]}"#),
        ("no_anchors", r#"{"name": "x", "driver": {"kind": "smooth", "cells": 10, "horizon": 1.0, "amplitude": [1.0], "frequency": [1.0]}, "field": {"name": "sine"}, "p": 1.0, "checks": ["composition"]}"#),
        ("not_json", "{"),
    ];
    for (name, text) in cases {
        let cfg = write_config(dir.path(), &format!("{name}.json"), text);
        let out = youngflow(&["run", s(&cfg), "--output-dir", s(&dir.path().join(name))]);
        assert_eq!(code(&out), EXIT_INVALID, "{name}: {}", stderr(&out));
    }
    assert_eq!(code(&youngflow(&["run", "/nonexistent/config.json"])), EXIT_INVALID);
    assert_eq!(code(&youngflow(&["no-such-command"])), EXIT_INVALID);
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load(&configs().join("flow_sine.json")).unwrap();
    cfg.tolerances.inverse = 1e-300;
    cfg.tolerances.continuity = false;
    cfg.checks.retain(|c| *c != youngflow::Check::Continuity);
    let path = write_config(dir.path(), "strict.json", &cfg.to_json());
    let out = youngflow(&["run", s(&path), "--output-dir", s(&dir.path().join("out"))]);
    assert_eq!(code(&out), EXIT_CHECK_FAILED, "{}", stderr(&out));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn same_config_and_seed_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("jump_law.json");
    let mut reports = Vec::new();
    for run in ["one", "two"] {
        let out_dir = dir.path().join(run);
        let out = youngflow(&["run", s(&cfg), "--output-dir", s(&out_dir), "--seed", "9"]);
        assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
        let mut report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
        report.as_object_mut().unwrap().remove("timing");
        reports.push((serde_json::to_string_pretty(&report).unwrap(), fs::read(out_dir.join("trajectory.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0].0.contains("\"seed\": 9"));
}

#[test]
fn sample_then_pvar_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    for (file, args) in [
        ("fbm.csv", vec!["sample", "fbm", "--hurst", "0.7", "--cells", "256", "--seed", "3"]),
        ("stable.json", vec!["sample", "stable", "--alpha", "1.3", "--eps", "0.01", "--seed", "4"]),
        ("poisson.csv", vec!["sample", "poisson", "--rate", "10", "--lo", "-1", "--hi", "1", "--grid", "20"]),
    ] {
        let path = dir.path().join(file);
        let mut args = args;
        args.extend(["-o", s(&path)]);
        let out = youngflow(&args);
        assert_eq!(code(&out), EXIT_PASS, "{file}: {}", stderr(&out));
        let out = youngflow(&["pvar", s(&path), "--p", "1.6"]);
        assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
        let reported = json_stdout(&out)["p_variation"].as_f64().unwrap();
        let expected = p_variation(&load_path(&path).unwrap(), 1.6).unwrap();
        assert_eq!(reported, expected, "{file}");
    }
    let poisson = load_path(&dir.path().join("poisson.csv")).unwrap();
    assert!(poisson.has_jumps());
}

#[test]
fn young_integrate_of_t_against_t_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let out = youngflow(&[
        "sample", "smooth", "--cells", "100", "--amplitude", "0", "--frequency", "0", "--drift", "1", "-o", s(&path),
    ]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let out = youngflow(&["young-integrate", "--integrand", s(&path), "--integrator", s(&path), "--p", "1", "--q", "1"]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let v = json_stdout(&out)["value"][0].as_f64().unwrap();
    assert!((v - 0.5).abs() < 1e-14, "{v}");
}

#[test]
fn solve_and_flow_check_on_a_sampled_driver() {
    let dir = tempfile::tempdir().unwrap();
    let driver = dir.path().join("driver.csv");
    let out = youngflow(&[
        "sample", "smooth", "--cells", "400", "--amplitude", "0.7", "--frequency", "5", "-o", s(&driver),
    ]);
    assert_eq!(code(&out), EXIT_PASS);
    let traj = dir.path().join("traj.csv");
    let out = youngflow(&[
        "solve", "--driver", s(&driver), "--field", "rotation", "--field-param", "omega=2", "--p", "1", "--x0", "0.3,-0.2",
        "-o", s(&traj),
    ]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let text = fs::read_to_string(&traj).unwrap();
    assert!(text.starts_with("t,y1,y2"));
    assert_eq!(text.lines().count(), 402);

    let report = dir.path().join("flow.json");
    let out = youngflow(&[
        "flow-check", "--driver", s(&driver), "--field", "rotation", "--p", "1", "--lo=-1,-1", "--hi", "1,1", "--per-axis",
        "2", "--report", s(&report),
    ]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(!stdout.contains('\u{1b}'), "NO_COLOR output has escape codes");
    let parsed: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["passed"], true);
}

#[test]
fn solve_cadlag_writes_a_jump_log() {
    let dir = tempfile::tempdir().unwrap();
    let driver = dir.path().join("jumps.json");
    fs::write(
        &driver,
        r#"{"dim": 1, "times": [0.0, 0.5, 1.0], "values": [[0.0], [-1.0], [-1.0]], "jumps": [{"time": 0.5, "left": [0.0]}]}"#,
    )
    .unwrap();
    let traj = dir.path().join("traj.csv");
    let log = dir.path().join("log.json");
    let out = youngflow(&[
        "solve-cadlag", "--driver", s(&driver), "--field", "linear", "--p", "1.2", "--x0", "1", "-o", s(&traj),
        "--jump-log", s(&log),
    ]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let entries: Value = serde_json::from_str(&fs::read_to_string(&log).unwrap()).unwrap();
    let end = entries[0]["end"][0].as_f64().unwrap();
    assert!((end - (-1.0f64).exp()).abs() < 1e-6, "{end}");
    let text = fs::read_to_string(&traj).unwrap();
    assert!(text.starts_with("t,y1,k1_1\n"));
    let times: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(times.windows(2).any(|w| w[0] == w[1]), "the jump appears as a repeated time");
}

#[test]
fn fields_lists_the_registry() {
    let out = youngflow(&["fields"]);
    assert_eq!(code(&out), EXIT_PASS);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["zero", "constant", "identity", "linear", "sine", "rotation", "coupled", "polynomial"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn probe_prints_a_csv_and_a_summary() {
    let out = youngflow(&["probe", "fbm", "--hurst", "0.7", "--p", "1.6", "--refinements", "8", "--runs", "3"]);
    assert_eq!(code(&out), EXIT_PASS, "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("run,level,value,plateau,diverges\n"));
    assert!(stderr(&out).contains("/3 plateau"));
}
