//! End-to-end tests of the `sim` binary: exit-code contract, file outputs,
//! and the negative-control check.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sim"))
}

fn run(args: &[&str]) -> Output {
    sim().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("config written");
    path
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lwsim-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("tmp dir");
    dir
}

const TWO_BODY: &str = r#"{
  "constants": { "c": 1.0, "k": -1.0, "sign_convention": "coulomb_consistent" },
  "integrator": { "dt": 0.05, "t_end": 20.0, "output_stride": 10 },
  "particles": [
    { "label": "a", "m": 1.0, "q": 1.0, "pos": [5.0, 0, 0], "vel": [0, 0.3, 0] },
    { "label": "b", "m": 1.0, "q": 1.0, "pos": [-5.0, 0, 0], "vel": [0, -0.3, 0] }
  ]
}"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = tmp_dir("run");
    let cfg = write_config(&dir, "two.json", TWO_BODY);
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,label,x,y,z,vx,vy,vz,gamma");
    let first = lines.next().unwrap();
    assert!(first.starts_with("0.0000000000000000e0,a,"), "row: {first}");
    // 401 steps sampled every 10 plus the final step, two particles per row.
    let rows = csv.lines().count() - 1;
    assert_eq!(rows % 2, 0);
    assert!(!csv.contains('\r'));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert!(summary["max_four_velocity_norm_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn superluminal_config_exits_one_with_diagnostics() {
    let dir = tmp_dir("bad-vel");
    let text = TWO_BODY.replace("[0, 0.3, 0]", "[0, 1.5, 0]");
    let cfg = write_config(&dir, "bad.json", &text);
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("particles[0].vel"), "stderr: {err}");
}

#[test]
fn unknown_key_exits_one() {
    let dir = tmp_dir("bad-key");
    let text = TWO_BODY.replace("\"constants\"", "\"extra\": 1, \"constants\"");
    let cfg = write_config(&dir, "bad.json", &text);
    let out = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_config_exits_one() {
    let out = run(&["run", "--config", "/nonexistent/nothing.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_formats_are_honored() {
    let dir = tmp_dir("formats");
    let text = TWO_BODY.replace(
        "\"particles\"",
        "\"output\": { \"directory\": \"out\", \"formats\": [\"csv\"] }, \"particles\"",
    );
    let cfg = write_config(&dir, "csv-only.json", &text);
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(dir.join("trajectory.csv").exists());
    assert!(!dir.join("summary.json").exists());

    let bad = TWO_BODY.replace(
        "\"particles\"",
        "\"output\": { \"directory\": \"out\", \"formats\": [\"yaml\"] }, \"particles\"",
    );
    let cfg2 = write_config(&dir, "bad-format.json", &bad);
    let out2 = run(&["run", "--config", cfg2.to_str().unwrap()]);
    assert_eq!(out2.status.code(), Some(1));
}

#[test]
fn collision_course_exits_two_and_notes_time() {
    let dir = tmp_dir("collide");
    let text = r#"{
  "constants": { "c": 1.0, "k": -1.0, "sign_convention": "coulomb_consistent",
                 "length_scale": 1e8 },
  "integrator": { "dt": 0.01, "t_end": 50.0 },
  "particles": [
    { "label": "a", "m": 1.0, "q": 1.0, "pos": [0.5, 0, 0], "vel": [-0.05, 0, 0] },
    { "label": "b", "m": 1.0, "q": 1.0, "pos": [-0.5, 0, 0], "vel": [0.05, 0, 0] }
  ]
}"#;
    let cfg = write_config(&dir, "collide.json", text);
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "failed");
    assert!(summary["failure_time"].as_f64().is_some());
}

#[test]
fn check_suites_pass_and_corrupted_sign_fails() {
    let ok = run(&["check", "gauge", "--seed", "7", "--cases", "24"]);
    assert!(
        ok.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let text = String::from_utf8_lossy(&ok.stdout);
    assert!(text.contains("PASS"), "stdout: {text}");

    let bad = run(&[
        "check",
        "oracle",
        "--seed",
        "7",
        "--cases",
        "8",
        "--corrupt-sign",
    ]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn sim_threads_caps_are_accepted_and_validated() {
    let ok = sim()
        .args(["check", "oracle", "--seed", "3", "--cases", "8"])
        .env("SIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(ok.status.success());
    let bad = sim()
        .args(["check", "oracle", "--seed", "3", "--cases", "8"])
        .env("SIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn mercury_with_too_few_orbits_exits_one() {
    let out = run(&["mercury", "--orbits", "3", "--amplify", "10000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mercury_reports_against_closed_form() {
    let out = run(&["mercury", "--orbits", "8", "--amplify", "10000"]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["measured_vs_analytic_rel_error"].as_f64().unwrap() < 0.01);
    assert_eq!(v["reference_arcsec_per_century"].as_f64().unwrap(), 7.18);
}

#[test]
fn mercury_extrapolation_hits_reference() {
    let out = run(&[
        "mercury",
        "--orbits",
        "8",
        "--amplify",
        "10000",
        "--extrapolate",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ex = &v["extrapolation"];
    let ratio = ex["scaling_ratio"].as_f64().unwrap();
    assert!((ratio - 4.0).abs() < 0.2, "1/c^2 scaling ratio {ratio}");
    let arcsec = ex["extrapolated_arcsec_per_century"].as_f64().unwrap();
    assert!(
        (arcsec - 7.18).abs() < 0.7,
        "extrapolated {arcsec} arcsec/century"
    );
}

#[test]
fn probe_static_source_both_conventions() {
    let dir = tmp_dir("probe");
    let literal = r#"{
  "constants": { "c": 1.0, "k": 1.0, "sign_convention": "paper_literal" },
  "integrator": { "dt": 0.5, "t_end": 20.0 },
  "particles": [ { "label": "src", "m": 1.0, "q": 1.0, "pos": [0,0,0], "vel": [0,0,0] } ]
}"#;
    let cfg = write_config(&dir, "literal.json", literal);
    let out = run(&[
        "probe",
        "--config",
        cfg.to_str().unwrap(),
        "--event",
        "10,1,0,0",
        "--source",
        "src",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["potential"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let consistent = literal.replace("paper_literal", "coulomb_consistent");
    let cfg2 = write_config(&dir, "consistent.json", &consistent);
    let out2 = run(&[
        "probe",
        "--config",
        cfg2.to_str().unwrap(),
        "--event",
        "10,1,0,0",
        "--source",
        "src",
    ]);
    let v2: serde_json::Value = serde_json::from_slice(&out2.stdout).unwrap();
    assert!((v2["potential"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);

    // Event whose retarded time falls beyond the recorded history.
    let out3 = run(&[
        "probe",
        "--config",
        cfg.to_str().unwrap(),
        "--event",
        "100,1,0,0",
        "--source",
        "src",
    ]);
    assert_eq!(out3.status.code(), Some(2));

    // Unknown source label is a usage error.
    let out4 = run(&[
        "probe",
        "--config",
        cfg.to_str().unwrap(),
        "--event",
        "10,1,0,0",
        "--source",
        "nope",
    ]);
    assert_eq!(out4.status.code(), Some(1));
}

#[test]
fn run_with_mercury_scenario_writes_report() {
    let dir = tmp_dir("scenario");
    let text = r#"{
  "constants": { "preset": "gravity_si" },
  "integrator": { "dt": 1.0, "t_end": 1.0 },
  "particles": [ { "label": "sun", "m": 1.989e30, "pos": [0,0,0], "vel": [0,0,0] } ],
  "scenario": { "type": "mercury", "orbits": 6, "amplify": 10000.0 }
}"#;
    let cfg = write_config(&dir, "mercury.json", text);
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("mercury.json")).unwrap()).unwrap();
    assert!(report["measured_vs_analytic_rel_error"].as_f64().unwrap() < 0.01);
}

#[test]
fn dump_config_roundtrips_to_identical_csv() {
    let dir = tmp_dir("dump");
    let cfg = write_config(&dir, "orig.json", TWO_BODY);
    let dumped = run(&["run", "--config", cfg.to_str().unwrap(), "--dump-config"]);
    assert!(dumped.status.success());
    let echoed = write_config(
        &dir,
        "echoed.json",
        &String::from_utf8_lossy(&dumped.stdout),
    );

    let out_a = dir.join("a");
    let out_b = dir.join("b");
    assert!(run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "run",
        "--config",
        echoed.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap()
    ])
    .status
    .success());
    let a = std::fs::read(out_a.join("trajectory.csv")).unwrap();
    let b = std::fs::read(out_b.join("trajectory.csv")).unwrap();
    assert_eq!(a, b, "echoed config must reproduce the run bit-for-bit");
}
