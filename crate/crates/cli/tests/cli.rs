//! End-to-end checks of the binary: exit codes, JSON schema, determinism,
//! and config-file/flag precedence.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortex-pair"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_json(dir: &Path, name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(name)).expect("artifact exists");
    serde_json::from_str(&text).expect("valid json")
}

#[test]
fn period_function_matches_disk_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--kappa1",
        "0.5",
        "--kappa2",
        "0.5",
        "period-function",
        "--c-grid",
        "0.05:0.4:8",
        "--csv",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path(), "period_function.json");
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["result"]["monotone"], "decreasing");
    for point in doc["result"]["points"].as_array().unwrap() {
        let c = point[0].as_f64().unwrap();
        let t = point[1].as_f64().unwrap();
        let oracle = 2.0 * std::f64::consts::PI.powi(2) * (-std::f64::consts::TAU * c).exp();
        assert!((t - oracle).abs() / oracle < 1e-6);
    }
    assert!(dir.path().join("period_function.csv").exists());
    // every reported quantity carries a tolerance
    assert!(doc["tolerances"]["integrator_rel"].as_f64().unwrap() > 0.0);
}

#[test]
fn identical_config_gives_byte_identical_output() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&[
            "--out",
            d.path().to_str().unwrap(),
            "--seed",
            "42",
            "trace-level",
            "--c",
            "0.1",
            "--n-samples",
            "32",
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(d1.path().join("trace_level.json")).unwrap();
    let b = std::fs::read(d2.path().join("trace_level.json")).unwrap();
    assert_eq!(a, b, "same config and seed must give identical bytes");
}

#[test]
fn vanishing_total_strength_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--kappa1",
        "1.0",
        "--kappa2",
        "-1.0",
        "trace-level",
        "--c",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nonzero"), "message names the hypothesis: {stderr}");
}

#[test]
fn isochronous_model_fails_certification_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--domain",
        "user",
        "--user-preset",
        "iso",
        "twist-cert",
        "--c",
        "0.1",
        "--c1",
        "0.09",
        "--d1",
        "0.11",
        "--grids",
        "4,4,2",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // the negative band certificate is still written
    let doc = read_json(dir.path(), "twist_cert.json");
    assert_eq!(doc["result"]["band"]["positive"], false);
    assert!(doc["result"]["twist"].is_null());
}

#[test]
fn twist_certificate_on_the_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "twist-cert",
        "--c",
        "0.1",
        "--c1",
        "0.09",
        "--d1",
        "0.11",
        "--grids",
        "6,4,2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path(), "twist_cert.json");
    let twist = &doc["result"]["twist"];
    assert!(twist["nu"].as_i64().unwrap() >= 1);
    for key in ["rot1_inner", "rot1_outer", "rot2_lo", "rot2_hi"] {
        assert!(twist["margins"][key].as_f64().unwrap() > 0.0, "margin {key}");
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        "kappa1 = 0.5\nkappa2 = 0.5\n\n[domain]\nkind = \"radial_power\"\np = 2.0\n",
    )
    .unwrap();
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--p",
        "3.0",
        "trace-level",
        "--c",
        "1.0",
        "--n-samples",
        "16",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(dir.path(), "trace_level.json");
    assert_eq!(doc["domain"]["kind"], "radial_power");
    assert_eq!(doc["domain"]["p"], 3.0, "flag overrides the file value");
}

#[test]
fn malformed_config_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(&config_path, "no_such_key = 1\n").unwrap();
    let out = run(&[
        "--config",
        config_path.to_str().unwrap(),
        "trace-level",
        "--c",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_level_grid_spec_is_invalid_input() {
    let out = run(&["period-function", "--c-grid", "0.4:0.05:8"]);
    assert_eq!(out.status.code(), Some(1));
}
