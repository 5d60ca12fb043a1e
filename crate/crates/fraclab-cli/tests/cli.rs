//! End-to-end tests of the binary: exit codes, determinism, artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn fraclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn verify_constants_passes() {
    let out = fraclab(&["verify", "--suite", "constants"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("name,computed,expected,abs_err,pass"));
    assert!(stdout.contains("cns_cross_check_n1_s0.5"));
    assert!(!stdout.contains("false"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let out = fraclab(&["verify", "--suite", "unknown"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("results");
    let out = fraclab(&["verify", "--suite", "halfline", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out_dir.join("results.csv").exists());
    assert_eq!(count_manifests(&out_dir), 1);
}

#[test]
fn run_dislocation_collision_event() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("dislocation.json");
    std::fs::write(
        &config,
        r#"{
  "task": "dislocation",
  "seed": 1,
  "params": {
    "s": 0.5,
    "gamma": 1.0,
    "positions": [0.0, 1.0],
    "orientations": [1, -1],
    "t_end": 1.0
  }
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let events = std::fs::read_to_string(out_dir.join("events.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&events).unwrap();
    let t = parsed[0]["t"].as_f64().unwrap();
    assert!((t - 0.25).abs() < 1e-6, "collision at {t}");
    assert_eq!(parsed[0]["type"], "collision");
    assert_eq!(count_manifests(&out_dir), 1);
}

#[test]
fn run_is_deterministic_given_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("walk.json");
    std::fs::write(
        &config,
        r#"{
  "task": "walk",
  "seed": 7,
  "params": { "s": 0.5, "h": 0.05, "t": 0.25, "walkers": 5000, "bins": 100, "half_width": 5.0 }
}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = fraclab(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push(std::fs::read(out_dir.join("histogram.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same config+seed must be byte-identical");
}

#[test]
fn run_walk_zero_steps_single_bin() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("walk0.json");
    std::fs::write(
        &config,
        r#"{
  "task": "walk",
  "seed": 3,
  "params": { "s": 0.5, "h": 0.05, "t": 0.0, "walkers": 500, "bins": 50, "half_width": 2.0 }
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(out_dir.join("histogram.csv")).unwrap();
    let nonzero = csv
        .lines()
        .skip(1)
        .filter(|l| {
            let mass: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
            mass > 0.0
        })
        .count();
    assert_eq!(nonzero, 1);
}

#[test]
fn run_rejects_bad_config_with_anchored_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        "{\n  \"task\": \"walk\",\n  \"params\": { \"s\": 0.5, \"hh\": 1 }\n}",
    )
    .unwrap();
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line"), "message not anchored: {stderr}");

    // unknown task is also a config error
    std::fs::write(&config, r#"{ "task": "florble", "params": {} }"#).unwrap();
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_dirichlet_solution_matches_profile() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("dirichlet.json");
    std::fs::write(
        &config,
        r#"{
  "task": "dirichlet",
  "params": {
    "s": 0.5, "a": -1.0, "b": 1.0, "cells": 128,
    "exterior": { "kind": "zero" },
    "rhs": { "kind": "constant", "value": 1.0 }
  }
}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let mut parts = line.split(',');
        let x: f64 = parts.next().unwrap().parse().unwrap();
        let v: f64 = parts.next().unwrap().parse().unwrap();
        if x.abs() < 0.9 {
            assert!((v - (1.0 - x * x).sqrt()).abs() < 0.03, "x={x}: {v}");
        }
    }
}

fn count_manifests(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
        .count()
}

#[test]
fn run_perimeter_with_pixel_mask() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mask.json");
    // a 12x12 disk-ish mask, cell 0.1, centered near the origin
    let mut rows = Vec::new();
    for iy in 0..12 {
        let mut row = String::new();
        for ix in 0..12 {
            let (x, y) = (-0.6 + (ix as f64 + 0.5) * 0.1, -0.6 + (iy as f64 + 0.5) * 0.1);
            row.push(if x * x + y * y < 0.16 { '1' } else { '0' });
        }
        rows.push(format!("\"{row}\""));
    }
    std::fs::write(
        &config,
        format!(
            r#"{{
  "task": "perimeter",
  "params": {{
    "mask": {{ "rows": [{}], "cell": 0.1, "origin": [-0.6, -0.6] }},
    "window": [[-1.0, -1.0], [1.0, 1.0]],
    "s_list": [0.25],
    "truncation_radius": 8.0
  }}
}}"#,
            rows.join(", ")
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("perimeter.csv")).unwrap();
    let line = csv.lines().nth(1).unwrap();
    let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!(v > 0.0);
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    // classical perimeter of a radius-0.4 disk at this resolution
    let len = parsed["classical_perimeter"].as_f64().unwrap();
    assert!((len - 2.0 * std::f64::consts::PI * 0.4).abs() < 0.5, "length {len}");
}

#[test]
fn run_rejects_bad_grid_shape_as_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("heat.json");
    std::fs::write(
        &config,
        r#"{ "task": "heat", "params": { "s": 0.5, "t": 0.1, "points": 100, "period": 10.0,
             "initial": { "kind": "zero" } } }"#,
    )
    .unwrap();
    let out = fraclab(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "non-power-of-two grid is a config error");
}
