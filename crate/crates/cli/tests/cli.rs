// Copyright 2026 The galton-core Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn galton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galton"))
        .args(args)
        .env_remove("GALTON_MAX_QUBITS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const WIDE: &str = r#"{"mu_hat":256,"sigma_hat_sq":2154.25,"x0":0,"l":512,"n1":5,"nm":9,"c":4}"#;
const SMALL: &str = r#"{"mu_hat":8,"sigma_hat_sq":11.75,"x0":0,"l":16,"n1":2,"nm":4,"c":2}"#;

#[test]
fn plan_wide_target() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "wide.json", WIDE);
    let o = galton(&["plan", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t"], serde_json::json!([32, 4, 4, 4, 4]));
    assert_eq!(v["predicted_variance"], 2154.25);
    assert_eq!(v["alpha"], -37.5);
    assert_eq!(v["shift_applied"], -38);
}

#[test]
fn plan_small_target() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "small.json", SMALL);
    let o = galton(&["plan", "--spec", spec.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t"], serde_json::json!([2, 2, 2]));
}

#[test]
fn plan_rejects_infeasible_targets() {
    let dir = TempDir::new().unwrap();
    let zero = write(
        dir.path(),
        "zero.json",
        r#"{"mu_hat":8,"sigma_hat_sq":0,"x0":0,"l":16,"n1":2,"nm":4,"c":2}"#,
    );
    assert_eq!(
        galton(&["plan", "--spec", zero.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // below what the scaling cascade alone produces
    let tiny = write(
        dir.path(),
        "tiny.json",
        r#"{"mu_hat":8,"sigma_hat_sq":0.5,"x0":0,"l":16,"n1":2,"nm":4,"c":2}"#,
    );
    assert_eq!(
        galton(&["plan", "--spec", tiny.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let extra = write(
        dir.path(),
        "extra.json",
        r#"{"mu_hat":8,"sigma_hat_sq":4,"x0":0,"l":16,"n1":2,"nm":4,"c":2,"p":1}"#,
    );
    assert_eq!(
        galton(&["plan", "--spec", extra.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "small.json", SMALL);
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = galton(&[
            "run",
            "--spec",
            spec.to_str().unwrap(),
            "--shots",
            "300",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    let a = run("7", "a.jsonl");
    assert_eq!(a, run("7", "b.jsonl"));
    assert_ne!(a, run("8", "c.jsonl"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 300);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let accepted = v["accepted"].as_bool().unwrap();
        let trace = v["ancilla_trace"].as_array().unwrap();
        assert_eq!(accepted, trace.iter().all(|b| b == 0));
        if accepted {
            assert_eq!(trace.len(), 6);
        }
    }
}

#[test]
fn run_small_config_acceptance() {
    let o = galton(&[
        "run",
        "--schedule",
        "2,2,2",
        "--n1",
        "2",
        "--shots",
        "2500",
        "--seed",
        "11",
    ]);
    assert!(o.status.success());
    let summary: Value = serde_json::from_str(String::from_utf8_lossy(&o.stderr).trim()).unwrap();
    let rate = summary["acceptance_rate"].as_f64().unwrap();
    let sigma = (0.3186f64 * (1.0 - 0.3186) / 2500.0).sqrt();
    assert!((rate - 0.3186).abs() <= 3.0 * sigma, "rate {rate}");
    assert!((summary["acceptance_theory"].as_f64().unwrap() - 0.3193359375).abs() < 1e-12);
}

#[test]
fn empty_schedule_accepts_in_one_attempt() {
    let dir = TempDir::new().unwrap();
    let state = dir.path().join("state.csv");
    let o = galton(&[
        "run",
        "--schedule",
        "0",
        "--n1",
        "3",
        "--state-out",
        state.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["accepted"], true);
    assert_eq!(v["attempts"], 1);
    let csv = std::fs::read_to_string(state).unwrap();
    assert_eq!(csv.lines().next(), Some("index,re,im,prob"));
    assert_eq!(csv.lines().count(), 9);
}

#[test]
fn exhausted_attempts_exit_three() {
    let o = galton(&[
        "run",
        "--schedule",
        "8",
        "--n1",
        "4",
        "--shots",
        "50",
        "--max-attempts",
        "2",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn selection_curve_starts_half_three_quarters() {
    let o = galton(&["curve", "--schedule", "4,2", "--n1", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,stage,n_qubits,p0_theory,p0_sim"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    assert!((rows[0][4] - 0.5).abs() < 1e-12);
    assert!((rows[1][4] - 0.75).abs() < 1e-12);
}

#[test]
fn resources_for_exact_equivalent() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "wide.json", WIDE);
    let o = galton(&[
        "resources",
        "--spec",
        spec.to_str().unwrap(),
        "--variant",
        "exact",
    ]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "variant,data_qubits,ancillas,total_qubits\nmcmr,9,1,10\nmcmr-free,9,8617,8626\n"
    );
}

#[test]
fn export_counts_measurements() {
    let o = galton(&["export", "--schedule", "2,2,2", "--n1", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("// measurements: 10"));
    assert_eq!(text.lines().filter(|l| l.contains("= measure")).count(), 10);
    assert!(text.contains("OPENQASM 3.0;"));
}

#[test]
fn noise_sweep_columns() {
    let o = galton(&["noise-sweep", "--n", "4", "--ts", "3,6", "--js", "0,3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,j,kind,p1_err,p1_clean"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn qubit_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_galton"))
        .args([
            "run",
            "--schedule",
            "2,2,2",
            "--n1",
            "2",
            "--variant",
            "mcmr-free",
        ])
        .env("GALTON_MAX_QUBITS", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit is 5"));
}
