use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dfs_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfs-sim"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn run_hadamard_on_zero_has_unit_fidelity() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "hadamard",
        "--alpha",
        "1,0",
        "--beta",
        "0,0",
        "--seed",
        "42",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!((f(&r["fidelity"]) - 1.0).abs() <= 1e-10);
    assert_eq!(r["seed"], 42);
    assert!(r["record"].as_array().unwrap().len() >= 5);
}

#[test]
fn run_cphase_signs_one_one() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "cphase",
        "--alpha",
        "0",
        "--beta",
        "1",
        "--c",
        "0",
        "--d",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let amp = &r["output"][3];
    assert!(
        (f(&amp[0]) + 1.0).abs() < 1e-12 && f(&amp[1]).abs() < 1e-12,
        "{amp}"
    );
    for i in 0..3 {
        assert!(f(&r["output"][i][0]).abs() < 1e-12);
    }
}

#[test]
fn unnormalized_input_is_a_config_error() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "hadamard",
        "--alpha",
        "1",
        "--beta",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not normalized"));
    assert!(out.stdout.is_empty());
}

#[test]
fn other_config_errors_exit_two() {
    for args in [
        &["run"][..],
        &["run", "--protocol", "toffoli"],
        &["run", "--protocol", "rz"],
        &["verify", "--samples", "0"],
        &["verify", "--format", "csv"],
        &["run", "--protocol", "hadamard", "--bogus"],
        &["run", "--config", "/nonexistent/config.json"],
    ] {
        assert_eq!(dfs_sim(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn enumerate_counts_and_sums() {
    let r = json(&dfs_sim(&[
        "enumerate",
        "--protocol",
        "cr-block",
        "--phases",
        "0.7,1.3",
        "--alpha",
        "0.6",
        "--beta",
        "0,0.8",
    ]));
    assert_eq!(r["branch_count"], 8);
    assert!(f(&r["min_fidelity"]) >= 1.0 - 1e-10);
    assert_eq!(r["probability_sum_ok"], true);

    let r = json(&dfs_sim(&[
        "enumerate",
        "--protocol",
        "rz",
        "--theta",
        "-0.4",
    ]));
    assert_eq!(r["branch_count"], 1);
    assert!((f(&r["branches"][0]["probability"]) - 1.0).abs() < 1e-15);

    let out = dfs_sim(&[
        "enumerate",
        "--protocol",
        "cphase",
        "--alpha",
        "0.6",
        "--beta",
        "0.8",
        "--c",
        "0,1",
        "--d",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let total: f64 = r["branches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| f(&b["probability"]))
        .sum();
    assert!((total - 1.0).abs() <= 1e-10);
    assert_eq!(
        r["branch_count"].as_u64().unwrap() as usize,
        r["branches"].as_array().unwrap().len()
    );
}

#[test]
fn enumerate_csv() {
    let out = dfs_sim(&["enumerate", "--protocol", "hadamard", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("branch,outcomes,probability,fidelity"));
    assert_eq!(lines.count(), 32);
}

#[test]
fn verify_default_suite_passes() {
    let out = dfs_sim(&["verify"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = json(&out);
    assert_eq!(r["draws"], 20);
    assert_eq!(r["checks_failed"], 0);
    assert!(r["failures"].as_array().unwrap().is_empty());
}

#[test]
fn verify_reports_a_corrupted_cell() {
    let out = dfs_sim(&["verify", "--samples", "3", "--corrupt-table", "0,1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    let failures = r["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 3 * 2);
    for fail in failures {
        assert!(fail["branch"].as_str().unwrap().starts_with("P1=0,P2=1"));
        assert!(fail["derived_correction"]["control"].is_number());
        assert!(fail["expected"].as_array().unwrap().len() == 16);
    }
}

#[test]
fn verify_with_zero_phases_passes() {
    let out = dfs_sim(&["verify", "--phases", "0,0", "--samples", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["phases"]["phi_t"], 0.0);
}

#[test]
fn noise_bench_rows() {
    let out = dfs_sim(&[
        "noise-bench",
        "--noise",
        r#"[{"type":"dephasing","distribution":"uniform"},{"type":"dephasing","distribution":{"fixed":3.141592653589793}},{"type":"error","operator":"XI","probability":0.1}]"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["encoding"], "dfs");
    assert_eq!(f(&rows[0]["mean_fidelity"]), 1.0);
    assert_eq!(f(&rows[0]["stderr"]), 0.0);
    assert!((f(&rows[1]["mean_fidelity"]) - 2.0 / std::f64::consts::PI).abs() < 0.02);
    assert!(rows[1]["mean_dfs_weight"].is_null());
    assert!(f(&rows[3]["mean_fidelity"]) < 1e-12);
    assert!((f(&rows[4]["mean_dfs_weight"]) - 0.9).abs() < 0.01);
    assert_eq!(rows[4]["samples"], 10_000);
}

#[test]
fn noise_bench_csv_columns() {
    let out = dfs_sim(&["noise-bench", "--samples", "100", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("encoding,distribution,parameter,mean_fidelity,stderr,samples,mean_dfs_weight")
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(
        &path,
        r#"{"command": "run", "protocol": "rz", "theta": 1.0, "alpha": [0.6, 0], "beta": "0,0.8", "seed": 3}"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let r = json(&dfs_sim(&["run", "--config", p]));
    assert_eq!(r["seed"], 3);
    assert_eq!(f(&r["theta"]), 1.0);
    let r = json(&dfs_sim(&[
        "run", "--config", p, "--seed", "8", "--theta", "-2",
    ]));
    assert_eq!(r["seed"], 8);
    assert_eq!(f(&r["theta"]), -2.0);
    assert_eq!(dfs_sim(&["verify", "--config", p]).status.code(), Some(2));
}

#[test]
fn out_file_and_thread_count_do_not_change_reports() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_dfs-sim"))
            .args(["noise-bench", "--samples", "500", "--seed", "4", "--out"])
            .arg(&path)
            .env("DFS_SIM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(Path::new(&path)).unwrap()
    };
    assert_eq!(read("a.json", "1"), read("b.json", "3"));
    let bad = Command::new(env!("CARGO_BIN_EXE_dfs-sim"))
        .args(["noise-bench", "--samples", "5"])
        .env("DFS_SIM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn timestamp_is_opt_in() {
    let plain = json(&dfs_sim(&["run", "--protocol", "hadamard"]));
    assert!(plain.get("timestamp").is_none());
    let stamped = json(&dfs_sim(&["run", "--protocol", "hadamard", "--timestamp"]));
    assert!(stamped["timestamp"].is_u64());
}

#[test]
fn leaked_input_fails_the_run() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "hadamard",
        "--noise",
        r#"{"type":"error","operator":"XI","probability":1.0}"#,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["noise"][0]["fired"], true);
    assert!(r["error"].as_str().unwrap().contains("leak"));
}

#[test]
fn dephasing_noise_does_not_hurt_a_run() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "cphase",
        "--alpha",
        "0.6",
        "--beta",
        "0.8",
        "--c",
        "0,1",
        "--d",
        "0",
        "--noise",
        r#"{"type":"dephasing","distribution":{"gaussian":{"mean":0.3,"sigma":2}}}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(f(&json(&out)["fidelity"]) >= 1.0 - 1e-10);
}

#[test]
fn transfer_mode_runs() {
    let out = dfs_sim(&[
        "run",
        "--protocol",
        "cphase",
        "--hadamard-mode",
        "transfer",
        "--alpha",
        "0",
        "--beta",
        "1",
        "--c",
        "0",
        "--d",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["hadamard_mode"], "transfer");
    assert!(r["record"].as_array().unwrap().len() > 10);
}
