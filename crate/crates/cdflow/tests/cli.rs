//! End-to-end checks of the `cdflow` binary: JSON report shape, exit
//! codes, and byte-level determinism of seeded runs.

use std::process::{Command, Output};

fn cdflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn constants_c_phi_value() {
    let out = cdflow(&["constants", "--name", "c_phi", "--n", "1", "--beta", "3"]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["value"].as_f64().unwrap(), 3.0625);
    assert_eq!(v["result"]["validity"], true);
    assert_eq!(v["artifact"], "cdflow");
}

#[test]
fn certify_known_pair() {
    let out = cdflow(&[
        "certify", "--family", "quadratic", "--beta", "2", "--rho", "3", "--n", "-2",
        "--grid-n", "2001",
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["status"], "certified");
    assert!(v["result"]["min_slack"].as_f64().unwrap().abs() <= 1e-9);
    // full resolved config embedded for replay
    assert_eq!(v["config"]["command"], "certify");
    assert!(v["config"]["grid_r"].as_f64().unwrap() > 0.0);
}

#[test]
fn forbidden_dimension_band_exits_2() {
    let out = cdflow(&[
        "certify", "--family", "quadratic", "--beta", "2", "--rho", "3", "--n", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[0, 1]"), "stderr must name the forbidden band: {err}");
}

#[test]
fn unknown_constant_exits_2() {
    let out = cdflow(&["constants", "--name", "nope", "--n", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn frontier_quartic_report() {
    let out = cdflow(&["frontier", "--family", "quartic", "--beta", "2", "--grid-n", "1001"]);
    let v = stdout_json(&out);
    let best = v["result"]["best_constant"].as_f64().unwrap();
    assert!(best >= 3.5 - 1e-6, "best {best}");
    assert_eq!(v["result"]["certificate"]["status"], "certified");
}

#[test]
fn beckner_runs_are_byte_identical() {
    let args = [
        "beckner", "--family", "quadratic", "--beta", "3", "--p", "1.8", "--trials", "40",
        "--seed", "7", "--grid-n", "1001",
    ];
    let a = cdflow(&args);
    let b = cdflow(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "identical argv + seed must replay byte for byte");
}

#[test]
fn flow_summary_and_csv() {
    let dir = std::env::temp_dir().join(format!("cdflow-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("trace.csv");
    let out = cdflow(&[
        "flow", "--family", "quadratic", "--beta", "3", "--entropy", "variance", "--init", "x",
        "--t-end", "0.2", "--dt", "1e-3", "--k", "4", "--grid-n", "2001", "--grid-r", "60",
        "--scheme-weight", "0.5", "--csv", csv.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["result"]["decay_ok"], true);
    assert!(v["result"]["mass_drift"].as_f64().unwrap() < 1e-9);
    let body = std::fs::read_to_string(&csv).unwrap();
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,lambda,lambda1,lambda2,residual_linear,residual_refined,mass"
    );
    assert!(lines.count() >= 20);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn constants_sweep_csv_on_stdout() {
    let out = cdflow(&["constants", "--name", "p_star", "--sweep", "n=-10:-2.5:0.5"]);
    assert!(out.status.success());
    let body = String::from_utf8_lossy(&out.stdout);
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "n,value,valid");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    // all n < -2 here, so every row is valid
    assert!(rows.iter().all(|r| r.ends_with("e0") || r.contains(",1.")));
}

#[test]
fn gap_report_fields() {
    let out = cdflow(&["gap", "--family", "quadratic", "--beta", "3", "--grid-n", "2001"]);
    let v = stdout_json(&out);
    let gap = v["result"]["gap"].as_f64().unwrap();
    assert!((gap - 4.0).abs() < 0.1, "gap {gap}");
    assert_eq!(v["result"]["predicted"].as_f64().unwrap(), 4.0);
    assert_eq!(v["result"]["eigenvector_sign_changes"], 1);
}
