//! End-to-end runner checks over the config surface.

use gradtime_cli::config::{load_config_str, ExperimentKind};
use gradtime_cli::runner::execute;
use gradtime_core::bound_calc::fixed_homog_delta;

fn read(dir: &std::path::Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn bound_run_emits_csv_and_summary() {
    let text = r#"{
        "experiment": "bound",
        "profiles": [{"kind": "constant", "v": 1.0}, {"kind": "constant", "v": 1.0}],
        "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 4.0, "epsilon": 1.0, "n": 2},
        "bound": {"kind": "rennala_upper"}
    }"#;
    let config = load_config_str(text, &[]).unwrap();
    assert_eq!(config.experiment, ExperimentKind::Bound);
    let dir = tempfile::tempdir().unwrap();
    let report = execute(&config, dir.path()).unwrap();
    assert!(report.all_passed);
    let csv = read(dir.path(), "bound.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,t_k"));
    // K = 24 iterations plus the zero row.
    assert_eq!(csv.lines().count(), 26);
    // The per-iteration step of the final entry matches the closed-form
    // fixed-model scale within the sandwich factors.
    let last = csv.lines().last().unwrap();
    let final_time: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    let per_iteration = final_time / 24.0;
    let scale = fixed_homog_delta(&[1.0, 1.0], 4.0).unwrap();
    assert!(
        per_iteration >= scale / 4.0 && per_iteration <= scale * 4.0,
        "per-iteration {per_iteration} vs closed-form scale {scale}"
    );
    let summary = read(dir.path(), "summary.json");
    assert!(summary.contains("\"final_time\""));
    assert!(summary.contains("\"config_hash\""));
}

#[test]
fn simulate_rerun_is_deterministic() {
    let text = r#"{
        "experiment": "simulate",
        "profiles": [{"kind": "constant", "v": 1.0}],
        "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 1.0, "epsilon": 0.5, "n": 1},
        "method": {"name": "rennala", "regime": "nonconvex", "iterations": 10},
        "problem": {
            "objective": {"kind": "quadratic", "l": 1.0, "dim": 2},
            "oracle": {"kind": "gaussian", "sigma_sq": 1.0},
            "x0": [1.0, 1.0]
        },
        "seed": 3,
        "trials": 2
    }"#;
    let config = load_config_str(text, &[]).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    execute(&config, dir_a.path()).unwrap();
    execute(&config, dir_b.path()).unwrap();
    for name in ["runs/run_3.csv", "runs/run_4.csv", "aggregate.csv"] {
        assert_eq!(read(dir_a.path(), name), read(dir_b.path(), name), "{name}");
    }
}

#[test]
fn adversary_run_reports_inf_rows_without_failing() {
    // The second worker goes permanently silent, so late thresholds are
    // unreachable; that must surface as inf rows, not as a failure.
    let text = r#"{
        "experiment": "adversary",
        "profiles": [
            {"kind": "trace", "sample_times": [0.0, 2.0], "sample_powers": [1.0, 0.0]},
            {"kind": "trace", "sample_times": [0.0, 1.0], "sample_powers": [0.5, 0.0]}
        ],
        "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 1.0, "epsilon": 0.1, "n": 2},
        "adversary": {"p": 1.0, "chain_len": 6},
        "seed": 2,
        "trials": 1
    }"#;
    let config = load_config_str(text, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = execute(&config, dir.path()).unwrap();
    assert!(report.all_passed);
    let traces = read(dir.path(), "traces.csv");
    assert!(traces.lines().any(|l| l.ends_with(",inf")), "{traces}");
}

#[test]
fn simulate_requires_its_sections() {
    let text = r#"{
        "experiment": "simulate",
        "profiles": [{"kind": "constant", "v": 1.0}],
        "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 1.0, "epsilon": 0.5, "n": 1}
    }"#;
    assert!(load_config_str(text, &[]).is_err());
}
