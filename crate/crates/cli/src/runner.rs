//! Config-driven execution: dispatches experiments, fans seeds out across a
//! worker pool, and writes stable CSV/JSON artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use gradtime_core::bound_calc::{bound_sequence, BoundError};
use gradtime_core::lowerbound_lab::{
    homog_adversary_run, markov_window_run, tail_bound_check, verify_window_postcondition,
    window_params, LabError,
};
use gradtime_core::objectives::{ObjectiveError, ProblemSpec};
use gradtime_core::optimizers::{method_params, run_method, AlgorithmDriver, MethodParams};
use gradtime_core::report;
use gradtime_core::sim_engine::{ProtocolError, RunResult};

use crate::config::{ExperimentConfig, ExperimentKind, MethodConfig};
use crate::verify;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("config is incomplete: {0}")]
    Incomplete(String),
}

/// Outcome of one `execute` call.
#[derive(Debug)]
pub struct ExecutionReport {
    pub all_passed: bool,
    pub artifacts: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, RunnerError> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| RunnerError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let mut file = std::fs::File::create(&path).map_err(|source| RunnerError::Io {
        path: path.clone(),
        source,
    })?;
    file.write_all(body.as_bytes())
        .map_err(|source| RunnerError::Io {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Resolves the driver for a simulate experiment: prescribed parameters
/// where available, overridden field by field.
pub fn resolve_driver(
    method: &MethodConfig,
    consts: &gradtime_core::bound_calc::ProblemConstants,
) -> Result<AlgorithmDriver, RunnerError> {
    let base = method_params(method.name, method.regime.clone().into(), consts);
    let params = match base {
        Ok(p) => MethodParams {
            gamma: method.gamma.unwrap_or(p.gamma),
            batch: method.batch.unwrap_or(p.batch),
            iterations: method.iterations.unwrap_or(p.iterations),
        },
        Err(e) => match (method.gamma, method.batch, method.iterations) {
            (Some(gamma), Some(batch), Some(iterations)) => MethodParams {
                gamma,
                batch,
                iterations,
            },
            _ => return Err(e.into()),
        },
    };
    let mut driver = AlgorithmDriver::new(method.name, params);
    driver.stop_at_prog = method.stop_at_prog;
    Ok(driver)
}

fn build_problem(config: &ExperimentConfig) -> Result<ProblemSpec, RunnerError> {
    let problem = config
        .problem
        .as_ref()
        .ok_or_else(|| RunnerError::Incomplete("problem section missing".into()))?;
    let mut spec = ProblemSpec::new(
        problem.objective.clone(),
        config.constants.clone(),
        problem.oracle.clone(),
    );
    if let Some(x0) = &problem.x0 {
        spec = spec.with_x0(x0.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn execute_bound(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExecutionReport, RunnerError> {
    let bound = config
        .bound
        .as_ref()
        .ok_or_else(|| RunnerError::Incomplete("bound section missing".into()))?;
    let profiles = config.profiles_for_seed(config.seed);
    let seq = bound_sequence(
        &profiles,
        &config.constants,
        bound.kind,
        &config.universal(),
    )?;
    let csv = report::bound_sequence_csv(&seq);
    let mut artifacts = vec![write_file(out_dir, "bound.csv", &csv)?];
    let summary = json!({
        "experiment": "bound",
        "kind": bound.kind,
        "rule": seq.rule,
        "iterations": seq.iterations,
        "final_time": seq.final_time(),
        "seed": config.seed,
        "config_hash": config_hash(config),
        "generated_at": unix_now(),
    });
    artifacts.push(write_file(
        out_dir,
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?);
    let final_text = report::fmt_work(seq.final_time());
    Ok(ExecutionReport {
        all_passed: true,
        artifacts,
        lines: vec![format!(
            "bound {:?}: K = {}, final time = {final_text}",
            bound.kind, seq.iterations
        )],
    })
}

fn execute_simulate(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExecutionReport, RunnerError> {
    let method = config
        .method
        .as_ref()
        .ok_or_else(|| RunnerError::Incomplete("method section missing".into()))?;
    let problem = build_problem(config)?;
    let driver = resolve_driver(method, &config.constants)?;
    let horizon = config.horizon.unwrap_or(1e12);
    let seeds = config.seed_list();
    let runs: Result<Vec<(u64, RunResult)>, ProtocolError> = seeds
        .par_iter()
        .map(|seed| {
            let profiles = config.profiles_for_seed(*seed);
            run_method(&driver, &problem, &profiles, horizon, *seed)
                .map(|result| (*seed, result))
        })
        .collect();
    let mut runs = runs?;
    runs.sort_by_key(|(seed, _)| *seed);

    let mut artifacts = Vec::new();
    for (seed, result) in &runs {
        let csv = report::run_result_csv(result);
        artifacts.push(write_file(out_dir, &format!("runs/run_{seed}.csv"), &csv)?);
    }
    // Aggregate means per iteration over the common prefix.
    let min_len = runs
        .iter()
        .map(|(_, r)| r.trajectory.len())
        .min()
        .unwrap_or(0);
    let mut aggregate = String::from("k,mean_grad_sq,mean_f\n");
    for k in 0..min_len {
        let grad = runs
            .iter()
            .map(|(_, r)| r.trajectory[k].grad_sq)
            .sum::<f64>()
            / runs.len() as f64;
        let f = runs
            .iter()
            .map(|(_, r)| r.trajectory[k].f_value)
            .sum::<f64>()
            / runs.len() as f64;
        aggregate.push_str(&format!(
            "{k},{},{}\n",
            report::fmt_f64(grad),
            report::fmt_f64(f)
        ));
    }
    artifacts.push(write_file(out_dir, "aggregate.csv", &aggregate)?);
    let mean_grad: f64 =
        runs.iter().map(|(_, r)| r.mean_grad_sq()).sum::<f64>() / runs.len().max(1) as f64;
    let summary = json!({
        "experiment": "simulate",
        "method": method.name,
        "gamma": driver.gamma,
        "batch": driver.batch,
        "iterations": driver.iterations,
        "seeds": seeds,
        "total_times": runs.iter().map(|(_, r)| r.total_time).collect::<Vec<_>>(),
        "mean_grad_sq": mean_grad,
        "config_hash": config_hash(config),
        "generated_at": unix_now(),
    });
    artifacts.push(write_file(
        out_dir,
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?);
    Ok(ExecutionReport {
        all_passed: true,
        artifacts,
        lines: vec![format!(
            "simulate {:?}: {} seeds, mean grad_sq = {}",
            method.name,
            runs.len(),
            report::fmt_f64(mean_grad)
        )],
    })
}

fn execute_adversary(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExecutionReport, RunnerError> {
    let adversary = config
        .adversary
        .as_ref()
        .ok_or_else(|| RunnerError::Incomplete("adversary section missing".into()))?;
    let seeds = config.seed_list();
    let mut artifacts = Vec::new();
    let mut lines = Vec::new();
    let mut all_passed = true;

    let traces: Result<Vec<_>, LabError> = seeds
        .par_iter()
        .map(|seed| {
            let profiles = config.profiles_for_seed(*seed);
            homog_adversary_run(&profiles, adversary.p, adversary.chain_len, *seed)
        })
        .collect();
    let traces = traces?;
    artifacts.push(write_file(
        out_dir,
        "traces.csv",
        &report::adversary_traces_csv(&traces),
    )?);
    lines.push(format!(
        "adversary: {} gated traces of length {}",
        traces.len(),
        adversary.chain_len
    ));

    if !adversary.tail_checks.is_empty() {
        let trials = adversary.tail_trials.unwrap_or(10_000);
        let mut rows = Vec::new();
        for (idx, kind) in adversary.tail_checks.iter().enumerate() {
            let report = tail_bound_check(kind, trials, config.seed.wrapping_add(idx as u64))?;
            all_passed &= report.within_slack();
            rows.push((format!("tail_{idx}"), report));
        }
        artifacts.push(write_file(
            out_dir,
            "tail_checks.csv",
            &report::tail_bound_csv(&rows),
        )?);
        lines.push(format!(
            "tail checks: {}/{} within slack",
            rows.iter().filter(|(_, r)| r.within_slack()).count(),
            rows.len()
        ));
    }

    if let Some(window) = &adversary.window {
        let profiles = config.profiles_for_seed(config.seed);
        let params = window_params(&profiles, window.chunk, &config.constants, window.windows)?;
        let post_ok = verify_window_postcondition(&params, &profiles).is_ok();
        all_passed &= post_ok;
        let mut csv = String::from("w,t_w\n");
        for (w, t) in params.times.iter().enumerate() {
            csv.push_str(&format!("{w},{}\n", report::fmt_work(*t)));
        }
        artifacts.push(write_file(out_dir, "windows.csv", &csv)?);
        let chain_len = window.chain_len.unwrap_or(window.windows);
        let blocks = window.markov_blocks.unwrap_or(1).min(params.block_count);
        let mut markov = String::from("seed,block,reached_window,necessary_time\n");
        for seed in &seeds {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(*seed);
            for block in 0..blocks {
                let outcome = markov_window_run(&params, &profiles, block, chain_len, &mut rng)?;
                markov.push_str(&format!(
                    "{seed},{block},{},{}\n",
                    outcome.reached_window,
                    report::fmt_work(outcome.necessary_time)
                ));
            }
        }
        artifacts.push(write_file(out_dir, "markov.csv", &markov)?);
        lines.push(format!(
            "windows: S = {}, postcondition {}",
            params.block_count,
            if post_ok { "holds" } else { "violated" }
        ));
    }

    let summary = json!({
        "experiment": "adversary",
        "p": adversary.p,
        "chain_len": adversary.chain_len,
        "seeds": seeds,
        "all_passed": all_passed,
        "config_hash": config_hash(config),
        "generated_at": unix_now(),
    });
    artifacts.push(write_file(
        out_dir,
        "summary.json",
        &serde_json::to_string_pretty(&summary).expect("serializable"),
    )?);
    Ok(ExecutionReport {
        all_passed,
        artifacts,
        lines,
    })
}

fn execute_verify(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExecutionReport, RunnerError> {
    let reports = verify::run_all(config.seed);
    let mut csv = String::from("id,name,pass,details\n");
    let mut lines = Vec::new();
    let mut all_passed = true;
    for r in &reports {
        all_passed &= r.passed;
        csv.push_str(&format!(
            "{},{},{},\"{}\"\n",
            r.id,
            r.name,
            r.passed,
            r.details.replace('"', "'")
        ));
        lines.push(r.render());
    }
    let artifacts = vec![write_file(out_dir, "verify.csv", &csv)?];
    Ok(ExecutionReport {
        all_passed,
        artifacts,
        lines,
    })
}

/// Dispatches a validated config. Exit semantics: `all_passed` is false only
/// when a verification-style check fails; unreachable bounds are reported as
/// `inf` rows, not failures.
pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> Result<ExecutionReport, RunnerError> {
    match config.experiment {
        ExperimentKind::Bound => execute_bound(config, out_dir),
        ExperimentKind::Simulate => execute_simulate(config, out_dir),
        ExperimentKind::Adversary => execute_adversary(config, out_dir),
        ExperimentKind::Verify => execute_verify(config, out_dir),
    }
}
