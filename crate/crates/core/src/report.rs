//! Stable CSV serialization: fixed column order, 12 significant digits,
//! `inf` sentinel. Re-running the same configuration reproduces these bodies
//! byte for byte.

use crate::bound_calc::BoundSequence;
use crate::lowerbound_lab::{AdversaryTrace, TailBoundReport};
use crate::power_model::WorkValue;
use crate::sim_engine::RunResult;

/// 12 significant digits in scientific notation; stable across runs.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.11e}")
    }
}

/// `inf` sentinel for unreachable values.
pub fn fmt_work(v: WorkValue) -> String {
    match v {
        WorkValue::Finite(x) => fmt_f64(x),
        WorkValue::Inf => "inf".to_string(),
    }
}

/// Rows `(k, t_k)` of a bound sequence.
pub fn bound_sequence_csv(seq: &BoundSequence) -> String {
    let mut out = String::from("k,t_k\n");
    for (k, t) in seq.times.iter().enumerate() {
        out.push_str(&format!("{k},{}\n", fmt_work(*t)));
    }
    out
}

/// Rows `(k, t_k, grad_sq, f_value)` of a run trajectory.
pub fn run_result_csv(result: &RunResult) -> String {
    let mut out = String::from("k,t_k,grad_sq,f_value\n");
    for p in &result.trajectory {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.k,
            fmt_f64(p.time),
            fmt_f64(p.grad_sq),
            fmt_f64(p.f_value)
        ));
    }
    out
}

/// Rows `(trial, k, eta, t_k)` for a batch of adversary traces.
pub fn adversary_traces_csv(traces: &[AdversaryTrace]) -> String {
    let mut out = String::from("trial,k,eta,t_k\n");
    for (trial, trace) in traces.iter().enumerate() {
        for (k, (eta, t)) in trace.etas.iter().zip(&trace.times).enumerate() {
            out.push_str(&format!("{trial},{},{eta},{}\n", k + 1, fmt_work(*t)));
        }
    }
    out
}

/// Summary rows `(check, empirical, bound, pass)`.
pub fn tail_bound_csv(rows: &[(String, TailBoundReport)]) -> String {
    let mut out = String::from("check,empirical,bound,pass\n");
    for (name, report) in rows {
        out.push_str(&format!(
            "{name},{},{},{}\n",
            fmt_f64(report.empirical),
            fmt_f64(report.bound),
            report.within_slack()
        ));
    }
    out
}
