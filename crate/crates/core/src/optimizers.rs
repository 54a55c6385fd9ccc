//! Algorithm drivers for the protocol: batch-collecting SGD in homogeneous
//! (sum-count) and heterogeneous (harmonic-count) flavors, minibatch and
//! asynchronous baselines, and the accelerated update for the smooth convex
//! regime.

use serde::{Deserialize, Serialize};

use crate::bound_calc::{
    iterations_needed, sum_count_threshold, BoundError, ProblemConstants, Regime,
};
use crate::numeric::ceil_snapped;
use crate::objectives::{prog, ProblemSpec};
use crate::power_model::PowerProfile;
use crate::sim_engine::{
    run_protocol_with, Driver, ProtocolEngine, ProtocolError, RunResult, SimOptions,
};

/// Method tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Collects a batch of `S` gradients at the current point across all
    /// workers, steps, cancels stragglers.
    Rennala,
    /// Collects per-worker batches until the harmonic mean of batch sizes
    /// reaches `S/n`, then averages the per-worker means.
    Malenia,
    /// One gradient per worker per iteration; waits for the slowest.
    Minibatch,
    /// Steps on every arrival, dispatching the new point to the finisher.
    Async,
    /// Rennala collection with the accelerated recursion.
    AccelRennala,
    /// Malenia collection with the accelerated recursion.
    AccelMalenia,
}

impl Method {
    pub fn is_accelerated(self) -> bool {
        matches!(self, Method::AccelRennala | Method::AccelMalenia)
    }

    pub fn is_harmonic(self) -> bool {
        matches!(self, Method::Malenia | Method::AccelMalenia)
    }
}

/// Prescribed stepsize, batch size, and iteration budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub gamma: f64,
    pub batch: u64,
    pub iterations: u64,
}

/// Stepsize, batch size, and iteration budget for a method in a regime.
///
/// The minibatch and asynchronous baselines are comparison points, not
/// reproductions of their sharpest published rates: minibatch uses
/// `γ = min{1/(2L), nε/(2Lσ²)}` and the async baseline a constant
/// `γ = min{1/L, ε/(Lσ²)}/n`, both with iteration budgets inflated by the
/// usual `1 + σ²/(nε)` factor.
pub fn method_params(
    method: Method,
    regime: Regime,
    consts: &ProblemConstants,
) -> Result<MethodParams, BoundError> {
    consts.validate()?;
    let l = consts.l;
    let n = consts.n as f64;
    let eps = consts.epsilon;
    let sigma_sq = consts.sigma_sq;
    let unsupported = || {
        Err(BoundError::InvalidArgument(format!(
            "method {method:?} has no parameter rule in regime {regime:?}"
        )))
    };
    match regime {
        Regime::Nonconvex => {
            let iterations = iterations_needed(Regime::Nonconvex, consts)?;
            match method {
                Method::Rennala => Ok(MethodParams {
                    gamma: 1.0 / (2.0 * l),
                    batch: sum_count_threshold(consts),
                    iterations,
                }),
                Method::Malenia => {
                    let batch = sum_count_threshold(consts).max(consts.n as u64);
                    let gamma = if sigma_sq == 0.0 {
                        1.0 / l
                    } else {
                        (1.0 / l).min(eps * batch as f64 / (2.0 * l * sigma_sq))
                    };
                    Ok(MethodParams {
                        gamma,
                        batch,
                        iterations,
                    })
                }
                Method::Minibatch => {
                    let gamma = if sigma_sq == 0.0 {
                        1.0 / (2.0 * l)
                    } else {
                        (1.0 / (2.0 * l)).min(n * eps / (2.0 * l * sigma_sq))
                    };
                    let factor = 1.0 + sigma_sq / (n * eps);
                    Ok(MethodParams {
                        gamma,
                        batch: 1,
                        iterations: ceil_snapped(iterations as f64 * factor) as u64,
                    })
                }
                Method::Async => {
                    let gamma = if sigma_sq == 0.0 {
                        1.0 / (l * n)
                    } else {
                        (1.0 / l).min(eps / (l * sigma_sq)) / n
                    };
                    let factor = 1.0 + sigma_sq / (n * eps);
                    Ok(MethodParams {
                        gamma,
                        batch: 1,
                        iterations: ceil_snapped(iterations as f64 * factor * n) as u64,
                    })
                }
                _ => unsupported(),
            }
        }
        Regime::ConvexNonsmooth => {
            let m = consts.m()?;
            let iterations = iterations_needed(Regime::ConvexNonsmooth, consts)?;
            let base = ceil_snapped(sigma_sq / (m * m)).max(1.0) as u64;
            let batch = match method {
                Method::Rennala => base,
                Method::Malenia => base.max(consts.n as u64),
                _ => return unsupported(),
            };
            let gamma = eps / (m * m + sigma_sq / batch as f64);
            Ok(MethodParams {
                gamma,
                batch,
                iterations,
            })
        }
        Regime::ConvexSmooth => {
            let r = consts.r()?;
            let iterations = iterations_needed(Regime::ConvexSmooth, consts)?;
            let base = ceil_snapped(sigma_sq * r / (eps.powf(1.5) * l.sqrt())).max(1.0) as u64;
            let batch = match method {
                Method::AccelRennala => base,
                Method::AccelMalenia => base.max(consts.n as u64),
                _ => return unsupported(),
            };
            let k = iterations as f64;
            let gamma = if sigma_sq == 0.0 {
                1.0 / (4.0 * l)
            } else {
                let by_noise =
                    (3.0 * r * r * batch as f64 / (4.0 * sigma_sq * (k + 1.0) * (k + 2.0) * (k + 2.0)))
                        .sqrt();
                (1.0 / (4.0 * l)).min(by_noise)
            };
            Ok(MethodParams {
                gamma,
                batch,
                iterations,
            })
        }
    }
}

/// State of the accelerated recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelState {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl AccelState {
    pub fn new(x0: &[f64]) -> Self {
        Self {
            x: x0.to_vec(),
            u: x0.to_vec(),
        }
    }
}

/// The extrapolated point `y^{k+1} = (1 − α_{k+1}) x^k + α_{k+1} u^k` with
/// `α_{k+1} = 2/(k+2)`; gradients of iteration `k` are collected here.
pub fn accel_query_point(state: &AccelState, k: u64) -> Vec<f64> {
    let alpha = 2.0 / (k as f64 + 2.0);
    state
        .x
        .iter()
        .zip(&state.u)
        .map(|(x, u)| (1.0 - alpha) * x + alpha * u)
        .collect()
}

/// One accelerated step:
/// `γ_{k+1} = γ (k+1)`, `α_{k+1} = 2/(k+2)`,
/// `u^{k+1} = u^k − (γ_{k+1}/s_k) g`,
/// `x^{k+1} = (1 − α_{k+1}) x^k + α_{k+1} u^{k+1}`.
/// `s_k` divides a summed batch; pass 1 when `g` is already averaged.
pub fn accelerated_update(
    state: &AccelState,
    g: &[f64],
    k: u64,
    gamma: f64,
    s_k: f64,
) -> AccelState {
    let gamma_next = gamma * (k as f64 + 1.0);
    let alpha = 2.0 / (k as f64 + 2.0);
    let u: Vec<f64> = state
        .u
        .iter()
        .zip(g)
        .map(|(u, g)| u - gamma_next / s_k * g)
        .collect();
    let x: Vec<f64> = state
        .x
        .iter()
        .zip(&u)
        .map(|(x, u)| (1.0 - alpha) * x + alpha * u)
        .collect();
    AccelState { x, u }
}

/// Whether the harmonic batch condition `(1/n Σ 1/B_i)^{-1} >= S/n` is met;
/// a worker with `B_i = 0` contributes an infinite reciprocal.
pub fn harmonic_exit_met(batches: &[u64], target_batch: u64) -> bool {
    if batches.contains(&0) {
        return false;
    }
    let n = batches.len() as f64;
    let recip: f64 = batches.iter().map(|b| 1.0 / *b as f64).sum();
    recip <= n * n / target_batch as f64 * (1.0 + 1e-12)
}

/// A configured method run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmDriver {
    pub method: Method,
    pub gamma: f64,
    /// Batch/target size `S`.
    pub batch: u64,
    /// Iteration budget `K`.
    pub iterations: u64,
    /// Optional early stop once the iterate's progress (last nonzero
    /// coordinate) reaches this value; used by chain experiments.
    #[serde(default)]
    pub stop_at_prog: Option<usize>,
}

impl AlgorithmDriver {
    pub fn new(method: Method, params: MethodParams) -> Self {
        Self {
            method,
            gamma: params.gamma,
            batch: params.batch,
            iterations: params.iterations,
            stop_at_prog: None,
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        if !(self.gamma > 0.0) || self.batch < 1 || self.iterations < 1 {
            return Err(BoundError::InvalidArgument(format!(
                "driver needs gamma > 0, batch >= 1, iterations >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

struct MethodExecution<'d> {
    driver: &'d AlgorithmDriver,
    batch_log: Vec<Vec<u64>>,
    record_batches: bool,
}

impl MethodExecution<'_> {
    fn reached_target(&self, x: &[f64]) -> bool {
        self.driver
            .stop_at_prog
            .is_some_and(|target| prog(x) >= target)
    }

    fn run_batch_methods(&mut self, engine: &mut ProtocolEngine<'_>) -> Result<(), ProtocolError> {
        let d = self.driver;
        let n = engine.worker_count();
        let mut x = engine.problem().x0.clone();
        let mut accel = d.method.is_accelerated().then(|| AccelState::new(&x));
        for k in 0..d.iterations {
            if self.reached_target(&x) {
                return Ok(());
            }
            let query = match &accel {
                Some(state) => accel_query_point(state, k),
                None => x.clone(),
            };
            for w in 0..n {
                engine.assign(w, &query)?;
            }
            let g = if d.method.is_harmonic() {
                let mut counts = vec![0u64; n];
                let mut sums = vec![vec![0.0; x.len()]; n];
                while !harmonic_exit_met(&counts, d.batch) {
                    let Some((w, grad)) = engine.next_completion()? else {
                        return Ok(());
                    };
                    counts[w] += 1;
                    for (acc, g) in sums[w].iter_mut().zip(&grad) {
                        *acc += g;
                    }
                    engine.assign(w, &query)?;
                }
                if self.record_batches {
                    self.batch_log.push(counts.clone());
                }
                let mut g = vec![0.0; x.len()];
                for (count, sum) in counts.iter().zip(&sums) {
                    for (acc, s) in g.iter_mut().zip(sum) {
                        *acc += s / (*count as f64 * n as f64);
                    }
                }
                g
            } else {
                let mut g = vec![0.0; x.len()];
                let mut received = 0;
                while received < d.batch {
                    let Some((w, grad)) = engine.next_completion()? else {
                        return Ok(());
                    };
                    for (acc, gi) in g.iter_mut().zip(&grad) {
                        *acc += gi / d.batch as f64;
                    }
                    received += 1;
                    engine.assign(w, &query)?;
                }
                g
            };
            engine.cancel_all();
            match &mut accel {
                Some(state) => {
                    *state = accelerated_update(state, &g, k, d.gamma, 1.0);
                    x = state.x.clone();
                }
                None => {
                    for (xi, gi) in x.iter_mut().zip(&g) {
                        *xi -= d.gamma * gi;
                    }
                }
            }
            engine.record_iterate(&x)?;
        }
        Ok(())
    }

    fn run_minibatch(&mut self, engine: &mut ProtocolEngine<'_>) -> Result<(), ProtocolError> {
        let d = self.driver;
        let n = engine.worker_count();
        let mut x = engine.problem().x0.clone();
        for _ in 0..d.iterations {
            if self.reached_target(&x) {
                return Ok(());
            }
            for w in 0..n {
                engine.assign(w, &x)?;
            }
            let mut g = vec![0.0; x.len()];
            for _ in 0..n {
                let Some((_, grad)) = engine.next_completion()? else {
                    return Ok(());
                };
                for (acc, gi) in g.iter_mut().zip(&grad) {
                    *acc += gi / n as f64;
                }
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= d.gamma * gi;
            }
            engine.record_iterate(&x)?;
        }
        Ok(())
    }

    fn run_async(&mut self, engine: &mut ProtocolEngine<'_>) -> Result<(), ProtocolError> {
        let d = self.driver;
        let n = engine.worker_count();
        let mut x = engine.problem().x0.clone();
        for w in 0..n {
            engine.assign(w, &x)?;
        }
        for _ in 0..d.iterations {
            if self.reached_target(&x) {
                break;
            }
            let Some((w, grad)) = engine.next_completion()? else {
                return Ok(());
            };
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= d.gamma * gi;
            }
            engine.assign(w, &x)?;
            engine.record_iterate(&x)?;
        }
        engine.cancel_all();
        Ok(())
    }
}

impl Driver for MethodExecution<'_> {
    fn run(&mut self, engine: &mut ProtocolEngine<'_>) -> Result<(), ProtocolError> {
        match self.driver.method {
            Method::Rennala | Method::AccelRennala | Method::Malenia | Method::AccelMalenia => {
                self.run_batch_methods(engine)
            }
            Method::Minibatch => self.run_minibatch(engine),
            Method::Async => self.run_async(engine),
        }
    }
}

/// Per-run extras beyond the protocol-level [`RunResult`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodTrace {
    /// Per-iteration per-worker batch counts of harmonic methods, when
    /// requested.
    pub batch_log: Option<Vec<Vec<u64>>>,
}

/// Executes a configured method through the protocol engine.
pub fn run_method(
    driver: &AlgorithmDriver,
    problem: &ProblemSpec,
    profiles: &[PowerProfile],
    horizon: f64,
    seed: u64,
) -> Result<RunResult, ProtocolError> {
    run_method_with(driver, problem, profiles, horizon, seed, SimOptions::default())
        .map(|(result, _)| result)
}

/// [`run_method`] with explicit recording options; harmonic methods also
/// report their per-iteration batch counts.
pub fn run_method_with(
    driver: &AlgorithmDriver,
    problem: &ProblemSpec,
    profiles: &[PowerProfile],
    horizon: f64,
    seed: u64,
    options: SimOptions,
) -> Result<(RunResult, MethodTrace), ProtocolError> {
    driver
        .validate()
        .map_err(|e| ProtocolError::Driver(e.to_string()))?;
    if driver.method.is_harmonic() {
        let locals = problem.objective.local_count();
        if locals < 2 {
            return Err(ProtocolError::Driver(
                "harmonic-batch methods need a heterogeneous objective".into(),
            ));
        }
        if locals != profiles.len() {
            return Err(ProtocolError::Driver(format!(
                "objective has {locals} local functions but {} worker profiles",
                profiles.len()
            )));
        }
    }
    let mut execution = MethodExecution {
        driver,
        batch_log: Vec::new(),
        record_batches: driver.method.is_harmonic(),
    };
    let result = run_protocol_with(problem, &mut execution, profiles, horizon, seed, options)?;
    let trace = MethodTrace {
        batch_log: driver
            .method
            .is_harmonic()
            .then_some(execution.batch_log),
    };
    Ok((result, trace))
}
