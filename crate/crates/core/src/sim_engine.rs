//! Event-driven virtual-time executor of the time-multiple-oracles
//! interaction model.
//!
//! Each worker is an oracle with state `(s_t, s_x, s_q)`: idle, or busy
//! computing a stochastic gradient at `s_x` since time `s_t`. A busy oracle
//! releases its gradient at the first query time `t` with
//! `V(t) − V(s_t) >= 1`. The engine keeps a priority queue of completion
//! events on the virtual clock, advances time only to algorithm-requested
//! times or event times, and never moves the clock backward.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::SNAP;
use crate::objectives::{Objective, ObjectiveError, ProblemSpec};
use crate::power_model::{PowerModelError, PowerProfile, WorkValue};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("requested time {requested} is before the clock {clock}")]
    TimeRegression { requested: f64, clock: f64 },
    #[error("worker {0} is already computing")]
    WorkerBusy(usize),
    #[error("no worker with index {0}")]
    UnknownWorker(usize),
    #[error("horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("iterate support escapes the delivered gradients at coordinate {coord}")]
    SupportViolation { coord: usize },
    #[error("driver misconfiguration: {0}")]
    Driver(String),
    #[error(transparent)]
    Power(#[from] PowerModelError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Oracle state `(s_t, s_x, s_q)`; idle states carry the zero sentinel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleState {
    pub start_time: f64,
    pub point: Vec<f64>,
    pub busy: bool,
}

impl OracleState {
    pub fn idle() -> Self {
        Self::default()
    }
}

/// One transition of the oracle state machine. The four cases: a cancel
/// resets the state; an idle oracle memorizes `(t, x)` and starts computing;
/// a busy oracle with less than one unit of fresh work stays put; a busy
/// oracle that has accumulated a full unit resets and releases a stochastic
/// gradient at the memorized point.
pub fn oracle_step<R: Rng + ?Sized>(
    state: &OracleState,
    t: f64,
    x: &[f64],
    cancel: bool,
    profile: &PowerProfile,
    problem: &ProblemSpec,
    worker: usize,
    rng: &mut R,
) -> Result<(OracleState, Vec<f64>), ProtocolError> {
    if cancel {
        return Ok((OracleState::idle(), vec![0.0; problem.dim()]));
    }
    if !state.busy {
        let next = OracleState {
            start_time: t,
            point: x.to_vec(),
            busy: true,
        };
        return Ok((next, vec![0.0; problem.dim()]));
    }
    let work = profile.work_between(state.start_time, t)?;
    if work + SNAP < 1.0 {
        return Ok((state.clone(), vec![0.0; problem.dim()]));
    }
    let grad = problem.noisy_grad(worker, &state.point, rng)?;
    Ok((OracleState::idle(), grad))
}

/// Earliest time at which one full gradient started at `start` is done.
pub fn completion_time(
    profile: &PowerProfile,
    start: f64,
) -> Result<WorkValue, PowerModelError> {
    profile.inverse_work(1.0, start)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CompletionEvent {
    time: f64,
    worker: usize,
}

impl Eq for CompletionEvent {}

impl Ord for CompletionEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Ties break by ascending worker index for determinism.
        self.time
            .total_cmp(&other.time)
            .then(self.worker.cmp(&other.worker))
    }
}

impl PartialOrd for CompletionEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// One row of the recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub k: u64,
    pub time: f64,
    pub grad_sq: f64,
    pub f_value: f64,
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub total_time: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub grads_delivered: Vec<u64>,
    pub final_point: Vec<f64>,
    /// Recorded iterates aligned with `trajectory`, when requested.
    pub iterates: Option<Vec<Vec<f64>>>,
    /// Delivered `(worker, gradient)` log, when requested.
    pub gradient_log: Option<Vec<(usize, Vec<f64>)>>,
}

impl RunResult {
    pub fn mean_grad_sq(&self) -> f64 {
        if self.trajectory.len() <= 1 {
            return self
                .trajectory
                .first()
                .map(|p| p.grad_sq)
                .unwrap_or(0.0);
        }
        // Average over the iterates produced by the method (skips the k = 0
        // starting point so K iterations average K values... including the
        // start keeps the classical 1/K sum over x^0..x^{K-1}).
        let pts = &self.trajectory[..self.trajectory.len() - 1];
        pts.iter().map(|p| p.grad_sq).sum::<f64>() / pts.len() as f64
    }
}

/// Run options beyond the required horizon.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub record_iterates: bool,
    pub record_gradients: bool,
}

/// The executor handed to algorithm drivers.
pub struct ProtocolEngine<'a> {
    problem: &'a ProblemSpec,
    profiles: &'a [PowerProfile],
    states: Vec<OracleState>,
    events: BinaryHeap<Reverse<CompletionEvent>>,
    clock: f64,
    horizon: f64,
    horizon_hit: bool,
    rngs: Vec<ChaCha8Rng>,
    delivered: Vec<u64>,
    support: Vec<bool>,
    check_support: bool,
    step_count: u64,
    trajectory: Vec<TrajectoryPoint>,
    iterates: Option<Vec<Vec<f64>>>,
    gradient_log: Option<Vec<(usize, Vec<f64>)>>,
    last_point: Vec<f64>,
}

impl<'a> ProtocolEngine<'a> {
    fn new(
        problem: &'a ProblemSpec,
        profiles: &'a [PowerProfile],
        horizon: f64,
        seed: u64,
        options: SimOptions,
    ) -> Result<Self, ProtocolError> {
        if !(horizon > 0.0) {
            return Err(ProtocolError::InvalidHorizon(horizon));
        }
        problem.validate()?;
        for p in profiles {
            p.validate()?;
        }
        // One master seed splits into per-worker streams, so gradient draws
        // are independent of event interleaving.
        let rngs = (0..profiles.len())
            .map(|w| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w as u64 + 1);
                rng
            })
            .collect();
        Ok(Self {
            problem,
            profiles,
            states: vec![OracleState::idle(); profiles.len()],
            events: BinaryHeap::new(),
            clock: 0.0,
            horizon,
            horizon_hit: false,
            rngs,
            delivered: vec![0; profiles.len()],
            support: vec![false; problem.dim()],
            check_support: matches!(problem.objective, Objective::WorstCaseChain { .. }),
            step_count: 0,
            trajectory: Vec::new(),
            iterates: options.record_iterates.then(Vec::new),
            gradient_log: options.record_gradients.then(Vec::new),
            last_point: problem.x0.clone(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn horizon_reached(&self) -> bool {
        self.horizon_hit
    }

    pub fn worker_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn delivered(&self) -> &[u64] {
        &self.delivered
    }

    /// Moves the clock forward; moving it backward is a protocol violation.
    pub fn advance_to(&mut self, t: f64) -> Result<(), ProtocolError> {
        if t < self.clock {
            return Err(ProtocolError::TimeRegression {
                requested: t,
                clock: self.clock,
            });
        }
        self.clock = t.min(self.horizon);
        if t >= self.horizon {
            self.horizon_hit = true;
        }
        Ok(())
    }

    /// Asks an idle worker to start computing a stochastic gradient at `x`,
    /// scheduling its completion event.
    pub fn assign(&mut self, worker: usize, x: &[f64]) -> Result<(), ProtocolError> {
        if worker >= self.states.len() {
            return Err(ProtocolError::UnknownWorker(worker));
        }
        if self.states[worker].busy {
            return Err(ProtocolError::WorkerBusy(worker));
        }
        let (next, _) = oracle_step(
            &self.states[worker],
            self.clock,
            x,
            false,
            &self.profiles[worker],
            self.problem,
            worker,
            &mut self.rngs[worker],
        )?;
        self.states[worker] = next;
        if let WorkValue::Finite(done) = completion_time(&self.profiles[worker], self.clock)? {
            self.events.push(Reverse(CompletionEvent {
                time: done,
                worker,
            }));
        }
        Ok(())
    }

    /// Advances the clock to the next completion event and delivers that
    /// gradient. Returns `None` once the next event lies beyond the horizon
    /// (or no event exists), with the clock clamped to the horizon.
    pub fn next_completion(&mut self) -> Result<Option<(usize, Vec<f64>)>, ProtocolError> {
        let Some(Reverse(event)) = self.events.peek().copied() else {
            self.clock = self.horizon;
            self.horizon_hit = true;
            return Ok(None);
        };
        if event.time > self.horizon {
            self.clock = self.horizon;
            self.horizon_hit = true;
            return Ok(None);
        }
        self.events.pop();
        debug_assert!(event.time >= self.clock, "event queue moved time backward");
        self.clock = event.time;
        let worker = event.worker;
        let state = std::mem::take(&mut self.states[worker]);
        let (next, grad) = oracle_step(
            &state,
            self.clock,
            &state.point,
            false,
            &self.profiles[worker],
            self.problem,
            worker,
            &mut self.rngs[worker],
        )?;
        debug_assert!(!next.busy, "completion event fired before a full unit of work");
        self.states[worker] = next;
        self.delivered[worker] += 1;
        if self.check_support {
            for (slot, g) in self.support.iter_mut().zip(&grad) {
                *slot |= *g != 0.0;
            }
        }
        if let Some(log) = &mut self.gradient_log {
            log.push((worker, grad.clone()));
        }
        Ok(Some((worker, grad)))
    }

    /// Stops every in-flight computation, discarding partial work.
    pub fn cancel_all(&mut self) {
        for state in &mut self.states {
            *state = OracleState::idle();
        }
        self.events.clear();
    }

    /// Records the algorithm's current iterate: virtual time, squared
    /// gradient norm, and objective value. For chain objectives the iterate's
    /// support must stay inside the union of delivered gradient supports.
    pub fn record_iterate(&mut self, x: &[f64]) -> Result<(), ProtocolError> {
        if self.check_support && self.step_count > 0 {
            if let Some(coord) = x
                .iter()
                .enumerate()
                .position(|(i, v)| *v != 0.0 && !self.support[i])
            {
                return Err(ProtocolError::SupportViolation { coord });
            }
        }
        let grad = self.problem.grad(x)?;
        let grad_sq = grad.iter().map(|g| g * g).sum();
        let f_value = self.problem.value(x)?;
        self.trajectory.push(TrajectoryPoint {
            k: self.step_count,
            time: self.clock,
            grad_sq,
            f_value,
        });
        if let Some(iterates) = &mut self.iterates {
            iterates.push(x.to_vec());
        }
        self.last_point = x.to_vec();
        self.step_count += 1;
        Ok(())
    }

    fn finish(self, seed: u64) -> RunResult {
        RunResult {
            seed,
            total_time: self.clock,
            trajectory: self.trajectory,
            grads_delivered: self.delivered,
            final_point: self.last_point,
            iterates: self.iterates,
            gradient_log: self.gradient_log,
        }
    }
}

/// An algorithm driving the protocol through the engine.
pub trait Driver {
    fn run(&mut self, engine: &mut ProtocolEngine<'_>) -> Result<(), ProtocolError>;
}

/// Runs a driver under the default options.
pub fn run_protocol(
    problem: &ProblemSpec,
    driver: &mut dyn Driver,
    profiles: &[PowerProfile],
    horizon: f64,
    seed: u64,
) -> Result<RunResult, ProtocolError> {
    run_protocol_with(problem, driver, profiles, horizon, seed, SimOptions::default())
}

/// Runs a driver to completion (or the horizon) and collects the results.
/// Bit-reproducible for a fixed `(problem, profiles, horizon, seed)`.
pub fn run_protocol_with(
    problem: &ProblemSpec,
    driver: &mut dyn Driver,
    profiles: &[PowerProfile],
    horizon: f64,
    seed: u64,
    options: SimOptions,
) -> Result<RunResult, ProtocolError> {
    let mut engine = ProtocolEngine::new(problem, profiles, horizon, seed, options)?;
    let x0 = problem.x0.clone();
    engine.record_iterate(&x0)?;
    driver.run(&mut engine)?;
    Ok(engine.finish(seed))
}
