//! Monte Carlo verification of the lower-bound machinery: geometric gating
//! of coordinate progress, concentration checks, the window-parameter
//! construction, and the per-block Markov window process.
//!
//! The heterogeneous adversarial functions exist only to force these
//! dynamics, so they are simulated at the level of progress (windows and
//! geometric draws) rather than materialized as live objectives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bound_calc::{next_time, BoundError, ProblemConstants, ThresholdRule};
use crate::numeric::{floor_snapped, leftmost_feasible, DEFAULT_HORIZON};
use crate::objectives::CHAIN_GRAD_INF;
use crate::power_model::{PowerModelError, PowerProfile, WorkValue};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("window postcondition violated at window {window}, worker {worker}")]
    Postcondition { window: usize, worker: usize },
    #[error(transparent)]
    Power(#[from] PowerModelError),
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// Geometric draw on `{1, 2, …}` with `P(η = k) = (1−p)^{k−1} p`, via the
/// inverse CDF `⌈ln U / ln(1−p)⌉`.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64, LabError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(LabError::InvalidProbability(p));
    }
    if p == 1.0 {
        return Ok(1);
    }
    // U on (0, 1]; ln U / ln(1−p) is then finite and positive.
    let u = 1.0 - rng.gen::<f64>();
    let draw = (u.ln() / (1.0 - p).ln()).ceil();
    Ok((draw as u64).max(1))
}

/// Gated progress times of the homogeneous adversary: `t_k` is the leftmost
/// time the fresh collective gradient count since `t_{k−1}` reaches a fresh
/// geometric draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryTrace {
    pub times: Vec<WorkValue>,
    pub etas: Vec<u64>,
    pub seed: u64,
}

/// Runs the gated progress recursion for `chain_len` coordinates.
pub fn homog_adversary_run(
    profiles: &[PowerProfile],
    p: f64,
    chain_len: usize,
    seed: u64,
) -> Result<AdversaryTrace, LabError> {
    if chain_len == 0 {
        return Err(LabError::InvalidArgument(
            "adversary needs a chain of length >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(chain_len);
    let mut etas = Vec::with_capacity(chain_len);
    let mut prev = WorkValue::ZERO;
    for _ in 0..chain_len {
        let eta = sample_geometric(p, &mut rng)?;
        etas.push(eta);
        let next = match prev {
            WorkValue::Finite(base) => {
                next_time(profiles, base, &ThresholdRule::SumCount { batch: eta })?
            }
            WorkValue::Inf => WorkValue::Inf,
        };
        times.push(next);
        prev = next;
    }
    Ok(AdversaryTrace { times, etas, seed })
}

/// Outcome of a Monte Carlo tail-bound estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub empirical: f64,
    pub bound: f64,
    pub trials: u64,
}

impl TailBoundReport {
    /// Binomial standard error of the empirical estimate.
    pub fn standard_error(&self) -> f64 {
        (self.empirical * (1.0 - self.empirical) / self.trials as f64).sqrt()
    }

    /// Whether the estimate is consistent with the bound at 3 standard
    /// errors of slack.
    pub fn within_slack(&self) -> bool {
        self.empirical <= self.bound + 3.0 * self.standard_error().max(1e-12)
    }
}

fn require_trials(trials: u64) -> Result<(), LabError> {
    if trials < 1000 {
        return Err(LabError::InvalidArgument(format!(
            "tail-bound checks need at least 1000 trials, got {trials}"
        )));
    }
    Ok(())
}

/// Estimates `P(Σ 1[η_i > 1/(4 p_i)] <= T/2 + ln δ)` against its bound `δ`.
/// The per-index probability may depend on the history of draws.
pub fn chernoff_sum_check<R, F>(
    chain_len: usize,
    p_fn: F,
    delta: f64,
    trials: u64,
    rng: &mut R,
) -> Result<TailBoundReport, LabError>
where
    R: Rng + ?Sized,
    F: Fn(usize, &[u64]) -> f64,
{
    require_trials(trials)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::InvalidArgument(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let threshold = chain_len as f64 / 2.0 + delta.ln();
    let mut hits = 0u64;
    let mut history = Vec::with_capacity(chain_len);
    for _ in 0..trials {
        history.clear();
        let mut gated = 0u64;
        for i in 0..chain_len {
            let p = p_fn(i, &history);
            let eta = sample_geometric(p, rng)?;
            if eta as f64 > 1.0 / (4.0 * p) {
                gated += 1;
            }
            history.push(eta);
        }
        if gated as f64 <= threshold {
            hits += 1;
        }
    }
    Ok(TailBoundReport {
        empirical: hits as f64 / trials as f64,
        bound: delta,
        trials,
    })
}

/// Estimates `P(∪_k { Σ_{j<=K} η_{k,j} <= K/(8 p_k) })` against its bound
/// `T̄ e^{−K/2}`.
pub fn many_geom_check<R: Rng + ?Sized>(
    chunk: u64,
    probs: &[f64],
    trials: u64,
    rng: &mut R,
) -> Result<TailBoundReport, LabError> {
    require_trials(trials)?;
    if probs.is_empty() || chunk == 0 {
        return Err(LabError::InvalidArgument(
            "many-geometric check needs a chunk >= 1 and at least one probability".into(),
        ));
    }
    let mut hits = 0u64;
    for _ in 0..trials {
        let mut any = false;
        for &p in probs {
            let mut sum = 0u64;
            for _ in 0..chunk {
                sum += sample_geometric(p, rng)?;
            }
            if (sum as f64) <= chunk as f64 / (8.0 * p) {
                any = true;
                break;
            }
        }
        if any {
            hits += 1;
        }
    }
    Ok(TailBoundReport {
        empirical: hits as f64 / trials as f64,
        bound: probs.len() as f64 * (-(chunk as f64) / 2.0).exp(),
        trials,
    })
}

/// Tail-bound check selection for config-driven runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailBoundKind {
    ChernoffSum {
        chain_len: usize,
        p: f64,
        delta: f64,
    },
    ManyGeom {
        chunk: u64,
        probs: Vec<f64>,
    },
}

/// Dispatches a named tail-bound check.
pub fn tail_bound_check(
    kind: &TailBoundKind,
    trials: u64,
    seed: u64,
) -> Result<TailBoundReport, LabError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        TailBoundKind::ChernoffSum {
            chain_len,
            p,
            delta,
        } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(LabError::InvalidProbability(*p));
            }
            chernoff_sum_check(*chain_len, |_, _| *p, *delta, trials, &mut rng)
        }
        TailBoundKind::ManyGeom { chunk, probs } => many_geom_check(*chunk, probs, trials, &mut rng),
    }
}

/// Window times, segment lengths, and suppression probabilities of the
/// heterogeneous construction. Row `w−1` of `segments`/`probs` describes
/// window `w ∈ [1, windows+1]`; the final row is the open-ended tail window.
/// A zero segment length means the worker stores no blocks in that window
/// and carries probability 0 (its gating threshold is infinite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub times: Vec<WorkValue>,
    pub segments: Vec<Vec<u64>>,
    pub probs: Vec<Vec<f64>>,
    pub block_count: u64,
    pub chunk: u64,
}

impl WindowParams {
    pub fn windows(&self) -> usize {
        self.times.len() - 1
    }

    /// Worker owning block `j` (0-based) in window `w` (1-based).
    pub fn segment_worker(&self, window: usize, block: u64) -> usize {
        let row = &self.segments[window - 1];
        let mut acc = 0u64;
        for (i, a) in row.iter().enumerate() {
            acc += a;
            if block < acc {
                return i;
            }
        }
        row.len() - 1
    }
}

/// Builds the window parameters: per window the time is the larger of the
/// slowest worker's quarter-chunk completion and the root of the variance
/// budget equation; segment lengths assign blocks to a single worker
/// (first branch) or inversely to fresh work (second branch), rescaled to a
/// common block count.
pub fn window_params(
    profiles: &[PowerProfile],
    chunk: u64,
    consts: &ProblemConstants,
    windows: usize,
) -> Result<WindowParams, LabError> {
    if profiles.is_empty() {
        return Err(LabError::InvalidArgument("no worker profiles".into()));
    }
    if chunk == 0 || windows == 0 {
        return Err(LabError::InvalidArgument(
            "window construction needs chunk >= 1 and windows >= 1".into(),
        ));
    }
    let n = profiles.len();
    let k = chunk as f64;
    let eps = consts.epsilon;
    let sigma_sq = consts.sigma_sq;
    let gamma_sq = CHAIN_GRAD_INF * CHAIN_GRAD_INF;

    let mut times = vec![WorkValue::ZERO];
    let mut raw_segments: Vec<Vec<u64>> = Vec::with_capacity(windows + 1);

    for _ in 0..windows {
        let prev = match *times.last().unwrap() {
            WorkValue::Finite(t) => t,
            WorkValue::Inf => {
                times.push(WorkValue::Inf);
                let mut row = vec![0u64; n];
                row[0] = 1;
                raw_segments.push(row);
                continue;
            }
        };
        // Slowest quarter-chunk completion.
        let mut t1 = WorkValue::ZERO;
        let mut slowest = 0usize;
        for (i, p) in profiles.iter().enumerate() {
            let done = p.inverse_work(k / 16.0, prev)?;
            if done > t1 {
                t1 = done;
                slowest = i;
            }
        }
        // Root of the variance budget equation (empty with zero variance).
        let t2 = if sigma_sq == 0.0 {
            WorkValue::finite(prev)
        } else {
            let budget = |t: f64| -> f64 {
                profiles
                    .iter()
                    .map(|p| {
                        let dv = p.work_between(prev, t).unwrap_or(0.0);
                        if dv <= 0.0 {
                            f64::INFINITY
                        } else {
                            k * sigma_sq / ((n * n) as f64 * 4.0 * eps * gamma_sq * dv)
                        }
                    })
                    .sum()
            };
            match leftmost_feasible(prev, DEFAULT_HORIZON, |t| budget(t) <= 64.0) {
                Some(t) => WorkValue::finite(t),
                None => WorkValue::Inf,
            }
        };

        if t1 > t2 {
            // Single-worker assignment to the slowest completion.
            times.push(t1);
            let mut row = vec![0u64; n];
            row[slowest] = 1;
            raw_segments.push(row);
        } else {
            times.push(t2);
            match t2 {
                WorkValue::Finite(t) => {
                    let fresh: Vec<f64> = profiles
                        .iter()
                        .map(|p| p.work_between(prev, t))
                        .collect::<Result<_, _>>()?;
                    let max_fresh = fresh.iter().copied().fold(0.0_f64, f64::max);
                    let row = fresh
                        .iter()
                        .map(|dv| floor_snapped(max_fresh / dv) as u64)
                        .collect();
                    raw_segments.push(row);
                }
                WorkValue::Inf => {
                    let mut row = vec![0u64; n];
                    row[0] = 1;
                    raw_segments.push(row);
                }
            }
        }
    }
    // Tail window past the last time.
    let mut tail = vec![0u64; n];
    tail[0] = 1;
    raw_segments.push(tail);

    // Rescale every row to the common block count S.
    let block_count = raw_segments
        .iter()
        .map(|row| row.iter().sum::<u64>())
        .max()
        .expect("at least one row");
    let mut segments = Vec::with_capacity(raw_segments.len());
    for row in &raw_segments {
        let total: u64 = row.iter().sum();
        if total == block_count {
            segments.push(row.clone());
            continue;
        }
        // Smallest k >= 2 with k * total >= S.
        let factor = block_count.div_ceil(total).max(2);
        let mut scaled: Vec<u64> = row.iter().map(|a| (factor - 1) * a).collect();
        let mut remaining = block_count - scaled.iter().sum::<u64>();
        for (slot, cap) in scaled.iter_mut().zip(row) {
            let add = remaining.min(*cap);
            *slot += add;
            remaining -= add;
            if remaining == 0 {
                break;
            }
        }
        debug_assert_eq!(scaled.iter().sum::<u64>(), block_count);
        segments.push(scaled);
    }

    let probs = segments
        .iter()
        .map(|row| {
            row.iter()
                .map(|a| {
                    if *a == 0 {
                        0.0
                    } else if sigma_sq == 0.0 {
                        1.0
                    } else {
                        (4.0 * eps * gamma_sq * *a as f64 * (n * n) as f64
                            / (sigma_sq * block_count as f64))
                            .min(1.0)
                    }
                })
                .collect()
        })
        .collect();

    let params = WindowParams {
        times,
        segments,
        probs,
        block_count,
        chunk,
    };
    verify_window_postcondition(&params, profiles)?;
    Ok(params)
}

/// Checks `V_i^{-1}(K/(8 p_{w,i}) + V_i(t_{w−1})) >= t_w` for every window
/// and worker; zero-probability (empty-segment) entries hold trivially.
pub fn verify_window_postcondition(
    params: &WindowParams,
    profiles: &[PowerProfile],
) -> Result<(), LabError> {
    let k = params.chunk as f64;
    for w in 1..=params.windows() {
        let target = params.times[w];
        let WorkValue::Finite(prev) = params.times[w - 1] else {
            continue;
        };
        for (i, profile) in profiles.iter().enumerate() {
            let p = params.probs[w - 1][i];
            if p == 0.0 {
                continue;
            }
            let gate = profile.inverse_work(k / (8.0 * p), prev)?;
            let holds = match (gate, target) {
                (WorkValue::Inf, _) => true,
                (WorkValue::Finite(_), WorkValue::Inf) => false,
                (WorkValue::Finite(g), WorkValue::Finite(t)) => g + 1e-9 * t.max(1.0) >= t,
            };
            if !holds {
                return Err(LabError::Postcondition { window: w, worker: i });
            }
        }
    }
    Ok(())
}

/// Outcome of one Markov window run in a block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovOutcome {
    /// Window index reached after the last coordinate (1-based; can reach
    /// `windows + 1`).
    pub reached_window: usize,
    /// The implied necessary time `t_{reached − 1}`.
    pub necessary_time: WorkValue,
}

/// Runs the per-block Markov window process for `chain_len` coordinates:
/// each coordinate draws a geometric gate from its window's owner and the
/// window advances when the gated completion does not precede the window
/// boundary.
pub fn markov_window_run<R: Rng + ?Sized>(
    params: &WindowParams,
    profiles: &[PowerProfile],
    block: u64,
    chain_len: usize,
    rng: &mut R,
) -> Result<MarkovOutcome, LabError> {
    if block >= params.block_count {
        return Err(LabError::InvalidArgument(format!(
            "block {block} out of range (S = {})",
            params.block_count
        )));
    }
    let windows = params.windows();
    let mut w = 1usize;
    for _ in 0..chain_len {
        let worker = params.segment_worker(w, block);
        let p = params.probs[w - 1][worker];
        if p == 0.0 {
            // Empty segment cannot be hit by construction.
            return Err(LabError::InvalidArgument(format!(
                "block {block} landed on an empty segment in window {w}"
            )));
        }
        let eta = sample_geometric(p, rng)?;
        if w > windows {
            continue; // Open tail window: the boundary is infinite.
        }
        let prev = match params.times[w - 1] {
            WorkValue::Finite(t) => t,
            WorkValue::Inf => continue,
        };
        let gate = profiles[worker].inverse_work(eta as f64, prev)?;
        let advance = match (gate, params.times[w]) {
            (WorkValue::Inf, _) => true,
            (WorkValue::Finite(g), WorkValue::Finite(t)) => g + 1e-9 * t.max(1.0) >= t,
            (WorkValue::Finite(_), WorkValue::Inf) => false,
        };
        if advance {
            w += 1;
        }
    }
    Ok(MarkovOutcome {
        reached_window: w,
        necessary_time: params.times[w - 1],
    })
}
