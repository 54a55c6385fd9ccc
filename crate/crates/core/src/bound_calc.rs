//! Implicit time-complexity sequences and closed-form complexities.
//!
//! The central object is the recursion `t_k = min { t >= prev : rule holds
//! for the fresh collective work since prev }`, evaluated by bisection on a
//! nondecreasing right-continuous threshold function. Upper sequences use the
//! sum-count rule (total fresh gradients) or the harmonic-count rule
//! (harmonic mean of per-worker fresh gradients); lower sequences use the
//! same rules with universal constants folded in.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{
    ceil_snapped, floor_snapped, floor_snapped_rel, leftmost_feasible, DEFAULT_HORIZON,
};
use crate::power_model::{PowerModelError, PowerProfile, TrendSpec, WorkValue};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("profile list must be nonempty")]
    EmptyProfiles,
    #[error("target accuracy must satisfy epsilon < c' * L * delta (epsilon = {epsilon}, limit = {limit})")]
    EpsilonTooLarge { epsilon: f64, limit: f64 },
    #[error("missing constant for this regime: {0}")]
    MissingConstant(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Power(#[from] PowerModelError),
}

/// Problem constants shared across bound computations and method parameter
/// selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConstants {
    /// Smoothness constant L.
    pub l: f64,
    /// Initial suboptimality f(x0) − f*.
    pub delta: f64,
    /// Variance bound of the stochastic gradients.
    pub sigma_sq: f64,
    /// Target accuracy.
    pub epsilon: f64,
    /// Worker count.
    pub n: usize,
    /// Lipschitz constant of f itself (convex nonsmooth regime).
    #[serde(default)]
    pub m: Option<f64>,
    /// Distance from the start to a minimizer (convex regimes).
    #[serde(default)]
    pub r: Option<f64>,
}

impl ProblemConstants {
    pub fn new(l: f64, delta: f64, sigma_sq: f64, epsilon: f64, n: usize) -> Self {
        Self {
            l,
            delta,
            sigma_sq,
            epsilon,
            n,
            m: None,
            r: None,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        let check = |name: &str, v: f64, strict: bool| {
            if !v.is_finite() || (strict && v <= 0.0) || (!strict && v < 0.0) {
                Err(BoundError::InvalidArgument(format!(
                    "constant {name} must be {} and finite, got {v}",
                    if strict { "positive" } else { "nonnegative" }
                )))
            } else {
                Ok(())
            }
        };
        check("l", self.l, true)?;
        check("delta", self.delta, true)?;
        check("sigma_sq", self.sigma_sq, false)?;
        check("epsilon", self.epsilon, true)?;
        if self.n == 0 {
            return Err(BoundError::InvalidArgument(
                "worker count n must be at least 1".into(),
            ));
        }
        if let Some(m) = self.m {
            check("m", m, true)?;
        }
        if let Some(r) = self.r {
            check("r", r, true)?;
        }
        Ok(())
    }

    pub fn m(&self) -> Result<f64, BoundError> {
        self.m.ok_or(BoundError::MissingConstant("m"))
    }

    pub fn r(&self) -> Result<f64, BoundError> {
        self.r.ok_or(BoundError::MissingConstant("r"))
    }
}

/// Universal constants of the lower-bound statements. The defaults are
/// order-of-magnitude proof artifacts, not tuned values: `c1` comes from the
/// chain length `T = ⌊ΔL/(2εl₁Δ⁰)⌋` halved, `c2` from the gating threshold
/// `1/(4p)` with `p = min{2εγ∞²/σ², 1}`, and `c3` from the window chunking.
/// All are overridable in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UniversalConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c_prime: f64,
}

impl Default for UniversalConstants {
    fn default() -> Self {
        Self {
            c1: 1.0 / (4.0 * 152.0 * 12.0),
            c2: 1.0 / (8.0 * 23.0 * 23.0),
            c3: 1.0 / 16.0,
            c_prime: 1.0,
        }
    }
}

/// Per-iteration threshold on the fresh collective work since the previous
/// sequence entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `Σ_i ⌊V_i(t) − V_i(prev)⌋ >= batch`.
    SumCount { batch: u64 },
    /// `(1/n Σ_i ⌊V_i(t) − V_i(prev)⌋^{-1})^{-1} >= target`; a worker with a
    /// zero count contributes an infinite reciprocal.
    HarmonicCount { target: f64 },
    /// Harmonic rule over scaled counts `⌊scale · (V_i(t) − V_i(prev))⌋`.
    HarmonicScaled { target: f64, scale: f64 },
}

impl ThresholdRule {
    pub fn validate(&self) -> Result<(), BoundError> {
        match self {
            ThresholdRule::SumCount { batch } => {
                if *batch < 1 {
                    return Err(BoundError::InvalidArgument(
                        "sum-count batch must be at least 1".into(),
                    ));
                }
            }
            ThresholdRule::HarmonicCount { target } => {
                if !(*target > 0.0) {
                    return Err(BoundError::InvalidArgument(
                        "harmonic target must be positive".into(),
                    ));
                }
            }
            ThresholdRule::HarmonicScaled { target, scale } => {
                if !(*target > 0.0) || !(*scale > 0.0) {
                    return Err(BoundError::InvalidArgument(
                        "harmonic target and scale must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the rule on the fresh work accumulated over `[prev, t]`.
    pub fn satisfied_at(
        &self,
        profiles: &[PowerProfile],
        prev: f64,
        t: f64,
    ) -> Result<bool, PowerModelError> {
        let scale = match self {
            ThresholdRule::HarmonicScaled { scale, .. } => *scale,
            _ => 1.0,
        };
        let mut sum = 0.0;
        let mut recip = 0.0;
        let mut any_zero = false;
        for p in profiles {
            let count = floor_snapped(scale * p.work_between(prev, t)?);
            sum += count;
            if count <= 0.0 {
                any_zero = true;
            } else {
                recip += 1.0 / count;
            }
        }
        Ok(match self {
            ThresholdRule::SumCount { batch } => sum >= *batch as f64,
            ThresholdRule::HarmonicCount { target }
            | ThresholdRule::HarmonicScaled { target, .. } => {
                if any_zero {
                    false
                } else {
                    let n = profiles.len() as f64;
                    // Equivalent to harmonic mean >= target; compared on the
                    // reciprocal side with a tiny relative slack so exact
                    // crossings are not missed to rounding.
                    recip <= (n / target) * (1.0 + 1e-12)
                }
            }
        })
    }
}

/// Leftmost `t >= prev` at which the rule holds, or [`WorkValue::Inf`] when
/// the threshold is unreachable.
pub fn next_time(
    profiles: &[PowerProfile],
    prev: f64,
    rule: &ThresholdRule,
) -> Result<WorkValue, BoundError> {
    if profiles.is_empty() {
        return Err(BoundError::EmptyProfiles);
    }
    if !(prev >= 0.0) {
        return Err(PowerModelError::NegativeTime(prev).into());
    }
    rule.validate()?;
    // Evaluation errors inside the predicate cannot occur once the inputs are
    // validated (t >= prev >= 0 throughout the search).
    let pred = |t: f64| rule.satisfied_at(profiles, prev, t).unwrap_or(false);
    Ok(match leftmost_feasible(prev, DEFAULT_HORIZON, pred) {
        Some(t) => WorkValue::finite(t),
        None => WorkValue::Inf,
    })
}

/// Which implicit sequence to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    RennalaUpper,
    MaleniaUpper,
    HomogLower,
    HeterLower,
    HeterLowerLog,
    ConvexNonsmoothRennala,
    ConvexSmoothRennala,
    ConvexNonsmoothMalenia,
    ConvexSmoothMalenia,
}

impl BoundKind {
    pub fn is_lower(self) -> bool {
        matches!(
            self,
            BoundKind::HomogLower | BoundKind::HeterLower | BoundKind::HeterLowerLog
        )
    }
}

/// The times produced by iterating a threshold rule, `times[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSequence {
    pub kind: BoundKind,
    pub rule: ThresholdRule,
    pub times: Vec<WorkValue>,
    pub iterations: u64,
}

impl BoundSequence {
    pub fn final_time(&self) -> WorkValue {
        *self.times.last().expect("sequence holds at least t_0")
    }
}

/// Batch threshold `max{⌈σ²/ε⌉, 1}` shared by the sum-count sequences.
pub fn sum_count_threshold(consts: &ProblemConstants) -> u64 {
    ceil_snapped(consts.sigma_sq / consts.epsilon).max(1.0) as u64
}

/// Harmonic target `max{2σ²/(nε), 1}` of the harmonic-count upper sequence.
pub fn harmonic_target(consts: &ProblemConstants) -> f64 {
    (2.0 * consts.sigma_sq / (consts.n as f64 * consts.epsilon)).max(1.0)
}

fn require_small_epsilon(consts: &ProblemConstants, uni: &UniversalConstants) -> Result<(), BoundError> {
    let limit = uni.c_prime * consts.l * consts.delta;
    if consts.epsilon >= limit {
        return Err(BoundError::EpsilonTooLarge {
            epsilon: consts.epsilon,
            limit,
        });
    }
    Ok(())
}

/// Iteration count and per-iteration rule for a sequence kind.
pub fn sequence_plan(
    kind: BoundKind,
    consts: &ProblemConstants,
    uni: &UniversalConstants,
) -> Result<(u64, ThresholdRule), BoundError> {
    consts.validate()?;
    let ratio = consts.l * consts.delta / consts.epsilon;
    let n = consts.n as f64;
    let plan = match kind {
        BoundKind::RennalaUpper => (
            ceil_snapped(24.0 * ratio) as u64,
            ThresholdRule::SumCount {
                batch: sum_count_threshold(consts),
            },
        ),
        BoundKind::MaleniaUpper => (
            ceil_snapped(24.0 * ratio) as u64,
            ThresholdRule::HarmonicCount {
                target: harmonic_target(consts),
            },
        ),
        BoundKind::HomogLower => {
            require_small_epsilon(consts, uni)?;
            (
                floor_snapped_rel(uni.c1 * ratio) as u64,
                ThresholdRule::SumCount {
                    batch: (ceil_snapped(uni.c2 * sum_count_threshold(consts) as f64) as u64)
                        .max(1),
                },
            )
        }
        BoundKind::HeterLower => {
            require_small_epsilon(consts, uni)?;
            (
                floor_snapped_rel(uni.c1 * ratio) as u64,
                ThresholdRule::HarmonicScaled {
                    target: (uni.c2 * consts.sigma_sq / (n * consts.epsilon)).max(1.0),
                    scale: uni.c3,
                },
            )
        }
        BoundKind::HeterLowerLog => {
            require_small_epsilon(consts, uni)?;
            if ratio <= 1.0 {
                return Err(BoundError::InvalidArgument(format!(
                    "log-factor sequence needs L*delta/epsilon > 1, got {ratio}"
                )));
            }
            let log = ratio.ln();
            (
                floor_snapped_rel(uni.c1 * ratio / log) as u64,
                ThresholdRule::HarmonicScaled {
                    target: (uni.c2 * consts.sigma_sq / (n * consts.epsilon)).max(1.0),
                    scale: uni.c3 / log,
                },
            )
        }
        BoundKind::ConvexNonsmoothRennala => (
            iterations_needed(Regime::ConvexNonsmooth, consts)?,
            ThresholdRule::SumCount {
                batch: sum_count_threshold(consts),
            },
        ),
        BoundKind::ConvexSmoothRennala => (
            iterations_needed(Regime::ConvexSmooth, consts)?,
            ThresholdRule::SumCount {
                batch: sum_count_threshold(consts),
            },
        ),
        BoundKind::ConvexNonsmoothMalenia => (
            iterations_needed(Regime::ConvexNonsmooth, consts)?,
            ThresholdRule::HarmonicCount {
                target: harmonic_target(consts),
            },
        ),
        BoundKind::ConvexSmoothMalenia => (
            iterations_needed(Regime::ConvexSmooth, consts)?,
            ThresholdRule::HarmonicCount {
                target: harmonic_target(consts),
            },
        ),
    };
    Ok(plan)
}

/// Iterates [`next_time`] for the kind's iteration count and rule.
pub fn bound_sequence(
    profiles: &[PowerProfile],
    consts: &ProblemConstants,
    kind: BoundKind,
    uni: &UniversalConstants,
) -> Result<BoundSequence, BoundError> {
    if profiles.is_empty() {
        return Err(BoundError::EmptyProfiles);
    }
    let (iterations, rule) = sequence_plan(kind, consts, uni)?;
    let mut times = Vec::with_capacity(iterations as usize + 1);
    times.push(WorkValue::ZERO);
    let mut prev = WorkValue::ZERO;
    for _ in 0..iterations {
        let next = match prev {
            WorkValue::Finite(p) => next_time(profiles, p, &rule)?,
            WorkValue::Inf => WorkValue::Inf,
        };
        times.push(next);
        prev = next;
    }
    Ok(BoundSequence {
        kind,
        rule,
        times,
        iterations,
    })
}

/// Convergence regime for iteration-count formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nonconvex,
    ConvexNonsmooth,
    ConvexSmooth,
}

/// Iterations guaranteeing the target accuracy in each regime:
/// `⌈24LΔ/ε⌉`, `⌈2M²R²/ε²⌉`, and `⌈8√L·R/√ε⌉` respectively.
pub fn iterations_needed(regime: Regime, consts: &ProblemConstants) -> Result<u64, BoundError> {
    consts.validate()?;
    let k = match regime {
        Regime::Nonconvex => {
            ceil_snapped(24.0 * consts.l * consts.delta / consts.epsilon)
        }
        Regime::ConvexNonsmooth => {
            let m = consts.m()?;
            let r = consts.r()?;
            ceil_snapped(2.0 * m * m * r * r / (consts.epsilon * consts.epsilon))
        }
        Regime::ConvexSmooth => {
            let r = consts.r()?;
            ceil_snapped(8.0 * consts.l.sqrt() * r / consts.epsilon.sqrt())
        }
    };
    Ok((k as u64).max(1))
}

/// Result of minimizing `g(j) = (Σ_{i<=j} v_i)^{-1} (s + j)` over prefixes of
/// a descending sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixMin {
    pub value: f64,
    /// Smallest 1-based minimizing index.
    pub j_min: usize,
    /// Largest 1-based minimizing index.
    pub j_max: usize,
}

/// Prefix-minimization helper over a descending positive sequence.
pub fn prefix_min(powers_desc: &[f64], s: f64) -> Result<PrefixMin, BoundError> {
    if powers_desc.is_empty() {
        return Err(BoundError::EmptyProfiles);
    }
    if powers_desc.windows(2).any(|w| w[1] > w[0]) {
        return Err(BoundError::InvalidArgument(
            "prefix minimization needs a descending sequence".into(),
        ));
    }
    if powers_desc.iter().any(|v| !(*v > 0.0)) {
        return Err(BoundError::InvalidArgument(
            "prefix minimization needs positive entries".into(),
        ));
    }
    let mut acc = 0.0;
    let mut best = f64::INFINITY;
    let mut j_min = 1;
    let mut j_max = 1;
    for (idx, v) in powers_desc.iter().enumerate() {
        acc += v;
        let g = (s + (idx + 1) as f64) / acc;
        if g < best {
            best = g;
            j_min = idx + 1;
            j_max = idx + 1;
        } else if g == best {
            j_max = idx + 1;
        }
    }
    Ok(PrefixMin {
        value: best,
        j_min,
        j_max,
    })
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("powers must not be NaN"));
    v
}

/// Per-iteration time scale of the fixed homogeneous model:
/// `min_j (Σ_{i<=j} v_{π_i})^{-1} (σ²/ε + j)` with powers sorted descending.
pub fn fixed_homog_delta(powers: &[f64], sigma_over_eps: f64) -> Result<f64, BoundError> {
    let desc = sorted_desc(powers);
    Ok(prefix_min(&desc, sigma_over_eps)?.value)
}

/// Closed-form fixed-model homogeneous complexity: the per-iteration scale
/// times `LΔ/ε`, i.e. `min_m (1/m Σ v)^{-1} (LΔ/ε + LΔσ²/(mε²))`. The
/// order constant is fixed to 1.
pub fn fixed_homog_time(powers: &[f64], consts: &ProblemConstants) -> Result<f64, BoundError> {
    consts.validate()?;
    let ratio = consts.l * consts.delta / consts.epsilon;
    Ok(ratio * fixed_homog_delta(powers, consts.sigma_sq / consts.epsilon)?)
}

/// Closed-form complexity under a shared trend `v_i(t) = v_i g(t)`: maps the
/// fixed-model value through the trend's inverse integral.
pub fn trend_homog_time(
    powers: &[f64],
    trend: &TrendSpec,
    consts: &ProblemConstants,
) -> Result<WorkValue, BoundError> {
    let fixed = fixed_homog_time(powers, consts)?;
    let unit = PowerProfile::ScaledTrend {
        v: 1.0,
        trend: trend.clone(),
    };
    Ok(unit.inverse_work(fixed, 0.0)?)
}

/// Closed-form complexity under periodic outages with periods `k_i`: the
/// fixed model with effective powers `v / k_i`.
pub fn outage_homog_time(
    v: f64,
    periods: &[f64],
    consts: &ProblemConstants,
) -> Result<f64, BoundError> {
    if !(v > 0.0) {
        return Err(BoundError::InvalidArgument(format!(
            "outage model needs a positive rate, got {v}"
        )));
    }
    if periods.iter().any(|k| !(*k > 0.0)) {
        return Err(BoundError::InvalidArgument(
            "outage periods must be positive".into(),
        ));
    }
    let effective: Vec<f64> = periods.iter().map(|k| v / k).collect();
    fixed_homog_time(&effective, consts)
}

/// Per-iteration time scale of the fixed heterogeneous model:
/// `max_i 1/v_i + (1/n Σ 1/v_i) σ²/(nε)`.
pub fn fixed_heter_delta(powers: &[f64], consts: &ProblemConstants) -> Result<f64, BoundError> {
    if powers.is_empty() {
        return Err(BoundError::EmptyProfiles);
    }
    if powers.iter().any(|v| !(*v > 0.0)) {
        return Err(BoundError::InvalidArgument(
            "the harmonic term needs strictly positive powers".into(),
        ));
    }
    let n = powers.len() as f64;
    let max_inv = powers.iter().map(|v| 1.0 / v).fold(0.0_f64, f64::max);
    let mean_inv = powers.iter().map(|v| 1.0 / v).sum::<f64>() / n;
    Ok(max_inv + mean_inv * consts.sigma_sq / (n * consts.epsilon))
}

/// Closed-form fixed-model heterogeneous complexity with the order constant
/// fixed to 1.
pub fn fixed_heter_time(powers: &[f64], consts: &ProblemConstants) -> Result<f64, BoundError> {
    consts.validate()?;
    let ratio = consts.l * consts.delta / consts.epsilon;
    Ok(ratio * fixed_heter_delta(powers, consts)?)
}

/// Baseline methods under fixed per-gradient times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Waits for the slowest worker every iteration.
    Minibatch,
    /// Harmonic dependence on the processing times.
    Async,
    /// The min-over-prefix form under fixed times.
    RennalaFixed,
}

/// Baseline time complexity with the order constant fixed to 1; `taus` are
/// seconds per gradient.
pub fn baseline_time(
    kind: BaselineKind,
    taus: &[f64],
    consts: &ProblemConstants,
) -> Result<f64, BoundError> {
    if taus.is_empty() {
        return Err(BoundError::EmptyProfiles);
    }
    if taus.iter().any(|t| !(*t > 0.0)) {
        return Err(BoundError::InvalidArgument(
            "per-gradient times must be positive".into(),
        ));
    }
    consts.validate()?;
    let n = taus.len() as f64;
    let ratio = consts.l * consts.delta / consts.epsilon;
    let per_n = ratio * (1.0 + consts.sigma_sq / (n * consts.epsilon));
    Ok(match kind {
        BaselineKind::Minibatch => taus.iter().copied().fold(0.0_f64, f64::max) * per_n,
        BaselineKind::Async => {
            let mean_rate = taus.iter().map(|t| 1.0 / t).sum::<f64>() / n;
            per_n / mean_rate
        }
        BaselineKind::RennalaFixed => {
            let powers: Vec<f64> = taus.iter().map(|t| 1.0 / t).collect();
            fixed_homog_time(&powers, consts)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constants(l: f64, delta: f64, sigma_sq: f64, epsilon: f64, n: usize) -> ProblemConstants {
        ProblemConstants::new(l, delta, sigma_sq, epsilon, n)
    }

    fn constant_profiles(vs: &[f64]) -> Vec<PowerProfile> {
        vs.iter().map(|v| PowerProfile::Constant { v: *v }).collect()
    }

    // Step search oracle for the leftmost rule crossing.
    fn grid_next_time(profiles: &[PowerProfile], prev: f64, rule: &ThresholdRule) -> Option<f64> {
        let step = 1e-4;
        let mut t = prev;
        while t < prev + 1e4 {
            if rule.satisfied_at(profiles, prev, t).unwrap() {
                return Some(t);
            }
            t += step;
        }
        None
    }

    #[test]
    fn next_time_single_worker_sum() {
        let profiles = constant_profiles(&[1.0]);
        let rule = ThresholdRule::SumCount { batch: 3 };
        let t = next_time(&profiles, 0.0, &rule).unwrap().expect_finite();
        assert!((t - 3.0).abs() < 1e-9, "got {t}");
    }

    #[test]
    fn next_time_two_workers_sum_matches_grid() {
        let profiles = constant_profiles(&[2.0, 1.0]);
        let rule = ThresholdRule::SumCount { batch: 3 };
        let t = next_time(&profiles, 0.0, &rule).unwrap().expect_finite();
        assert!((t - 1.0).abs() < 1e-9, "got {t}");
        let grid = grid_next_time(&profiles, 0.0, &rule).unwrap();
        assert!((t - grid).abs() < 1e-6);
    }

    #[test]
    fn next_time_harmonic_matches_grid() {
        let profiles = constant_profiles(&[2.0, 1.0]);
        let rule = ThresholdRule::HarmonicCount { target: 2.0 };
        let t = next_time(&profiles, 0.0, &rule).unwrap().expect_finite();
        assert!((t - 2.0).abs() < 1e-9, "got {t}");
        let grid = grid_next_time(&profiles, 0.0, &rule).unwrap();
        assert!((t - grid).abs() < 1e-6);
    }

    #[test]
    fn next_time_harmonic_stalls_on_zero_count_worker() {
        // The second worker never produces anything, so its reciprocal stays
        // infinite and the harmonic rule never fires.
        let profiles = constant_profiles(&[2.0, 0.0]);
        let rule = ThresholdRule::HarmonicCount { target: 1.0 };
        assert_eq!(next_time(&profiles, 0.0, &rule).unwrap(), WorkValue::Inf);
    }

    #[test]
    fn next_time_rejects_empty_profiles() {
        let rule = ThresholdRule::SumCount { batch: 1 };
        assert!(matches!(
            next_time(&[], 0.0, &rule),
            Err(BoundError::EmptyProfiles)
        ));
    }

    #[test]
    fn rennala_upper_sequence_example() {
        let profiles = constant_profiles(&[1.0]);
        let consts = constants(1.0, 1.0, 1.5, 0.5, 1);
        let seq = bound_sequence(
            &profiles,
            &consts,
            BoundKind::RennalaUpper,
            &UniversalConstants::default(),
        )
        .unwrap();
        assert_eq!(seq.iterations, 48);
        assert_eq!(seq.rule, ThresholdRule::SumCount { batch: 3 });
        assert_eq!(seq.times.len(), 49);
        for (k, t) in seq.times.iter().enumerate() {
            let got = t.expect_finite();
            assert!((got - 3.0 * k as f64).abs() < 1e-6, "k={k} got {got}");
        }
        assert!((seq.final_time().expect_finite() - 144.0).abs() < 1e-6);
    }

    #[test]
    fn malenia_upper_per_iteration_delta() {
        // sigma^2 = eps * n makes the harmonic target exactly 2.
        let consts = constants(1.0, 1.0, 2.0, 1.0, 2);
        let profiles = constant_profiles(&[1.0, 1.0]);
        let (_, rule) = sequence_plan(
            BoundKind::MaleniaUpper,
            &consts,
            &UniversalConstants::default(),
        )
        .unwrap();
        assert_eq!(rule, ThresholdRule::HarmonicCount { target: 2.0 });
        let t = next_time(&profiles, 0.0, &rule).unwrap().expect_finite();
        assert!((t - 2.0).abs() < 1e-9, "got {t}");
    }

    #[test]
    fn homog_lower_zero_variance_single_gradient_times() {
        let consts = constants(1.0, 1.0, 0.0, 1e-5, 2);
        let uni = UniversalConstants::default();
        let (k, rule) = sequence_plan(BoundKind::HomogLower, &consts, &uni).unwrap();
        assert_eq!(rule, ThresholdRule::SumCount { batch: 1 });
        assert_eq!(k, (uni.c1 * 1e5) as u64);
        assert!(k >= 1);
        let profiles = constant_profiles(&[2.0, 2.0]);
        let seq = bound_sequence(&profiles, &consts, BoundKind::HomogLower, &uni).unwrap();
        // One fresh gradient takes 0.5 seconds with two rate-2 workers.
        let t1 = seq.times[1].expect_finite();
        assert!((t1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn lower_kinds_reject_large_epsilon() {
        let consts = constants(1.0, 1.0, 1.0, 2.0, 1);
        let err = sequence_plan(
            BoundKind::HomogLower,
            &consts,
            &UniversalConstants::default(),
        )
        .unwrap_err();
        assert!(matches!(err, BoundError::EpsilonTooLarge { .. }));
    }

    #[test]
    fn heter_lower_log_divides_by_log() {
        let consts = constants(1.0, 1.0, 8.0, 1e-5, 2);
        let uni = UniversalConstants::default();
        let (k_plain, rule_plain) = sequence_plan(BoundKind::HeterLower, &consts, &uni).unwrap();
        let (k_log, rule_log) = sequence_plan(BoundKind::HeterLowerLog, &consts, &uni).unwrap();
        let log = (consts.l * consts.delta / consts.epsilon).ln();
        assert_eq!(k_log, (uni.c1 * 1e5 / log) as u64);
        assert!(k_log < k_plain);
        match (rule_plain, rule_log) {
            (
                ThresholdRule::HarmonicScaled { target: tp, scale: sp },
                ThresholdRule::HarmonicScaled { target: tl, scale: sl },
            ) => {
                assert_eq!(tp, tl);
                assert!((sl - sp / log).abs() < 1e-15);
            }
            other => panic!("unexpected rules {other:?}"),
        }
    }

    #[test]
    fn fixed_homog_closed_form_enumeration() {
        // Explicit enumeration over prefix sizes.
        let consts = constants(1.0, 1.0, 4.0, 1.0, 2);
        let got = fixed_homog_time(&[1.0, 1.0], &consts).unwrap();
        let m1 = 1.0f64 * (1.0 + 4.0);
        let m2 = (2.0f64 / 2.0).recip() * (1.0 + 4.0 / 2.0);
        assert_eq!(got, m1.min(m2));
        assert!((got - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_heter_zero_variance_is_slowest_worker() {
        let consts = constants(1.0, 1.0, 0.0, 1.0, 2);
        let got = fixed_heter_time(&[1.0, 1.0], &consts).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
        assert!(matches!(
            fixed_heter_time(&[1.0, 0.0], &consts),
            Err(BoundError::InvalidArgument(_))
        ));
    }

    #[test]
    fn prefix_min_example() {
        let got = prefix_min(&[3.0, 2.0, 1.0], 2.0).unwrap();
        assert!((got.value - 0.8).abs() < 1e-12);
        assert_eq!(got.j_min, 2);
        assert_eq!(got.j_max, 2);
        assert!(1.0 / 2.0 <= got.value && got.value <= 1.0 / 1.0);
    }

    #[test]
    fn prefix_min_sandwich_properties_on_random_sequences() {
        // Properties of the prefix-minimization helper on 1000 random
        // descending sequences: the minimum is sandwiched between the
        // reciprocals at the minimizing index and the next one.
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=8);
            let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..10.0)).collect();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let s = rng.gen_range(1e-6..20.0);
            let pm = prefix_min(&v, s).unwrap();
            // 1: strict upper bound at the largest minimizer.
            if pm.j_max < n {
                assert!(pm.value < 1.0 / v[pm.j_max], "v={v:?} s={s}");
            }
            // 2: non-strict version at any minimizer.
            if pm.j_min < n {
                assert!(pm.value <= 1.0 / v[pm.j_min], "v={v:?} s={s}");
            }
            // 3: strict lower bound at the smallest minimizer.
            assert!(1.0 / v[pm.j_min - 1] < pm.value, "v={v:?} s={s}");
            // 4: non-strict version at any minimizer.
            assert!(1.0 / v[pm.j_max - 1] <= pm.value, "v={v:?} s={s}");
        }
    }

    #[test]
    fn baseline_times() {
        // L*delta/eps = 1 and sigma^2 L delta/(n eps^2) = 1.
        let consts = constants(1.0, 1.0, 2.0, 1.0, 2);
        let got = baseline_time(BaselineKind::Minibatch, &[1.0, 2.0], &consts).unwrap();
        assert!((got - 4.0).abs() < 1e-12, "got {got}");
        let got = baseline_time(BaselineKind::Async, &[1.0, 3.0], &consts).unwrap();
        assert!((got - 3.0).abs() < 1e-12, "got {got}");
        // Equal times reduce the prefix form to the async value at m = n.
        let a = baseline_time(BaselineKind::RennalaFixed, &[2.0, 2.0], &consts).unwrap();
        let b = baseline_time(BaselineKind::Async, &[2.0, 2.0], &consts).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn iteration_counts() {
        let consts = constants(1.0, 1.0, 0.0, 0.01, 1);
        assert_eq!(iterations_needed(Regime::Nonconvex, &consts).unwrap(), 2400);
        let consts = constants(1.0, 1.0, 0.0, 1.0, 1).with_m(1.0).with_r(1.0);
        assert_eq!(
            iterations_needed(Regime::ConvexNonsmooth, &consts).unwrap(),
            2
        );
        let consts = constants(4.0, 1.0, 0.0, 4.0, 1).with_r(1.0);
        assert_eq!(iterations_needed(Regime::ConvexSmooth, &consts).unwrap(), 8);
        let missing = constants(1.0, 1.0, 0.0, 1.0, 1);
        assert!(matches!(
            iterations_needed(Regime::ConvexNonsmooth, &missing),
            Err(BoundError::MissingConstant(_))
        ));
    }

    #[test]
    fn trend_homog_reduces_to_inverse_integral() {
        let consts = constants(1.0, 1.0, 4.0, 1.0, 2);
        let trend = TrendSpec::SineOffset {
            offset: 1.01,
            amplitude: 1.0,
        };
        let fixed = fixed_homog_time(&[1.0, 1.0], &consts).unwrap();
        let t = trend_homog_time(&[1.0, 1.0], &trend, &consts)
            .unwrap()
            .expect_finite();
        let g_of_t = 1.01 * t - t.cos() + 1.0;
        assert!((g_of_t - fixed).abs() < 1e-8, "G({t}) = {g_of_t} vs {fixed}");
    }

    #[test]
    fn outage_homog_uses_effective_powers() {
        let consts = constants(1.0, 1.0, 4.0, 1.0, 2);
        let via_outage = outage_homog_time(2.0, &[1.0, 2.0], &consts).unwrap();
        let direct = fixed_homog_time(&[2.0, 1.0], &consts).unwrap();
        assert_eq!(via_outage, direct);
    }

    #[test]
    fn scaling_all_powers_scales_times_inversely() {
        let consts = constants(1.0, 1.0, 3.0, 0.5, 2);
        let uni = UniversalConstants::default();
        let base = bound_sequence(
            &constant_profiles(&[1.0, 0.5]),
            &consts,
            BoundKind::RennalaUpper,
            &uni,
        )
        .unwrap();
        let scaled = bound_sequence(
            &constant_profiles(&[4.0, 2.0]),
            &consts,
            BoundKind::RennalaUpper,
            &uni,
        )
        .unwrap();
        for (a, b) in base.times.iter().zip(&scaled.times) {
            let (a, b) = (a.expect_finite(), b.expect_finite());
            assert!((a / 4.0 - b).abs() < 1e-6 * (1.0 + a), "{a} vs {b}");
        }
        assert!(base.times.windows(2).all(|w| w[0] <= w[1]));
    }
}
