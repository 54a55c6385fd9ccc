//! Per-worker computation powers `v(t)`, their work functions
//! `V(t) = ∫₀ᵗ v(τ) dτ`, gradient counting, and generalized inverses.
//!
//! A worker's instantaneous rate (stochastic gradients per second) is a
//! nonnegative function of virtual time. The number of gradients completed on
//! `[t0, t1]` is `⌊V(t1) − V(t0)⌋`, and the generalized inverse returns the
//! leftmost time at which accumulated work reaches a given level, with the
//! convention that an unreachable level maps to the [`WorkValue::Inf`]
//! sentinel.

use std::fmt;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numeric::{floor_snapped, leftmost_feasible, DEFAULT_HORIZON, SNAP};

/// Errors from power-model operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerModelError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("interval is reversed: t0 = {t0} > t1 = {t1}")]
    ReversedInterval { t0: f64, t1: f64 },
    #[error("work amount must be nonnegative, got {0}")]
    NegativeWork(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}

/// A nonnegative quantity on the extended half-line `[0, ∞]`, used for both
/// computation work and virtual times. `Inf` is a dedicated sentinel that
/// absorbs addition and max; it serializes as the string `"inf"`, never as a
/// floating special value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkValue {
    Finite(f64),
    Inf,
}

impl WorkValue {
    pub const ZERO: WorkValue = WorkValue::Finite(0.0);

    /// Wraps a finite nonnegative value.
    pub fn finite(v: f64) -> Self {
        debug_assert!(v.is_finite() && v >= 0.0, "WorkValue::finite({v})");
        WorkValue::Finite(v)
    }

    /// Maps floating infinity onto the sentinel; finite values pass through.
    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            WorkValue::Inf
        } else {
            WorkValue::finite(v.max(0.0))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, WorkValue::Finite(_))
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            WorkValue::Finite(v) => Some(v),
            WorkValue::Inf => None,
        }
    }

    /// Finite value or panic; for contexts where finiteness is an invariant.
    pub fn expect_finite(self) -> f64 {
        self.as_finite().expect("unexpected infinite value")
    }

    /// f64 view with `Inf` mapped to `f64::INFINITY` (for internal math only;
    /// never serialized).
    pub fn to_f64(self) -> f64 {
        match self {
            WorkValue::Finite(v) => v,
            WorkValue::Inf => f64::INFINITY,
        }
    }

    pub fn max(self, other: WorkValue) -> WorkValue {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: WorkValue) -> WorkValue {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for WorkValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use WorkValue::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Inf) => Some(std::cmp::Ordering::Less),
            (Inf, Finite(_)) => Some(std::cmp::Ordering::Greater),
            (Inf, Inf) => Some(std::cmp::Ordering::Equal),
        }
    }
}

impl Add for WorkValue {
    type Output = WorkValue;
    fn add(self, rhs: WorkValue) -> WorkValue {
        match (self, rhs) {
            (WorkValue::Finite(a), WorkValue::Finite(b)) => WorkValue::finite(a + b),
            _ => WorkValue::Inf,
        }
    }
}

impl fmt::Display for WorkValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkValue::Finite(v) => write!(f, "{v}"),
            WorkValue::Inf => write!(f, "inf"),
        }
    }
}

impl Serialize for WorkValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            WorkValue::Finite(v) => serializer.serialize_f64(*v),
            WorkValue::Inf => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for WorkValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = WorkValue;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a nonnegative number or the string \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<WorkValue, E> {
                if !v.is_finite() || v < 0.0 {
                    return Err(E::custom(format!("invalid work value {v}")));
                }
                Ok(WorkValue::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<WorkValue, E> {
                Ok(WorkValue::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<WorkValue, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<WorkValue, E> {
                if s == "inf" {
                    Ok(WorkValue::Inf)
                } else {
                    Err(E::custom(format!("expected \"inf\", got {s:?}")))
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Multiplicative time trend `g(t)` for [`PowerProfile::ScaledTrend`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrendSpec {
    /// `g(t) = offset + amplitude · sin t`; requires `offset >= 1` and
    /// `0 <= amplitude <= offset` so the trend stays nonnegative.
    SineOffset { offset: f64, amplitude: f64 },
    /// `g(t) = t^exponent` with `exponent >= 0`.
    PolyGrowth { exponent: f64 },
    /// Piecewise-constant trend on `[breakpoints[i], breakpoints[i+1])`, the
    /// last value extending to infinity.
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TrendSpec {
    fn validate(&self) -> Result<(), PowerModelError> {
        match self {
            TrendSpec::SineOffset { offset, amplitude } => {
                if !(*offset >= 1.0) {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "sine trend offset must be >= 1, got {offset}"
                    )));
                }
                if !(*amplitude >= 0.0 && amplitude <= offset) {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "sine trend amplitude must lie in [0, offset], got {amplitude}"
                    )));
                }
            }
            TrendSpec::PolyGrowth { exponent } => {
                if !(*exponent >= 0.0) {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "poly trend exponent must be >= 0, got {exponent}"
                    )));
                }
            }
            TrendSpec::Piecewise {
                breakpoints,
                values,
            } => validate_steps("trend", breakpoints, values)?,
        }
        Ok(())
    }

    /// `g(t)`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TrendSpec::SineOffset { offset, amplitude } => offset + amplitude * t.sin(),
            TrendSpec::PolyGrowth { exponent } => t.powf(*exponent),
            TrendSpec::Piecewise {
                breakpoints,
                values,
            } => step_value_right(breakpoints, values, t),
        }
    }

    /// `G(t) = ∫₀ᵗ g(τ) dτ` in closed form.
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            TrendSpec::SineOffset { offset, amplitude } => {
                offset * t - amplitude * t.cos() + amplitude
            }
            TrendSpec::PolyGrowth { exponent } => t.powf(exponent + 1.0) / (exponent + 1.0),
            TrendSpec::Piecewise {
                breakpoints,
                values,
            } => step_integral(breakpoints, values, t),
        }
    }

    fn integral_is_unbounded(&self) -> bool {
        match self {
            // offset >= 1 keeps the mean slope positive.
            TrendSpec::SineOffset { .. } => true,
            TrendSpec::PolyGrowth { .. } => true,
            TrendSpec::Piecewise { values, .. } => values.last().is_some_and(|v| *v > 0.0),
        }
    }

    fn integral_limit(&self) -> WorkValue {
        if self.integral_is_unbounded() {
            return WorkValue::Inf;
        }
        match self {
            TrendSpec::Piecewise {
                breakpoints,
                values,
            } => WorkValue::finite(step_integral(
                breakpoints,
                values,
                *breakpoints.last().unwrap(),
            )),
            _ => unreachable!("only piecewise trends can be bounded"),
        }
    }
}

/// A worker's computation power `v(t)`: nonnegative, continuous almost
/// everywhere. Randomized powers are realized by sampling a [`Trace`] per
/// seed before any simulation, so everything downstream is deterministic.
///
/// [`Trace`]: PowerProfile::Trace
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PowerProfile {
    /// `v(t) = v`.
    Constant { v: f64 },
    /// `v(t) = v · g(t)`.
    ScaledTrend { v: f64, trend: TrendSpec },
    /// Active at rate `v` on `[period·m, period·m + active_len]` for
    /// `m = 0, 1, 2, …`, zero otherwise.
    PeriodicOutage {
        v: f64,
        period: f64,
        active_len: f64,
    },
    /// `v(t) = values[i]` on `[breakpoints[i], breakpoints[i+1])`, the last
    /// value extending to infinity.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Sampled rates under left-continuous step interpolation, which keeps
    /// the work function piecewise linear and exactly integrable.
    Trace {
        sample_times: Vec<f64>,
        sample_powers: Vec<f64>,
    },
}

fn validate_steps(what: &str, breaks: &[f64], values: &[f64]) -> Result<(), PowerModelError> {
    if breaks.is_empty() {
        return Err(PowerModelError::InvalidProfile(format!(
            "{what} needs at least one breakpoint"
        )));
    }
    if breaks.len() != values.len() {
        return Err(PowerModelError::InvalidProfile(format!(
            "{what} has {} breakpoints but {} values",
            breaks.len(),
            values.len()
        )));
    }
    if breaks[0] != 0.0 {
        return Err(PowerModelError::InvalidProfile(format!(
            "{what} breakpoints must start at 0, got {}",
            breaks[0]
        )));
    }
    for pair in breaks.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(PowerModelError::InvalidProfile(format!(
                "{what} breakpoints must be strictly increasing ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    if let Some(bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(PowerModelError::InvalidProfile(format!(
            "{what} values must be finite and nonnegative, got {bad}"
        )));
    }
    Ok(())
}

/// Right-continuous step lookup: `values[i]` on `[breaks[i], breaks[i+1])`.
fn step_value_right(breaks: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = breaks.partition_point(|b| *b <= t);
    values[idx.saturating_sub(1).min(values.len() - 1)]
}

/// Left-continuous step lookup: `values[i]` on `(breaks[i], breaks[i+1]]`,
/// with `values[0]` at `t = 0`.
fn step_value_left(breaks: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= breaks[0] {
        return values[0];
    }
    let idx = breaks.partition_point(|b| *b < t);
    values[idx.saturating_sub(1).min(values.len() - 1)]
}

/// Exact integral of a step function from 0 to `t`.
fn step_integral(breaks: &[f64], values: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..breaks.len() {
        let start = breaks[i];
        if t <= start {
            break;
        }
        let end = if i + 1 < breaks.len() {
            breaks[i + 1].min(t)
        } else {
            t
        };
        acc += values[i] * (end - start);
    }
    acc
}

impl PowerProfile {
    /// Checks the structural invariants: nonnegative powers, strictly
    /// increasing breakpoints starting at 0, positive outage period with
    /// `0 < active_len <= period`.
    pub fn validate(&self) -> Result<(), PowerModelError> {
        match self {
            PowerProfile::Constant { v } => {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "power must be finite and nonnegative, got {v}"
                    )));
                }
            }
            PowerProfile::ScaledTrend { v, trend } => {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "power must be finite and nonnegative, got {v}"
                    )));
                }
                trend.validate()?;
            }
            PowerProfile::PeriodicOutage {
                v,
                period,
                active_len,
            } => {
                if !(*v >= 0.0) || !v.is_finite() {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "power must be finite and nonnegative, got {v}"
                    )));
                }
                if !(*period > 0.0) {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "outage period must be positive, got {period}"
                    )));
                }
                if !(*active_len > 0.0 && active_len <= period) {
                    return Err(PowerModelError::InvalidProfile(format!(
                        "active_len must lie in (0, period], got {active_len}"
                    )));
                }
            }
            PowerProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => validate_steps("piecewise profile", breakpoints, values)?,
            PowerProfile::Trace {
                sample_times,
                sample_powers,
            } => validate_steps("trace", sample_times, sample_powers)?,
        }
        Ok(())
    }

    /// Instantaneous power `v(t)`.
    pub fn power_at(&self, t: f64) -> Result<f64, PowerModelError> {
        if !(t >= 0.0) {
            return Err(PowerModelError::NegativeTime(t));
        }
        Ok(match self {
            PowerProfile::Constant { v } => *v,
            PowerProfile::ScaledTrend { v, trend } => v * trend.value(t),
            PowerProfile::PeriodicOutage {
                v,
                period,
                active_len,
            } => {
                let rem = t - (t / period).floor() * period;
                if rem <= *active_len {
                    *v
                } else {
                    0.0
                }
            }
            PowerProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => step_value_right(breakpoints, values, t),
            PowerProfile::Trace {
                sample_times,
                sample_powers,
            } => step_value_left(sample_times, sample_powers, t),
        })
    }

    /// Accumulated work `V(t) = ∫₀ᵗ v(τ) dτ` via the exact antiderivative of
    /// each variant.
    fn total_work(&self, t: f64) -> f64 {
        match self {
            PowerProfile::Constant { v } => v * t,
            PowerProfile::ScaledTrend { v, trend } => v * trend.integral(t),
            PowerProfile::PeriodicOutage {
                v,
                period,
                active_len,
            } => {
                let full = (t / period).floor();
                let rem = t - full * period;
                v * (full * active_len + rem.min(*active_len))
            }
            PowerProfile::PiecewiseConstant {
                breakpoints,
                values,
            } => step_integral(breakpoints, values, t),
            PowerProfile::Trace {
                sample_times,
                sample_powers,
            } => step_integral(sample_times, sample_powers, t),
        }
    }

    fn work_is_unbounded(&self) -> bool {
        match self {
            PowerProfile::Constant { v } => *v > 0.0,
            PowerProfile::ScaledTrend { v, trend } => *v > 0.0 && trend.integral_is_unbounded(),
            PowerProfile::PeriodicOutage { v, .. } => *v > 0.0,
            PowerProfile::PiecewiseConstant { values, .. }
            | PowerProfile::Trace {
                sample_powers: values,
                ..
            } => values.last().is_some_and(|v| *v > 0.0),
        }
    }

    /// `lim_{t→∞} V(t)`.
    fn work_limit(&self) -> WorkValue {
        if self.work_is_unbounded() {
            return WorkValue::Inf;
        }
        match self {
            PowerProfile::Constant { .. } => WorkValue::ZERO,
            PowerProfile::ScaledTrend { v, trend } => {
                if *v == 0.0 {
                    WorkValue::ZERO
                } else {
                    match trend.integral_limit() {
                        WorkValue::Finite(g) => WorkValue::finite(v * g),
                        WorkValue::Inf => WorkValue::Inf,
                    }
                }
            }
            PowerProfile::PeriodicOutage { .. } => WorkValue::ZERO,
            PowerProfile::PiecewiseConstant {
                breakpoints,
                values,
            }
            | PowerProfile::Trace {
                sample_times: breakpoints,
                sample_powers: values,
            } => WorkValue::finite(step_integral(breakpoints, values, *breakpoints.last().unwrap())),
        }
    }

    /// Computation work `V(t1) − V(t0)` performed on `[t0, t1]`; `t1` may be
    /// [`WorkValue::Inf`]. Nonnegative and additive over adjacent intervals.
    pub fn work(&self, t0: f64, t1: WorkValue) -> Result<WorkValue, PowerModelError> {
        if !(t0 >= 0.0) {
            return Err(PowerModelError::NegativeTime(t0));
        }
        match t1 {
            WorkValue::Finite(t1) => {
                if t1 < t0 {
                    return Err(PowerModelError::ReversedInterval { t0, t1 });
                }
                Ok(WorkValue::finite(
                    (self.total_work(t1) - self.total_work(t0)).max(0.0),
                ))
            }
            WorkValue::Inf => Ok(match self.work_limit() {
                WorkValue::Finite(lim) => WorkValue::finite((lim - self.total_work(t0)).max(0.0)),
                WorkValue::Inf => WorkValue::Inf,
            }),
        }
    }

    /// Work over a finite interval as a plain `f64`.
    pub fn work_between(&self, t0: f64, t1: f64) -> Result<f64, PowerModelError> {
        Ok(self
            .work(t0, WorkValue::finite(t1))?
            .expect_finite())
    }

    /// Number of whole stochastic gradients completable on `[t0, t1]`:
    /// `⌊V(t1) − V(t0)⌋` with boundary snapping.
    pub fn grad_count(&self, t0: f64, t1: f64) -> Result<u64, PowerModelError> {
        let w = self.work_between(t0, t1)?;
        Ok(floor_snapped(w) as u64)
    }

    /// Generalized inverse relative to `base`: the leftmost `t >= base` with
    /// `V(t) − V(base) = S`, or [`WorkValue::Inf`] when that level is never
    /// reached (also when it lies beyond the search horizon of 1e12 virtual
    /// seconds). Exact in closed form for constant profiles; bracketed
    /// bisection otherwise, which is valid because `V` is continuous and
    /// nondecreasing.
    pub fn inverse_work(&self, s: f64, base: f64) -> Result<WorkValue, PowerModelError> {
        if !(base >= 0.0) {
            return Err(PowerModelError::NegativeTime(base));
        }
        if !(s >= 0.0) {
            return Err(PowerModelError::NegativeWork(s));
        }
        if s == 0.0 {
            return Ok(WorkValue::finite(base));
        }
        if let PowerProfile::Constant { v } = self {
            return Ok(if *v > 0.0 {
                WorkValue::finite(base + s / v)
            } else {
                WorkValue::Inf
            });
        }
        let base_work = self.total_work(base);
        if let WorkValue::Finite(limit) = self.work_limit() {
            if limit < base_work + s - SNAP {
                return Ok(WorkValue::Inf);
            }
        }
        let pred = |t: f64| self.total_work(t) - base_work >= s;
        match leftmost_feasible(base, DEFAULT_HORIZON, pred) {
            Some(t) => Ok(WorkValue::finite(t)),
            None => Ok(WorkValue::Inf),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    // Composite Simpson quadrature; independent of the closed-form
    // antiderivatives it cross-checks.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    // Interval-intersection oracle for the outage profile: sums the overlap
    // of [t0, t1] with each active window.
    fn outage_work_oracle(v: f64, period: f64, active: f64, t0: f64, t1: f64) -> f64 {
        let mut acc = 0.0;
        let mut m = 0.0;
        loop {
            let start = period * m;
            if start > t1 {
                break;
            }
            let end = start + active;
            let overlap = (end.min(t1) - start.max(t0)).max(0.0);
            acc += v * overlap;
            m += 1.0;
        }
        acc
    }

    fn outage_113() -> PowerProfile {
        PowerProfile::PeriodicOutage {
            v: 1.0,
            period: 3.0,
            active_len: 1.0,
        }
    }

    fn sine_trend(v: f64) -> PowerProfile {
        PowerProfile::ScaledTrend {
            v,
            trend: TrendSpec::SineOffset {
                offset: 1.01,
                amplitude: 1.0,
            },
        }
    }

    #[test]
    fn power_at_constant() {
        let p = PowerProfile::Constant { v: 2.0 };
        assert_eq!(p.power_at(7.0).unwrap(), 2.0);
    }

    #[test]
    fn power_at_outage_windows() {
        let p = outage_113();
        assert_eq!(p.power_at(3.5).unwrap(), 1.0);
        assert_eq!(p.power_at(2.0).unwrap(), 0.0);
        // Closed active intervals.
        assert_eq!(p.power_at(1.0).unwrap(), 1.0);
        assert_eq!(p.power_at(3.0).unwrap(), 1.0);
    }

    #[test]
    fn power_at_sine_trend() {
        let p = sine_trend(2.0);
        let got = p.power_at(FRAC_PI_2).unwrap();
        assert!((got - 4.02).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn power_at_rejects_negative_time() {
        let p = PowerProfile::Constant { v: 1.0 };
        assert!(matches!(
            p.power_at(-0.5),
            Err(PowerModelError::NegativeTime(_))
        ));
    }

    #[test]
    fn work_constant() {
        let p = PowerProfile::Constant { v: 2.0 };
        assert_eq!(p.work_between(0.0, 3.0).unwrap(), 6.0);
    }

    #[test]
    fn work_sine_trend_matches_antiderivative_and_quadrature() {
        let p = sine_trend(1.0);
        let got = p.work_between(0.0, PI).unwrap();
        // G(t) = 1.01 t − cos t + 1 evaluated independently.
        let expected = 1.01 * PI - PI.cos() + 1.0;
        assert!((got - expected).abs() < 1e-12, "got {got}");
        assert!((expected - 5.17301).abs() < 1e-5);
        let quad = simpson(|t| p.power_at(t).unwrap(), 0.0, PI, 10_000);
        assert!((got - quad).abs() < 1e-9, "closed form {got} vs quadrature {quad}");
    }

    #[test]
    fn work_outage_matches_piecewise_oracle() {
        let p = outage_113();
        let got = p.work_between(0.0, 3.5).unwrap();
        assert!((got - 1.5).abs() < 1e-12, "got {got}");
        for &(a, b) in &[(0.0, 3.5), (0.5, 7.25), (1.0, 3.0), (2.0, 2.5), (0.0, 10.0)] {
            let got = p.work_between(a, b).unwrap();
            let oracle = outage_work_oracle(1.0, 3.0, 1.0, a, b);
            assert!((got - oracle).abs() < 1e-12, "[{a},{b}] got {got} vs {oracle}");
        }
    }

    #[test]
    fn work_to_infinity() {
        let p = PowerProfile::Constant { v: 2.0 };
        assert_eq!(p.work(1.0, WorkValue::Inf).unwrap(), WorkValue::Inf);
        let stopped = PowerProfile::Trace {
            sample_times: vec![0.0, 2.0],
            sample_powers: vec![1.5, 0.0],
        };
        let got = stopped.work(1.0, WorkValue::Inf).unwrap().expect_finite();
        assert!((got - 1.5).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn work_rejects_reversed_interval() {
        let p = PowerProfile::Constant { v: 1.0 };
        assert!(matches!(
            p.work_between(2.0, 1.0),
            Err(PowerModelError::ReversedInterval { .. })
        ));
    }

    #[test]
    fn grad_count_floors() {
        let p = PowerProfile::Constant { v: 1.0 };
        assert_eq!(p.grad_count(0.0, 2.5).unwrap(), 2);
        for &v in &[0.25, 0.5, 1.0, 3.0, 7.5] {
            let p = PowerProfile::Constant { v };
            assert_eq!(p.grad_count(0.0, 1.0 / v).unwrap(), 1, "v = {v}");
        }
        // 2·G(π) = 10.34602…
        let p = sine_trend(2.0);
        assert_eq!(p.grad_count(0.0, PI).unwrap(), 10);
    }

    #[test]
    fn grad_count_snaps_at_integer_boundaries() {
        let p = PowerProfile::Constant { v: 1.0 };
        assert_eq!(p.grad_count(0.0, 3.0 - 1e-10).unwrap(), 3);
    }

    #[test]
    fn inverse_work_constant() {
        let p = PowerProfile::Constant { v: 2.0 };
        assert_eq!(p.inverse_work(5.0, 0.0).unwrap(), WorkValue::finite(2.5));
    }

    #[test]
    fn inverse_work_outage_piecewise_oracle() {
        let p = outage_113();
        let got = p.inverse_work(1.5, 0.0).unwrap().expect_finite();
        assert!((got - 3.5).abs() < 1e-9, "got {got}");
        // From base 0.5 a full unit of work needs the half of the first
        // window plus half of the second: leftmost completion at 3.5.
        let got = p.inverse_work(1.0, 0.5).unwrap().expect_finite();
        assert!((got - 3.5).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn inverse_work_zero_power_is_unreachable() {
        let p = PowerProfile::Constant { v: 0.0 };
        assert_eq!(p.inverse_work(1.0, 0.0).unwrap(), WorkValue::Inf);
    }

    #[test]
    fn inverse_work_plateau_level_is_attained() {
        let p = PowerProfile::Trace {
            sample_times: vec![0.0, 2.0],
            sample_powers: vec![1.0, 0.0],
        };
        // The level 2.0 equals the total work limit and is first attained at
        // t = 2.
        let got = p.inverse_work(2.0, 0.0).unwrap().expect_finite();
        assert!((got - 2.0).abs() < 1e-9, "got {got}");
        assert_eq!(p.inverse_work(2.1, 0.0).unwrap(), WorkValue::Inf);
    }

    #[test]
    fn inverse_work_rejects_negative_level() {
        let p = PowerProfile::Constant { v: 1.0 };
        assert!(matches!(
            p.inverse_work(-1.0, 0.0),
            Err(PowerModelError::NegativeWork(_))
        ));
    }

    #[test]
    fn inverse_then_work_roundtrip() {
        let profiles = vec![
            outage_113(),
            sine_trend(0.7),
            PowerProfile::PiecewiseConstant {
                breakpoints: vec![0.0, 1.0, 4.0],
                values: vec![2.0, 0.5, 3.0],
            },
        ];
        for p in &profiles {
            for &(s, base) in &[(1.0, 0.0), (2.5, 0.3), (0.25, 1.7), (7.0, 2.0)] {
                let t = p.inverse_work(s, base).unwrap().expect_finite();
                let w = p.work_between(base, t).unwrap();
                assert!((w - s).abs() < 1e-6, "{p:?} s={s} base={base}: work {w}");
            }
        }
    }

    #[test]
    fn trace_interpolation_is_left_continuous() {
        let p = PowerProfile::Trace {
            sample_times: vec![0.0, 1.0, 2.0],
            sample_powers: vec![4.0, 6.0, 8.0],
        };
        assert_eq!(p.power_at(0.0).unwrap(), 4.0);
        assert_eq!(p.power_at(1.0).unwrap(), 4.0);
        assert_eq!(p.power_at(1.5).unwrap(), 6.0);
        assert_eq!(p.power_at(2.0).unwrap(), 6.0);
        assert_eq!(p.power_at(5.0).unwrap(), 8.0);
        // Piecewise profiles use the right-continuous convention instead.
        let q = PowerProfile::PiecewiseConstant {
            breakpoints: vec![0.0, 1.0, 2.0],
            values: vec![4.0, 6.0, 8.0],
        };
        assert_eq!(q.power_at(1.0).unwrap(), 6.0);
    }

    #[test]
    fn validate_catches_bad_profiles() {
        assert!(PowerProfile::Constant { v: -1.0 }.validate().is_err());
        assert!(PowerProfile::PeriodicOutage {
            v: 1.0,
            period: 3.0,
            active_len: 4.0
        }
        .validate()
        .is_err());
        assert!(PowerProfile::Trace {
            sample_times: vec![0.5, 1.0],
            sample_powers: vec![1.0, 2.0]
        }
        .validate()
        .is_err());
        assert!(PowerProfile::PiecewiseConstant {
            breakpoints: vec![0.0, 1.0, 1.0],
            values: vec![1.0, 2.0, 3.0]
        }
        .validate()
        .is_err());
        assert!(outage_113().validate().is_ok());
    }

    #[test]
    fn work_value_saturates_and_orders() {
        let fin = WorkValue::finite(3.0);
        assert_eq!(fin + WorkValue::finite(2.0), WorkValue::finite(5.0));
        assert_eq!(fin + WorkValue::Inf, WorkValue::Inf);
        assert_eq!(WorkValue::Inf.max(fin), WorkValue::Inf);
        assert!(fin < WorkValue::Inf);
        assert!(WorkValue::Inf <= WorkValue::Inf);
    }

    #[test]
    fn work_value_serializes_inf_as_string() {
        assert_eq!(serde_json::to_string(&WorkValue::Inf).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&WorkValue::finite(2.5)).unwrap(), "2.5");
        let round: WorkValue = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(round, WorkValue::Inf);
        let round: WorkValue = serde_json::from_str("4.25").unwrap();
        assert_eq!(round, WorkValue::finite(4.25));
    }
}
