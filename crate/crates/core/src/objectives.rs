//! Test objectives and stochastic-gradient oracles: quadratics,
//! heterogeneous quadratic splits, the worst-case chain function with its
//! scaling, and the Bernoulli zero-out oracle.
//!
//! The chain function on `R^T` is
//! `F(x) = −Ψ(1)Φ(x₁) + Σ_{i=2}^T [Ψ(−x_{i−1})Φ(−x_i) − Ψ(x_{i−1})Φ(x_i)]`
//! with `Ψ(x) = exp(1 − 1/(2x−1)²)` for `x > 1/2` (zero otherwise) and
//! `Φ(x) = √e ∫_{−∞}^x e^{−t²/2} dt`. Its gradient can extend the set of
//! nonzero coordinates by at most one position per query, which is what the
//! progress-gated oracles below exploit.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bound_calc::ProblemConstants;
use crate::numeric::floor_snapped_rel;

/// Initial-gap constant of the chain function (`F(0) − inf F <= 12 T`).
pub const CHAIN_GAP: f64 = 12.0;
/// Smoothness constant of the chain function.
pub const CHAIN_SMOOTHNESS: f64 = 152.0;
/// Uniform bound on `‖∇F‖_∞`.
pub const CHAIN_GRAD_INF: f64 = 23.0;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("target accuracy too large for this construction: {0}")]
    EpsilonTooLarge(String),
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
}

/// Index of the last nonzero coordinate (1-based), 0 for the zero vector.
pub fn prog(x: &[f64]) -> usize {
    x.iter().rposition(|v| *v != 0.0).map_or(0, |i| i + 1)
}

const PSI_UNDERFLOW: f64 = 1e-8;

/// `Ψ(x)`: zero for `x <= 1/2`, `exp(1 − 1/(2x−1)²)` beyond. For
/// `2x − 1 ∈ (0, 1e-8]` the exponent drops below −1e16, far under the
/// representable range, so zero is returned directly.
pub fn psi(x: f64) -> f64 {
    let s = 2.0 * x - 1.0;
    if s <= PSI_UNDERFLOW {
        0.0
    } else {
        (1.0 - 1.0 / (s * s)).exp()
    }
}

/// `Ψ'(x) = 4 Ψ(x) / (2x−1)³` on the active branch.
pub fn psi_prime(x: f64) -> f64 {
    let s = 2.0 * x - 1.0;
    if s <= PSI_UNDERFLOW {
        0.0
    } else {
        4.0 * (1.0 - 1.0 / (s * s)).exp() / (s * s * s)
    }
}

/// `Φ(x) = √e ∫_{−∞}^x e^{−t²/2} dt = √(2πe) · Φ_N(x)` through the
/// complementary error function (absolute error well below 1e-14).
pub fn phi(x: f64) -> f64 {
    let sqrt_2pi_e = (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
    let normal_cdf = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    sqrt_2pi_e * normal_cdf
}

/// `Φ'(x) = √e · e^{−x²/2}`.
pub fn phi_prime(x: f64) -> f64 {
    std::f64::consts::E.sqrt() * (-0.5 * x * x).exp()
}

/// Value and gradient of the chain function on `R^T`.
pub fn worst_case_grad(x: &[f64], chain_len: usize) -> Result<(f64, Vec<f64>), ObjectiveError> {
    if x.len() != chain_len {
        return Err(ObjectiveError::DimensionMismatch {
            expected: chain_len,
            got: x.len(),
        });
    }
    if chain_len == 0 {
        return Ok((0.0, Vec::new()));
    }
    let mut value = -psi(1.0) * phi(x[0]);
    let mut grad = vec![0.0; chain_len];
    grad[0] = -psi(1.0) * phi_prime(x[0]);
    for i in 1..chain_len {
        let (a, b) = (x[i - 1], x[i]);
        value += psi(-a) * phi(-b) - psi(a) * phi(b);
        grad[i] += -psi(-a) * phi_prime(-b) - psi(a) * phi_prime(b);
        grad[i - 1] += -psi_prime(-a) * phi(-b) - psi_prime(a) * phi(b);
    }
    Ok((value, grad))
}

/// Stochastic-gradient oracle attached to an objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Returns the exact gradient.
    Exact,
    /// Adds isotropic Gaussian noise with total variance `sigma_sq`.
    Gaussian { sigma_sq: f64 },
    /// Bernoulli coordinate suppression past the current progress.
    ZeroOut { p: f64 },
}

impl OracleSpec {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        match self {
            OracleSpec::Exact => Ok(()),
            OracleSpec::Gaussian { sigma_sq } => {
                if !(*sigma_sq >= 0.0) {
                    return Err(ObjectiveError::InvalidObjective(format!(
                        "gaussian oracle variance must be nonnegative, got {sigma_sq}"
                    )));
                }
                Ok(())
            }
            OracleSpec::ZeroOut { p } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(ObjectiveError::InvalidProbability(*p));
                }
                Ok(())
            }
        }
    }
}

/// Objective variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// `f(x) = (l/2) ‖x‖²`.
    Quadratic { l: f64, dim: usize },
    /// Worker `i` holds `f_i(x) = (l/2) ‖x − c_i‖²`; the global objective is
    /// their mean.
    HeterQuadratic { l: f64, centers: Vec<Vec<f64>> },
    /// `f(x) = (l·λ²/l₁) F(x/λ)` over a chain of length `chain_len`.
    WorstCaseChain {
        chain_len: usize,
        lambda: f64,
        l: f64,
    },
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic { dim, .. } => *dim,
            Objective::HeterQuadratic { centers, .. } => {
                centers.first().map_or(0, |c| c.len())
            }
            Objective::WorstCaseChain { chain_len, .. } => *chain_len,
        }
    }

    /// Number of distinct local functions (1 for homogeneous objectives).
    pub fn local_count(&self) -> usize {
        match self {
            Objective::HeterQuadratic { centers, .. } => centers.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        match self {
            Objective::Quadratic { l, dim } => {
                if !(*l > 0.0) || *dim == 0 {
                    return Err(ObjectiveError::InvalidObjective(
                        "quadratic needs l > 0 and dim >= 1".into(),
                    ));
                }
            }
            Objective::HeterQuadratic { l, centers } => {
                if !(*l > 0.0) || centers.is_empty() {
                    return Err(ObjectiveError::InvalidObjective(
                        "heterogeneous quadratic needs l > 0 and at least one center".into(),
                    ));
                }
                let dim = centers[0].len();
                if dim == 0 || centers.iter().any(|c| c.len() != dim) {
                    return Err(ObjectiveError::InvalidObjective(
                        "heterogeneous quadratic centers must share a positive dimension".into(),
                    ));
                }
            }
            Objective::WorstCaseChain {
                chain_len,
                lambda,
                l,
            } => {
                if *chain_len == 0 || !(*lambda > 0.0) || !(*l > 0.0) {
                    return Err(ObjectiveError::InvalidObjective(
                        "chain objective needs chain_len >= 1, lambda > 0, l > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A fully specified problem: objective, constants, oracle, starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub objective: Objective,
    pub consts: ProblemConstants,
    pub oracle: OracleSpec,
    /// Starting point; all-zero by default.
    pub x0: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(objective: Objective, consts: ProblemConstants, oracle: OracleSpec) -> Self {
        let x0 = vec![0.0; objective.dim()];
        Self {
            objective,
            consts,
            oracle,
            x0,
        }
    }

    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = x0;
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        self.objective.validate()?;
        self.oracle.validate()?;
        if self.x0.len() != self.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                got: self.x0.len(),
            });
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dim() {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Global objective value `f(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check_dim(x)?;
        Ok(match &self.objective {
            Objective::Quadratic { l, .. } => 0.5 * l * norm_sq(x),
            Objective::HeterQuadratic { l, centers } => {
                let mut acc = 0.0;
                for c in centers {
                    acc += 0.5 * l * dist_sq(x, c);
                }
                acc / centers.len() as f64
            }
            Objective::WorstCaseChain {
                chain_len,
                lambda,
                l,
            } => {
                let scaled: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                let (value, _) = worst_case_grad(&scaled, *chain_len)?;
                l * lambda * lambda / CHAIN_SMOOTHNESS * value
            }
        })
    }

    /// Global exact gradient `∇f(x)`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check_dim(x)?;
        Ok(match &self.objective {
            Objective::Quadratic { l, .. } => x.iter().map(|v| l * v).collect(),
            Objective::HeterQuadratic { l, centers } => {
                let n = centers.len() as f64;
                let mut g = vec![0.0; x.len()];
                for c in centers {
                    for (gi, (xi, ci)) in g.iter_mut().zip(x.iter().zip(c)) {
                        *gi += l * (xi - ci) / n;
                    }
                }
                g
            }
            Objective::WorstCaseChain {
                chain_len,
                lambda,
                l,
            } => {
                let scaled: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                let (_, g) = worst_case_grad(&scaled, *chain_len)?;
                g.into_iter().map(|v| l * lambda / CHAIN_SMOOTHNESS * v).collect()
            }
        })
    }

    fn center(&self, worker: usize) -> Result<&[f64], ObjectiveError> {
        let Objective::HeterQuadratic { centers, .. } = &self.objective else {
            unreachable!("only called on heterogeneous objectives");
        };
        centers
            .get(worker)
            .map(Vec::as_slice)
            .ok_or(ObjectiveError::DimensionMismatch {
                expected: centers.len(),
                got: worker,
            })
    }

    /// Worker-local exact gradient; identical to [`Self::grad`] for
    /// homogeneous objectives.
    pub fn local_grad(&self, worker: usize, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        match &self.objective {
            Objective::HeterQuadratic { l, .. } => {
                self.check_dim(x)?;
                let c = self.center(worker)?;
                Ok(x.iter().zip(c).map(|(xi, ci)| l * (xi - ci)).collect())
            }
            _ => self.grad(x),
        }
    }

    /// Worker-local value; identical to [`Self::value`] for homogeneous
    /// objectives.
    pub fn local_value(&self, worker: usize, x: &[f64]) -> Result<f64, ObjectiveError> {
        match &self.objective {
            Objective::HeterQuadratic { l, .. } => {
                self.check_dim(x)?;
                let c = self.center(worker)?;
                Ok(0.5 * l * dist_sq(x, c))
            }
            _ => self.value(x),
        }
    }

    /// `f*` where it is known in closed form.
    pub fn optimal_value(&self) -> Option<f64> {
        match &self.objective {
            Objective::Quadratic { .. } => Some(0.0),
            Objective::HeterQuadratic { l, centers } => {
                let n = centers.len() as f64;
                let dim = centers[0].len();
                let mut mean = vec![0.0; dim];
                for c in centers {
                    for (m, ci) in mean.iter_mut().zip(c) {
                        *m += ci / n;
                    }
                }
                let mut acc = 0.0;
                for c in centers {
                    acc += 0.5 * l * dist_sq(&mean, c);
                }
                Some(acc / n)
            }
            Objective::WorstCaseChain { .. } => None,
        }
    }

    /// One stochastic gradient at `x` as seen by `worker`, unbiased with
    /// total variance bounded by the oracle's parameter.
    pub fn noisy_grad<R: Rng + ?Sized>(
        &self,
        worker: usize,
        x: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>, ObjectiveError> {
        let exact = self.local_grad(worker, x)?;
        match &self.oracle {
            OracleSpec::Exact => Ok(exact),
            OracleSpec::Gaussian { sigma_sq } => {
                if *sigma_sq == 0.0 {
                    return Ok(exact);
                }
                let per_coord = (sigma_sq / x.len() as f64).sqrt();
                let normal = Normal::new(0.0, per_coord).expect("finite std dev");
                Ok(exact.into_iter().map(|g| g + normal.sample(rng)).collect())
            }
            OracleSpec::ZeroOut { p } => zero_out_oracle(&exact, prog(x), *p, rng),
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Coordinate suppression: entries up to `progress` pass through; each entry
/// past it is multiplied by `ξ/p` with `ξ ~ Bernoulli(p)` i.i.d., which keeps
/// the output unbiased.
pub fn zero_out_oracle<R: Rng + ?Sized>(
    grad: &[f64],
    progress: usize,
    p: f64,
    rng: &mut R,
) -> Result<Vec<f64>, ObjectiveError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(ObjectiveError::InvalidProbability(p));
    }
    let bern = Bernoulli::new(p).expect("validated probability");
    Ok(grad
        .iter()
        .enumerate()
        .map(|(idx, g)| {
            if idx < progress || p == 1.0 {
                *g
            } else if bern.sample(rng) {
                g / p
            } else {
                0.0
            }
        })
        .collect())
}

/// Which adversarial scaling to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorstCaseSetup {
    Homogeneous,
    Heterogeneous,
}

/// A scaled chain problem together with the construction parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledWorstCase {
    pub problem: ProblemSpec,
    pub chain_len: usize,
    pub lambda: f64,
    /// Suppression probability of the zero-out oracle.
    pub zero_out_p: f64,
    /// Block count of the heterogeneous construction; `None` for the
    /// homogeneous one. The heterogeneous functions exist only to force the
    /// window dynamics and are not materialized as live objectives.
    pub blocks: Option<usize>,
}

/// Builds the scaled chain problem for the given constants.
///
/// Homogeneous: `T = ⌊ΔL/(2εl₁Δ⁰)⌋`, `λ = √(2ε)·l₁/L`, suppression
/// probability `p = min{2εγ∞²/σ², 1}`. Heterogeneous: `λ = √(4εl₁²/(L²S))`
/// with `S = n` blocks, `T = ⌊ΔL/(4εl₁Δ⁰)⌋`, and the base suppression
/// probability for a unit segment.
pub fn scaled_worst_case(
    consts: &ProblemConstants,
    setup: WorstCaseSetup,
) -> Result<ScaledWorstCase, ObjectiveError> {
    let (l, delta, eps, sigma_sq) = (consts.l, consts.delta, consts.epsilon, consts.sigma_sq);
    if !(l > 0.0 && delta > 0.0 && eps > 0.0 && sigma_sq >= 0.0) {
        return Err(ObjectiveError::InvalidObjective(
            "chain scaling needs positive l, delta, epsilon".into(),
        ));
    }
    if eps >= l * delta {
        return Err(ObjectiveError::EpsilonTooLarge(format!(
            "epsilon = {eps} must be below l * delta = {}",
            l * delta
        )));
    }
    match setup {
        WorstCaseSetup::Homogeneous => {
            let chain_len =
                floor_snapped_rel(delta * l / (2.0 * eps * CHAIN_SMOOTHNESS * CHAIN_GAP)) as usize;
            if chain_len == 0 {
                return Err(ObjectiveError::EpsilonTooLarge(format!(
                    "epsilon = {eps} leaves no room for a chain of length 1"
                )));
            }
            let lambda = (2.0 * eps).sqrt() * CHAIN_SMOOTHNESS / l;
            let p = if sigma_sq == 0.0 {
                1.0
            } else {
                (2.0 * eps * CHAIN_GRAD_INF * CHAIN_GRAD_INF / sigma_sq).min(1.0)
            };
            let problem = ProblemSpec::new(
                Objective::WorstCaseChain {
                    chain_len,
                    lambda,
                    l,
                },
                consts.clone(),
                OracleSpec::ZeroOut { p },
            );
            Ok(ScaledWorstCase {
                problem,
                chain_len,
                lambda,
                zero_out_p: p,
                blocks: None,
            })
        }
        WorstCaseSetup::Heterogeneous => {
            let blocks = consts.n.max(1);
            let lambda =
                (4.0 * eps * CHAIN_SMOOTHNESS * CHAIN_SMOOTHNESS / (l * l * blocks as f64)).sqrt();
            let chain_len =
                floor_snapped_rel(delta * l / (4.0 * eps * CHAIN_SMOOTHNESS * CHAIN_GAP)) as usize;
            if chain_len == 0 {
                return Err(ObjectiveError::EpsilonTooLarge(format!(
                    "epsilon = {eps} leaves no room for a chain of length 1"
                )));
            }
            let n_sq = (consts.n * consts.n) as f64;
            let p = if sigma_sq == 0.0 {
                1.0
            } else {
                (4.0 * eps * CHAIN_GRAD_INF * CHAIN_GRAD_INF * n_sq
                    / (sigma_sq * blocks as f64))
                    .min(1.0)
            };
            let problem = ProblemSpec::new(
                Objective::WorstCaseChain {
                    chain_len,
                    lambda,
                    l,
                },
                consts.clone(),
                OracleSpec::ZeroOut { p },
            );
            Ok(ScaledWorstCase {
                problem,
                chain_len,
                lambda,
                zero_out_p: p,
                blocks: Some(blocks),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prog_examples() {
        assert_eq!(prog(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(prog(&[1.0, 0.0, 2.0, 0.0]), 3);
        let mut x = vec![0.0; 20];
        x[19] = 1e-300;
        assert_eq!(prog(&x), 20);
    }

    #[test]
    fn psi_branch_values() {
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(-3.0), 0.0);
        assert!((psi(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(psi(0.5 + 1e-9), 0.0);
    }

    #[test]
    fn phi_at_zero_matches_quadrature() {
        // Simpson quadrature of √e·e^{−t²/2} over [−12, 0]; the truncated
        // tail is below 1e-30.
        let f = |t: f64| std::f64::consts::E.sqrt() * (-0.5 * t * t).exp();
        let (a, b, n) = (-12.0, 0.0, 24_000);
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        let oracle = acc * h / 3.0;
        let got = phi(0.0);
        assert!((got - oracle).abs() < 1e-12, "phi(0) = {got} vs {oracle}");
        assert!((got - 2.06637).abs() < 1e-5);
    }

    #[test]
    fn chain_gradient_at_zero() {
        let (_, g) = worst_case_grad(&[0.0; 6], 6).unwrap();
        assert!((g[0] + std::f64::consts::E.sqrt()).abs() < 1e-12, "{g:?}");
        assert!((g[0] + 1.64872).abs() < 1e-5);
        assert!(g[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn chain_gradient_matches_finite_differences() {
        let t = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        'outer: while checked < 100 {
            let m = rng.gen_range(0..=t);
            let mut x: Vec<f64> = vec![0.0; t];
            for xi in x.iter_mut().take(m) {
                *xi = rng.gen_range(-2.0..2.0);
            }
            // Stay away from the kinks of the bump function.
            for &xi in &x {
                if (2.0 * xi.abs() - 1.0).abs() <= 1e-3 {
                    continue 'outer;
                }
            }
            let (_, g) = worst_case_grad(&x, t).unwrap();
            let h = 1e-6;
            for j in 0..t {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let (fp, _) = worst_case_grad(&xp, t).unwrap();
                let (fm, _) = worst_case_grad(&xm, t).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let scale = g[j].abs().max(1.0);
                assert!(
                    (fd - g[j]).abs() / scale <= 1e-5,
                    "x = {x:?}, coord {j}: fd {fd} vs {g:?}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn chain_gradient_sampled_bounds() {
        let t = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let m = rng.gen_range(0..=t);
            let mut x = vec![0.0; t];
            for xi in x.iter_mut().take(m) {
                *xi = rng.gen_range(-2.0..2.0);
            }
            let (_, g) = worst_case_grad(&x, t).unwrap();
            let linf = g.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            assert!(linf <= CHAIN_GRAD_INF, "x={x:?} linf={linf}");
            assert!(prog(&g) <= prog(&x) + 1, "x={x:?} g={g:?}");
            if prog(&x) < t {
                assert!(norm_sq(&g).sqrt() > 1.0, "x={x:?} |g|={}", norm_sq(&g).sqrt());
            }
        }
    }

    #[test]
    fn chain_gap_one_sided_bound() {
        // F(0) minus the minimum over sampled points stays within the stated
        // per-coordinate gap budget (a one-sided check; the true infimum is
        // not computed).
        let t = 12;
        let (f0, _) = worst_case_grad(&vec![0.0; t], t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut sampled_min = f0;
        for _ in 0..20_000 {
            let x: Vec<f64> = (0..t).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (f, _) = worst_case_grad(&x, t).unwrap();
            sampled_min = sampled_min.min(f);
        }
        assert!(f0 - sampled_min <= CHAIN_GAP * t as f64);
    }

    #[test]
    fn scaled_worst_case_identity() {
        // lambda = 1 when sqrt(2 eps) = l / l1.
        let l = 2.0 * CHAIN_SMOOTHNESS;
        let eps = 2.0;
        let consts = ProblemConstants::new(l, 1000.0, 0.0, eps, 1);
        let swc = scaled_worst_case(&consts, WorstCaseSetup::Homogeneous).unwrap();
        assert!((swc.lambda - 1.0).abs() < 1e-12);
        assert_eq!(swc.zero_out_p, 1.0);
        let x = vec![0.3, -0.8, 0.0, 0.0];
        let mut padded = vec![0.0; swc.chain_len];
        padded[..x.len()].copy_from_slice(&x);
        let (raw, _) = worst_case_grad(&padded, swc.chain_len).unwrap();
        let scaled = swc.problem.value(&padded).unwrap();
        assert!((scaled - 2.0 * raw).abs() < 1e-12, "{scaled} vs {raw}");
    }

    #[test]
    fn scaled_worst_case_chain_length_formula() {
        let consts = ProblemConstants::new(1.0, 12.0 * 152.0 * 2.0, 0.0, 1.0, 1);
        let swc = scaled_worst_case(&consts, WorstCaseSetup::Homogeneous).unwrap();
        // delta*l/(2*eps*l1*gap) = 3648/3648 = 1.
        assert_eq!(swc.chain_len, 1);
        let consts = ProblemConstants::new(1.0, 12.0 * 152.0 * 2.0 * 2.5, 0.0, 1.0, 1);
        let swc = scaled_worst_case(&consts, WorstCaseSetup::Homogeneous).unwrap();
        assert_eq!(swc.chain_len, 2);
    }

    #[test]
    fn scaled_worst_case_rejects_large_epsilon() {
        let consts = ProblemConstants::new(1.0, 1.0, 0.0, 2.0, 1);
        assert!(matches!(
            scaled_worst_case(&consts, WorstCaseSetup::Homogeneous),
            Err(ObjectiveError::EpsilonTooLarge(_))
        ));
    }

    #[test]
    fn zero_out_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = vec![1.0, 1.0];
        let out = zero_out_oracle(&g, 2, 0.3, &mut rng).unwrap();
        assert_eq!(out, g);
        let out = zero_out_oracle(&g, 0, 1.0, &mut rng).unwrap();
        assert_eq!(out, g);
        assert!(matches!(
            zero_out_oracle(&g, 0, 0.0, &mut rng),
            Err(ObjectiveError::InvalidProbability(_))
        ));
    }

    #[test]
    fn zero_out_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = vec![0.0, 2.0];
        let (p, n) = (0.5, 100_000);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let out = zero_out_oracle(&g, 0, p, &mut rng).unwrap();
            sum += out[1];
            sum_sq += out[1] * out[1];
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        // Per-draw variance of coordinate 2 is 4 (1−p)/p = 4; the mean's SE
        // is sqrt(4/n).
        let se = (4.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() <= 4.0 * se, "mean {mean}");
        assert!((var - 4.0).abs() / 4.0 <= 0.05, "var {var}");
    }

    #[test]
    fn noisy_grad_exact_and_gaussian() {
        let consts = ProblemConstants::new(1.0, 1.0, 0.0, 0.1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let problem = ProblemSpec::new(
            Objective::Quadratic { l: 1.0, dim: 2 },
            consts.clone(),
            OracleSpec::Exact,
        );
        let x = vec![0.4, -1.5];
        assert_eq!(problem.noisy_grad(0, &x, &mut rng).unwrap(), x);
        let silent = ProblemSpec::new(
            Objective::Quadratic { l: 1.0, dim: 2 },
            consts.clone(),
            OracleSpec::Gaussian { sigma_sq: 0.0 },
        );
        assert_eq!(silent.noisy_grad(0, &x, &mut rng).unwrap(), x);
        let noisy = ProblemSpec::new(
            Objective::Quadratic { l: 1.0, dim: 2 },
            consts,
            OracleSpec::Gaussian { sigma_sq: 4.0 },
        );
        let trials = 100_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let g = noisy.noisy_grad(0, &x, &mut rng).unwrap();
            acc += dist_sq(&g, &x);
        }
        let mean_dev = acc / trials as f64;
        assert!((mean_dev - 4.0).abs() / 4.0 <= 0.05, "E|g-∇f|² = {mean_dev}");
    }

    #[test]
    fn heterogeneous_split_reconstructs_mean() {
        let centers = vec![vec![1.0, 0.0], vec![-1.0, 2.0], vec![0.5, 0.5]];
        let problem = ProblemSpec::new(
            Objective::HeterQuadratic {
                l: 2.0,
                centers: centers.clone(),
            },
            ProblemConstants::new(2.0, 1.0, 0.0, 0.1, 3),
            OracleSpec::Exact,
        );
        let x = vec![0.3, -0.7];
        let mut local_sum = 0.0;
        let mut local_grad_sum = vec![0.0; 2];
        for w in 0..3 {
            local_sum += problem.local_value(w, &x).unwrap();
            for (acc, g) in local_grad_sum
                .iter_mut()
                .zip(problem.local_grad(w, &x).unwrap())
            {
                *acc += g;
            }
        }
        let f = problem.value(&x).unwrap();
        assert!((local_sum - 3.0 * f).abs() < 1e-12);
        let g = problem.grad(&x).unwrap();
        for (s, gi) in local_grad_sum.iter().zip(&g) {
            assert!((s - 3.0 * gi).abs() < 1e-12);
        }
        // Optimum sits at the center mean.
        let fstar = problem.optimal_value().unwrap();
        let mean = vec![1.0 / 6.0, 2.5 / 3.0];
        assert!((problem.value(&mean).unwrap() - fstar).abs() < 1e-12);
    }
}
