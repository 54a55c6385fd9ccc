//! Experiment configuration: JSON schema, validation, and overrides.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use gradtime_core::bound_calc::{BoundKind, ProblemConstants, UniversalConstants};
use gradtime_core::lowerbound_lab::TailBoundKind;
use gradtime_core::objectives::{Objective, OracleSpec};
use gradtime_core::optimizers::Method;
use gradtime_core::power_model::PowerProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("bad override {0:?}: expected key=value with a dotted key")]
    BadOverride(String),
}

/// What the runner should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Compute an implicit time-complexity sequence.
    Bound,
    /// Simulate a method over seeds.
    Simulate,
    /// Run the lower-bound laboratory.
    Adversary,
    /// Run the verification suite.
    Verify,
}

/// A worker profile, possibly randomized. Randomized profiles are sampled
/// into a plain trace per seed before any simulation, so downstream code
/// sees deterministic powers only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTraceSpec {
    pub mean: f64,
    pub jitter: f64,
    pub step: f64,
    pub samples: usize,
}

impl RandomTraceSpec {
    pub fn materialize(&self, seed: u64, worker: usize) -> PowerProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(0x1000 + worker as u64);
        let sample_times = (0..self.samples).map(|k| k as f64 * self.step).collect();
        let sample_powers = (0..self.samples)
            .map(|_| (self.mean + self.jitter * rng.gen_range(-1.0..1.0)).max(0.0))
            .collect();
        PowerProfile::Trace {
            sample_times,
            sample_powers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Fixed(PowerProfile),
    Random(RandomTraceSpec),
}

// Hand-rolled so that `kind: random_trace` routes to the random spec and
// anything else to the core profile enum, with that enum's own error text.
impl<'de> Deserialize<'de> for ProfileConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        let kind = value.get("kind").and_then(|k| k.as_str()).unwrap_or("");
        if kind == "random_trace" {
            let mut spec = value.clone();
            spec.as_object_mut().map(|m| m.remove("kind"));
            let spec: RandomTraceSpec =
                serde_json::from_value(spec).map_err(serde::de::Error::custom)?;
            Ok(ProfileConfig::Random(spec))
        } else {
            let profile: PowerProfile =
                serde_json::from_value(value).map_err(serde::de::Error::custom)?;
            Ok(ProfileConfig::Fixed(profile))
        }
    }
}

impl ProfileConfig {
    pub fn materialize(&self, seed: u64, worker: usize) -> PowerProfile {
        match self {
            ProfileConfig::Fixed(p) => p.clone(),
            ProfileConfig::Random(spec) => spec.materialize(seed, worker),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeConfig {
    Nonconvex,
    ConvexNonsmooth,
    ConvexSmooth,
}

impl From<RegimeConfig> for gradtime_core::bound_calc::Regime {
    fn from(r: RegimeConfig) -> Self {
        match r {
            RegimeConfig::Nonconvex => Self::Nonconvex,
            RegimeConfig::ConvexNonsmooth => Self::ConvexNonsmooth,
            RegimeConfig::ConvexSmooth => Self::ConvexSmooth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub name: Method,
    #[serde(default = "default_regime")]
    pub regime: RegimeConfig,
    /// Stepsize override.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Batch/target override.
    #[serde(default)]
    pub batch: Option<u64>,
    /// Iteration budget override.
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub stop_at_prog: Option<usize>,
}

fn default_regime() -> RegimeConfig {
    RegimeConfig::Nonconvex
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub objective: Objective,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub chunk: u64,
    pub windows: usize,
    /// Blocks to run through the Markov process per seed.
    #[serde(default)]
    pub markov_blocks: Option<u64>,
    /// Coordinates per Markov run; defaults to the window count.
    #[serde(default)]
    pub chain_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    /// Suppression probability of the gating draws.
    pub p: f64,
    pub chain_len: usize,
    #[serde(default)]
    pub tail_checks: Vec<TailBoundKind>,
    #[serde(default)]
    pub tail_trials: Option<u64>,
    #[serde(default)]
    pub window: Option<WindowConfig>,
}

/// Root experiment configuration. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub profiles: Vec<ProfileConfig>,
    pub constants: ProblemConstants,
    #[serde(default)]
    pub universal: Option<UniversalConstants>,
    #[serde(default)]
    pub bound: Option<BoundConfig>,
    #[serde(default)]
    pub method: Option<MethodConfig>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub adversary: Option<AdversaryConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    /// The seed list: explicit `seeds`, or `trials` consecutive seeds from
    /// `seed`.
    pub fn seed_list(&self) -> Vec<u64> {
        if let Some(seeds) = &self.seeds {
            return seeds.clone();
        }
        let trials = self.trials.unwrap_or(1).max(1);
        (0..trials).map(|k| self.seed.wrapping_add(k)).collect()
    }

    /// Concrete worker profiles for one seed.
    pub fn profiles_for_seed(&self, seed: u64) -> Vec<PowerProfile> {
        self.profiles
            .iter()
            .enumerate()
            .map(|(w, p)| p.materialize(seed, w))
            .collect()
    }

    pub fn universal(&self) -> UniversalConstants {
        self.universal.unwrap_or_default()
    }

    /// Validates the whole config, reporting every violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.profiles.is_empty() {
            problems.push("profiles: need at least one worker".to_string());
        }
        for (i, p) in self.profiles.iter().enumerate() {
            match p {
                ProfileConfig::Fixed(profile) => {
                    if let Err(e) = profile.validate() {
                        problems.push(format!("profiles[{i}]: {e}"));
                    }
                }
                ProfileConfig::Random(spec) => {
                    if !(spec.mean >= 0.0) || !(spec.step > 0.0) || spec.samples == 0 {
                        problems.push(format!(
                            "profiles[{i}]: random trace needs mean >= 0, step > 0, samples >= 1"
                        ));
                    }
                }
            }
        }
        if let Err(e) = self.constants.validate() {
            problems.push(format!("constants: {e}"));
        }
        if self.constants.n != self.profiles.len() {
            problems.push(format!(
                "constants: n = {} does not match {} profiles",
                self.constants.n,
                self.profiles.len()
            ));
        }
        match self.experiment {
            ExperimentKind::Bound => {
                if self.bound.is_none() {
                    problems.push("bound: required for bound experiments".to_string());
                }
            }
            ExperimentKind::Simulate => {
                if self.method.is_none() {
                    problems.push("method: required for simulate experiments".to_string());
                }
                if self.problem.is_none() {
                    problems.push("problem: required for simulate experiments".to_string());
                }
            }
            ExperimentKind::Adversary => {
                if self.adversary.is_none() {
                    problems.push("adversary: required for adversary experiments".to_string());
                }
            }
            ExperimentKind::Verify => {}
        }
        if let Some(p) = &self.problem {
            if let Err(e) = p.objective.validate() {
                problems.push(format!("problem.objective: {e}"));
            }
            if let Err(e) = p.oracle.validate() {
                problems.push(format!("problem.oracle: {e}"));
            }
            if let Some(x0) = &p.x0 {
                if x0.len() != p.objective.dim() {
                    problems.push(format!(
                        "problem.x0: length {} does not match objective dimension {}",
                        x0.len(),
                        p.objective.dim()
                    ));
                }
            }
        }
        if let Some(m) = &self.method {
            if let Some(g) = m.gamma {
                if !(g > 0.0) {
                    problems.push(format!("method.gamma: must be positive, got {g}"));
                }
            }
            if m.batch == Some(0) {
                problems.push("method.batch: must be at least 1".to_string());
            }
            if m.iterations == Some(0) {
                problems.push("method.iterations: must be at least 1".to_string());
            }
        }
        if let Some(a) = &self.adversary {
            if !(a.p > 0.0 && a.p <= 1.0) {
                problems.push(format!("adversary.p: must lie in (0, 1], got {}", a.p));
            }
            if a.chain_len == 0 {
                problems.push("adversary.chain_len: must be at least 1".to_string());
            }
            if let Some(w) = &a.window {
                if w.chunk == 0 || w.windows == 0 {
                    problems.push("adversary.window: chunk and windows must be >= 1".to_string());
                }
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                problems.push(format!("horizon: must be positive, got {h}"));
            }
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            problems.push("seeds: list must not be empty when present".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}

/// Applies `key=value` overrides onto the raw JSON before deserialization.
/// Keys are dotted paths (`constants.epsilon=0.05`); values parse as JSON
/// scalars with a string fallback.
pub fn apply_overrides(
    mut value: serde_json::Value,
    overrides: &[String],
) -> Result<serde_json::Value, ConfigError> {
    for entry in overrides {
        let Some((key, raw)) = entry.split_once('=') else {
            return Err(ConfigError::BadOverride(entry.clone()));
        };
        if key.is_empty() {
            return Err(ConfigError::BadOverride(entry.clone()));
        }
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let mut slot = &mut value;
        for part in key.split('.') {
            let index = part.parse::<usize>().ok();
            slot = match (index, &mut *slot) {
                (Some(i), serde_json::Value::Array(items)) => items
                    .get_mut(i)
                    .ok_or_else(|| ConfigError::BadOverride(entry.clone()))?,
                (_, serde_json::Value::Object(map)) => map
                    .entry(part.to_string())
                    .or_insert(serde_json::Value::Null),
                _ => return Err(ConfigError::BadOverride(entry.clone())),
            };
        }
        *slot = parsed;
    }
    Ok(value)
}

/// Loads, overrides, parses, and validates a config file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_config_str(&text, overrides)
}

/// [`load_config`] from an in-memory string.
pub fn load_config_str(
    text: &str,
    overrides: &[String],
) -> Result<ExperimentConfig, ConfigError> {
    // Typed parse first: this is what rejects duplicate and unknown keys,
    // which a detour through a JSON value map would silently collapse.
    let direct: ExperimentConfig = serde_json::from_str(text)?;
    let config = if overrides.is_empty() {
        direct
    } else {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let raw = apply_overrides(raw, overrides)?;
        serde_json::from_value(raw)?
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_BOUND: &str = r#"{
        "experiment": "bound",
        "profiles": [{"kind": "constant", "v": 1.0}, {"kind": "constant", "v": 2.0}],
        "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 4.0, "epsilon": 0.5, "n": 2},
        "bound": {"kind": "rennala_upper"}
    }"#;

    #[test]
    fn minimal_bound_config_parses() {
        let config = load_config_str(MINIMAL_BOUND, &[]).unwrap();
        assert_eq!(config.experiment, ExperimentKind::Bound);
        assert_eq!(config.seed_list(), vec![1]);
        assert_eq!(config.profiles_for_seed(1).len(), 2);
    }

    #[test]
    fn negative_variance_names_the_field() {
        let bad = MINIMAL_BOUND.replace("\"sigma_sq\": 4.0", "\"sigma_sq\": -1.0");
        let err = load_config_str(&bad, &[]).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("sigma_sq"), "{text}");
    }

    #[test]
    fn duplicate_key_is_a_parse_error() {
        let dup = MINIMAL_BOUND.replace(
            "\"experiment\": \"bound\",",
            "\"experiment\": \"bound\", \"experiment\": \"bound\",",
        );
        assert!(matches!(
            load_config_str(&dup, &[]),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let unknown = MINIMAL_BOUND.replace(
            "\"experiment\": \"bound\",",
            "\"experiment\": \"bound\", \"extra\": 1,",
        );
        assert!(load_config_str(&unknown, &[]).is_err());
    }

    #[test]
    fn violations_are_all_reported() {
        let bad = r#"{
            "experiment": "simulate",
            "profiles": [{"kind": "constant", "v": -1.0}],
            "constants": {"l": 0.0, "delta": 1.0, "sigma_sq": 1.0, "epsilon": 0.5, "n": 3}
        }"#;
        let err = load_config_str(bad, &[]).unwrap_err();
        let ConfigError::Invalid(problems) = err else {
            panic!("expected validation error, got {err}");
        };
        assert!(problems.len() >= 4, "{problems:?}");
    }

    #[test]
    fn overrides_rewrite_nested_fields() {
        let config = load_config_str(
            MINIMAL_BOUND,
            &[
                "constants.epsilon=0.25".to_string(),
                "seed=9".to_string(),
                "profiles.1.v=3.5".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(config.constants.epsilon, 0.25);
        assert_eq!(config.seed, 9);
        match &config.profiles[1] {
            ProfileConfig::Fixed(PowerProfile::Constant { v }) => assert_eq!(*v, 3.5),
            other => panic!("unexpected profile {other:?}"),
        }
    }

    #[test]
    fn random_trace_materializes_deterministically() {
        let text = r#"{
            "experiment": "bound",
            "profiles": [{"kind": "random_trace", "mean": 2.0, "jitter": 0.5, "step": 1.0, "samples": 8}],
            "constants": {"l": 1.0, "delta": 1.0, "sigma_sq": 0.0, "epsilon": 0.5, "n": 1},
            "bound": {"kind": "rennala_upper"}
        }"#;
        let config = load_config_str(text, &[]).unwrap();
        let a = config.profiles_for_seed(7);
        let b = config.profiles_for_seed(7);
        let c = config.profiles_for_seed(8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        match &a[0] {
            PowerProfile::Trace { sample_powers, .. } => {
                assert!(sample_powers.iter().all(|p| *p >= 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
