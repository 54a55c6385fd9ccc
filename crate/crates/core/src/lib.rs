//! Virtual-time simulation and analysis of parallel and asynchronous
//! stochastic gradient methods under arbitrary time-varying worker
//! computation powers.
//!
//! The crate is organized around a small set of pieces:
//!
//! * [`power_model`]: per-worker computation powers `v_i(t)`, their work
//!   integrals `V_i(t)`, gradient counting, and generalized inverses.
//! * [`bound_calc`]: implicit time-complexity sequences driven by threshold
//!   rules, closed-form example complexities, and baseline complexities.
//! * [`objectives`]: test objectives and stochastic-gradient oracles,
//!   including the worst-case chain function and the Bernoulli zero-out
//!   oracle.
//! * [`sim_engine`]: an event-driven virtual-clock executor of the
//!   time-multiple-oracles interaction model.
//! * [`optimizers`]: algorithm drivers (batch-collecting SGD variants,
//!   minibatch and asynchronous baselines, accelerated updates).
//! * [`lowerbound_lab`]: Monte Carlo verification of the lower-bound
//!   machinery (geometric gating, concentration checks, window parameters,
//!   the Markov window process).
//! * [`report`]: stable CSV serialization of results.

pub mod bound_calc;
pub mod lowerbound_lab;
pub(crate) mod numeric;
pub mod objectives;
pub mod optimizers;
pub mod power_model;
pub mod report;
pub mod sim_engine;

pub use power_model::{PowerProfile, TrendSpec, WorkValue};
