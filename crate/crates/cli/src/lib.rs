//! Config-driven experiment runner: configuration schema, execution, and the
//! verification suite.

pub mod config;
pub mod runner;
pub mod verify;
