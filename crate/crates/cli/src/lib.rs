//! Scenario configuration, sweeps, Monte Carlo runs and the verification
//! battery behind the `ccsim` binary.

pub mod config;
pub mod error;
pub mod harness;
pub mod oracles;
pub mod output;
pub mod scenario;
pub mod verify;

pub use error::{CliError, Result};
