//! Experiment harness for the regularized backward solvers: configuration,
//! Monte Carlo trials, rate sweeps, reports and the command line.

pub mod check;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
