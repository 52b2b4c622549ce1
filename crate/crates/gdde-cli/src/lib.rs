//! Experiment harness for the [`gdde`] optimization library.
//!
//! The harness runs (algorithm × seed) batches over analytic benchmarks or
//! reservoir cases described by a TOML configuration, writes per-run trace
//! CSVs, best-so-far convergence matrices, JSON-lines diagnostics, and a JSON
//! summary, and compares finished output directories checkpoint by
//! checkpoint. Identical configurations produce byte-identical outputs
//! regardless of worker count.

pub mod compare;
pub mod config;
pub mod problem;
pub mod runner;

pub use compare::{compare_dir, render_compare_table, CompareReport};
pub use config::{load_config, parse_config, show_defaults_text, Algorithm, ExperimentConfig};
pub use problem::ResolvedProblem;
pub use runner::{render_summary_table, run_experiment, AlgorithmSummary, ExperimentSummary};

use std::fmt;

/// Harness failure classes, mapped to process exit codes.
#[derive(Debug)]
pub enum HarnessError {
    /// Bad configuration or inconsistent inputs (exit code 1).
    Config(String),
    /// Failure while executing runs or writing outputs (exit code 2).
    Runtime(String),
}

impl HarnessError {
    /// Process exit code for this failure class (success is 0).
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(msg) => write!(f, "config error: {msg}"),
            HarnessError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

pub type Result<T> = std::result::Result<T, HarnessError>;
