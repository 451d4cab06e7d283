//! Experiment runner for the fracthj solvers.
//!
//! One JSON config per experiment; results go to CSV files plus a
//! `manifest.json` that echoes the config and the library versions.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

use std::fmt;

use serde_json::json;

pub use config::{ExperimentConfig, Kind};
pub use run::{convergence_study, run, RunOutcome};

/// Failure classes, each with its own exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    NonConvergence(String),
    Stability(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Stability(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config error",
            CliError::NonConvergence(_) => "solver non-convergence",
            CliError::Stability(_) => "stability abort",
            CliError::Io(_) => "io error",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::NonConvergence(m) | CliError::Stability(m) | CliError::Io(m) => m,
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> serde_json::Value {
        json!({ "error": self.class(), "exit_code": self.exit_code(), "message": self.message() })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.class(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<fracthj_core::Error> for CliError {
    fn from(e: fracthj_core::Error) -> Self {
        use fracthj_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidArgument(_) | E::GridMismatch(_) | E::UnsupportedGrid(_) => CliError::Config(msg),
            E::Stability { .. } | E::StepRestriction { .. } => CliError::Stability(msg),
            E::NonContraction { .. } => CliError::NonConvergence(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
