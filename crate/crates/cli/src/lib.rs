//! Scenario runner: reads a TOML scenario, synthesizes and certifies the
//! feedback scheme, runs the dynamics and writes a manifest, a CSV time
//! series and a JSON summary.

pub mod config;
pub mod runner;

use std::fmt;

pub use config::{ChannelSpec, Gate, Resolved, Scenario, ScenarioConfig};
pub use runner::{certify, run_scenario, Manifest, Summary};

/// Failure classes, each with its own process exit code.
#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Config(String),
    Certificate(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Certificate(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Certificate(m) => write!(f, "certificate failure: {m}"),
            CliError::Numerical(m) => write!(f, "numerical integrity failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fbqec::Error> for CliError {
    fn from(e: fbqec::Error) -> Self {
        use fbqec::Error as E;
        match e {
            E::NotAnticommuting { .. } | E::NonHermitian { .. } | E::KnillLaflamme { .. } | E::NotInvolution { .. } => {
                CliError::Certificate(e.to_string())
            }
            E::NumericalIntegrity { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
