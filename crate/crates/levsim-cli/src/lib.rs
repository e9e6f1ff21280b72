//! Library half of the levsim command line tool: scenario parsing, the
//! error-to-exit-code mapping, and byte-stable report emission. The binary
//! in `main.rs` wires these into subcommands; tests use this crate to read
//! emitted artifacts back.

use thiserror::Error;

use levsim::estimate::EstimateError;
use levsim::isolation::IsolationError;
use levsim::series::SeriesError;
use levsim::sim::SimError;

pub mod report;
pub mod scenario;

/// Failure classes with fixed exit codes: 2 for configuration problems,
/// 3 for analysis that ran and failed, 1 for plain I/O.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Analysis(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            // The run itself failed; the configuration was legal.
            SimError::ExciteTimeout { .. }
            | SimError::NonFinite { .. }
            | SimError::NotConverged { .. } => CliError::Analysis(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<IsolationError> for CliError {
    fn from(e: IsolationError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::Io(inner) => CliError::Io(inner.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Analysis("x".into()).exit_code(), 3);
        assert_eq!(CliError::Io("x".into()).exit_code(), 1);
    }

    #[test]
    fn excite_timeout_is_an_analysis_failure() {
        let err: CliError =
            SimError::ExciteTimeout { elapsed_s: 1.0, amplitude_m: 1e-9, target_m: 2e-9 }.into();
        assert_eq!(err.exit_code(), 3);
        let err: CliError = SimError::InvalidConfig("bad".into()).into();
        assert_eq!(err.exit_code(), 2);
    }
}
