//! Command-line front end for `re-are-core`: one command, one output file.

pub mod args;
pub mod convergence;
pub mod run;

use serde_json::json;

pub use args::{Cli, Command, Format};
pub use convergence::{
    emit_convergence_csv, parse_convergence_csv, write_convergence_csv, ConvergenceRow,
    CONVERGENCE_HEADER,
};
pub use run::{run, Artifact, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{operation}: {message}")]
    Computation { operation: String, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Computation { .. } | CliError::Io(_) => 1,
        }
    }

    /// Machine-readable record written to stderr.
    pub fn record(&self, command: Option<&str>) -> serde_json::Value {
        let (kind, operation, message) = match self {
            CliError::Usage(m) => ("usage", None, m.clone()),
            CliError::Computation { operation, message } => {
                ("computation", Some(operation.clone()), message.clone())
            }
            CliError::Io(m) => ("io", None, m.clone()),
        };
        json!({
            "schema": SCHEMA_VERSION,
            "error": {
                "kind": kind,
                "command": command,
                "operation": operation,
                "message": message,
            }
        })
    }
}
