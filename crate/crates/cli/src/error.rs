use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Run(#[from] gfe_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The machine-readable body of `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
    /// Data columns implicated by the failure.
    pub columns: Vec<String>,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let (kind, columns) = match self {
            CliError::Config(_) => ("config".to_string(), Vec::new()),
            CliError::Output { .. } => ("output".to_string(), Vec::new()),
            CliError::Run(e) => {
                let cols = match e {
                    gfe_core::Error::NoWithinVariation { column } => vec![column.clone()],
                    gfe_core::Error::SingularDesign { columns } => columns.clone(),
                    _ => Vec::new(),
                };
                (e.kind().to_string(), cols)
            }
        };
        ErrorReport {
            exit_code: self.exit_code(),
            kind,
            message: self.to_string(),
            columns,
        }
    }
}
