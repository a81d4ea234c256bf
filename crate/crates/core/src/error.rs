use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate (unit, period) key ({unit}, {period}) at line {line}")]
    DuplicateKey { unit: i64, period: i64, line: u64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular design: columns {columns:?} are linearly dependent")]
    SingularDesign { columns: Vec<String> },

    #[error("regressor `{column}` has no within-unit variation")]
    NoWithinVariation { column: String },

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DuplicateKey { .. } => "duplicate_key",
            Error::Schema(_) => "schema",
            Error::EmptyInput(_) => "empty_input",
            Error::Domain(_) => "domain",
            Error::Precondition(_) => "precondition",
            Error::SingularDesign { .. } => "singular_design",
            Error::NoWithinVariation { .. } => "no_within_variation",
            Error::Spec(_) => "spec",
            Error::Solver(_) => "solver",
            Error::Optimizer(_) => "optimizer",
        }
    }
}
