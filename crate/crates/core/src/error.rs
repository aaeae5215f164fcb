use thiserror::Error;

use crate::validators::PropertyReport;

#[derive(Debug, Error)]
pub enum Error {
    /// A node or vtree reference that does not exist, or a malformed DAG.
    #[error("structural error: {0}")]
    Structural(String),

    /// Caller-supplied data is unusable (bad assignment, bad variable set, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A required representation property does not hold.
    #[error("property violation: {}", .0.summary())]
    Property(Box<PropertyReport>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("refusing exhaustive enumeration over {vars} variables (cap {cap})")]
    CapExceeded { vars: usize, cap: usize },

    /// The simulation hit a state its preconditions should have ruled out.
    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn property(report: PropertyReport) -> Self {
        Error::Property(Box::new(report))
    }
}
