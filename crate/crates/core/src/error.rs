use thiserror::Error;

/// Errors from device models and the analyses built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("capacity error: {what} exceeds the limit of {limit}")]
    Capacity { what: String, limit: usize },
}

/// Errors from loading or constructing a cell library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation: {}", .0.join("; "))]
    Schema(Vec<String>),
    #[error("invariant violation: {}", .0.join("; "))]
    Invariant(Vec<String>),
    #[error("cell {name} ({variant}) not found in library")]
    MissingCell { name: String, variant: String },
}

/// Errors raised by the analysis engine and optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("instance {instance}: {source}")]
    Instance {
        instance: String,
        #[source]
        source: Box<AnalysisError>,
    },
    #[error("missing activity for net {0}")]
    MissingActivity(String),
    #[error("missing probability for primary input {0}")]
    MissingProbability(String),
    #[error("netlist is not a DAG: {0}")]
    Cycle(String),
}
