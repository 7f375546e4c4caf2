use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("derivative order {requested} unsupported (operator provides up to {available})")]
    UnsupportedOrder { requested: usize, available: usize },

    #[error("point outside domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("certificate undefined on an unbounded set")]
    UnboundedCertificate,

    #[error("shifted system singular at lambda = {lambda}")]
    SingularShift { lambda: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient data: {usable} usable points, need {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("no convergence after {iterations} iterations (best certificate {certificate:e})")]
    NonConvergence {
        iterations: usize,
        certificate: f64,
        best: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
