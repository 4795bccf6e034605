use thiserror::Error;

/// Errors produced by network handling, constructions and measurements.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected} coordinates, got {got}")]
    InputShape { expected: usize, got: usize },

    #[error("cannot compose: outer network takes {outer_input} inputs, inner produces {inner_output}")]
    Composition {
        outer_input: usize,
        inner_output: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid network: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("construction infeasible: best error {achieved:e} exceeds budget {budget:e} at delta {delta:e}")]
    ConstructionInfeasible {
        achieved: f64,
        budget: f64,
        delta: f64,
    },

    #[error("Hölder certificate violated: {0}")]
    CertificateViolation(String),

    #[error("configuration exceeds supported resolution: {0}")]
    Resolution(String),

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unknown target family `{0}`")]
    Registry(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
