use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("flattening is degenerate: min d3phi = {min_d3phi:.4e} below threshold {threshold:.4e}")]
    DegenerateJacobian { min_d3phi: f64, threshold: f64 },

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("sheet is not transverse: {0}")]
    NonTransverse(String),

    #[error("sheet is degenerate: (b- x b+)_3 = {0:.3e}")]
    DegenerateSheet(f64),

    #[error("symbol evaluated at xi = 0 where it is not smooth")]
    SingularFrequency,

    #[error("aliasing: content pushed to modes beyond the representable band ({0})")]
    Aliasing(String),

    #[error("iterative solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("data must have zero mean on the interface, got mean {0:.3e}")]
    NotMeanZero(f64),

    #[error("time step {dt:.3e} violates the stability limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("insufficient time history: need {needed} levels, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
