use thiserror::Error;

use crate::continuity::ContinuityFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node {node} (t = {t})")]
    NonFinite { node: usize, t: f64 },

    #[error("coefficient not positive at node {node} (t = {t}, value = {value})")]
    Domain { node: usize, t: f64, value: f64 },

    #[error("positivity lost at node {node} (t = {t}): metric ratio {ratio}")]
    PositivityLost { node: usize, t: f64, ratio: f64 },

    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),

    #[error("quotient map does not preserve the lattice: {0}")]
    NotLatticePreserving(String),

    #[error("negative cross-section eigenvalue {0}")]
    NegativeEigenvalue(f64),

    #[error("spectrum cut-off mu_max = {have} does not cover the interval; need at least {need}")]
    InsufficientSpectrum { have: f64, need: f64 },

    #[error("singular system at row {row}")]
    Singular { row: usize },

    #[error("mode (j = {j}, dual = {dual:?}) is not invariant under the quotient")]
    NonInvariantMode { j: i64, dual: Vec<i64> },

    #[error("Newton iteration failed at s = {s}: {reason}")]
    NewtonDiverged { s: f64, reason: String },

    #[error(transparent)]
    Continuity(#[from] Box<ContinuityFailure>),

    #[error("inverse iteration did not converge after {0} steps")]
    NotConverged(usize),

    #[error("bump amplitude search exceeded {0}")]
    RhoSearchExhausted(f64),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
