use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::geometry::Interval;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("axis {axis} is out of range for dimension {dim}")]
    InvalidAxis { axis: usize, dim: usize },

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("cut {index} does not cross the interior of its cell")]
    CutMissesCell { index: usize },

    #[error("decompositions have different parents")]
    ParentMismatch,

    #[error("hyperplane x[{axis}] = {offset} is not aligned with the depth-{depth} grid")]
    NotGridAligned { axis: usize, offset: f64, depth: u32 },

    #[error("predicate does not hold on the starting set")]
    PredicateFails,

    #[error("semi-distributivity violated at step {step}: neither half of {cell} satisfies the predicate")]
    SemiDistributivity { step: usize, cell: Interval },

    #[error("no admissible cell at depth {depth} inside the ball of radius {delta}")]
    NoAdmissibleCell { delta: f64, depth: u32 },

    #[error("integrand is unbounded on {cell}")]
    Unbounded { cell: Interval },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid set-function spec `{spec}`: {reason}")]
    SetFunctionSpec { spec: String, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
