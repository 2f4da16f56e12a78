//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate potential: values {0} and {1} coincide")]
    DegeneratePotential(String, String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0} vs {1} variables")]
    DimensionMismatch(usize, usize),

    #[error("evaluation at z with a zero component (index {0})")]
    ZeroVariable(usize),

    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),

    #[error("Gershgorin discs overlap: {0}")]
    DiscOverlap(String),

    #[error("ambiguous eigenvalue-to-cell assignment: {0}")]
    AmbiguousAssignment(String),

    #[error("diagonalizer is singular: {0}")]
    SingularQ(String),

    #[error("hopping part has nonzero diagonal residual at cell index {0}")]
    NonzeroDiagonalResidual(usize),

    #[error("combinatorial blowup: {0}")]
    CombinatorialBlowup(String),

    #[error("invariant violation at (n={n}, r={r}, j={j}): {detail}")]
    InvariantViolation {
        n: usize,
        r: usize,
        j: usize,
        detail: String,
    },

    #[error("refinement did not converge: {0}")]
    NoConvergence(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("coupling inadmissible: {0}")]
    InadmissibleCoupling(String),

    #[error("insufficient points: need {need}, got {got}")]
    InsufficientPoints { need: usize, got: usize },
}
