use thiserror::Error;

/// Errors produced while building settings, covariances and approximants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid must contain at least one point")]
    EmptyGrid,

    #[error("grid is not strictly increasing at index {index} ({prev} >= {next})")]
    NonMonotoneGrid { index: usize, prev: f64, next: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("degree {degree} out of range (allowed {min}..={max})")]
    DegreeOutOfRange {
        degree: usize,
        min: usize,
        max: usize,
    },

    #[error("evaluation point {t0} lies outside [{lo}, {hi}] and extrapolation is disabled")]
    ExtrapolationNotAllowed { t0: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("singular system: {0}")]
    SingularSystem(&'static str),

    #[error("Gram-Schmidt breakdown at degree {degree} (relative norm {relative_norm:e})")]
    GramSchmidtBreakdown { degree: usize, relative_norm: f64 },

    #[error("solution routes disagree: max deviation {deviation:e} exceeds {tolerance:e}")]
    RouteDisagreement { deviation: f64, tolerance: f64 },

    #[error("stencil of width {width} does not fit a periodic sequence of length {len}")]
    StencilTooWide { width: usize, len: usize },

    #[error("sequence length {len} is not a multiple of covariance block period {block}")]
    BlockMismatch { len: usize, block: usize },

    #[error("epsilon {epsilon} outside the open interval ({lo}, {hi})")]
    EpsilonOutOfRange { epsilon: f64, lo: f64, hi: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
