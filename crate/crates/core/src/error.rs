use thiserror::Error;

use crate::constrained_search::SearchResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {found} samples but the grid has {expected} points")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density is negative or non-finite at sample {index} (value {value})")]
    NegativeDensity { index: usize, value: f64 },

    #[error("recorded electron count {recorded} disagrees with the quadrature {integrated}")]
    ElectronCountMismatch { recorded: f64, integrated: f64 },

    #[error("domain too small: boundary density {boundary:e} exceeds 1e-12 of the peak {peak:e}")]
    DomainTooSmall { boundary: f64, peak: f64 },

    #[error("the uniform box density requires a periodic grid")]
    WrongBoundary,

    #[error("scaling factor {0} is not representable in double precision")]
    Overflow(&'static str),

    #[error("functional evaluated to a non-positive value {0}")]
    NonPositiveValue(f64),

    #[error("probe set does not vary alpha and beta independently ({0})")]
    InsufficientProbe(String),

    #[error("density is identically zero")]
    EmptyDensity,

    #[error("orbitals {i} and {j} overlap by {overlap:e}")]
    OrthogonalityViolation { i: usize, j: usize, overlap: f64 },

    #[error("orbital {index} has norm {norm} but {expected} is required")]
    NormalizationViolation {
        index: usize,
        norm: f64,
        expected: f64,
    },

    #[error("mean density must be positive, got {0}")]
    NonPositiveDensity(f64),

    #[error("target density must be strictly positive (sample {index} is {value})")]
    NonPositiveTarget { index: usize, value: f64 },

    #[error("search stopped after {} iterations without converging", .0.iterations)]
    NotConverged(Box<SearchResult>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
