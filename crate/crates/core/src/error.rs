use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("point {0} lies outside the domain")]
    OutsideDomain(Complex64),

    #[error("quadrature grid is empty at resolution {0}")]
    EmptyGrid(f64),

    #[error("Gram matrix is not positive definite: pivot {pivot:e} at degree {degree}")]
    NotPositiveDefinite { degree: usize, pivot: f64 },

    #[error("orthonormality defect {defect:e} exceeds tolerance (degree {degree} too high for this basis/grid)")]
    IllConditioned { degree: usize, defect: f64 },

    #[error("kernel unstable at {z}: {reason}")]
    KernelInstability { z: Complex64, reason: String },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("distance diverges: {0}")]
    Divergent(String),

    #[error("resolution {0} too coarse: {1}")]
    ResolutionTooCoarse(f64, String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
