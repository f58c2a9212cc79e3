//! Error type shared across the crate.

use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A rule that needs strictly positive curvature got `q <= 0`.
    NonPositiveCurvature { q: f64 },
    /// A rule that needs a strictly positive top eigenvalue got `lambda <= 0`.
    NonPositiveSharpness { lambda: f64 },
    /// The linear operator fed to power iteration produced a non-finite entry.
    NonFiniteOperator { iteration: usize },
    /// Preconditioner diagonals must be strictly positive.
    NonPositivePreconditioner { index: usize, value: f64 },
    /// A dense Hessian failed the symmetry check.
    AsymmetricMatrix { max_asymmetry: f64 },
    /// Vector/problem dimensions do not line up.
    DimensionMismatch { expected: usize, actual: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonPositiveCurvature { q } => {
                write!(f, "curvature along the update must be positive, got {q}")
            }
            Error::NonPositiveSharpness { lambda } => {
                write!(f, "top eigenvalue must be positive, got {lambda}")
            }
            Error::NonFiniteOperator { iteration } => {
                write!(f, "operator produced a non-finite vector at power iteration {iteration}")
            }
            Error::NonPositivePreconditioner { index, value } => {
                write!(f, "preconditioner diagonal entry {index} is not positive: {value}")
            }
            Error::AsymmetricMatrix { max_asymmetry } => {
                write!(f, "matrix is not symmetric (max |h_ij - h_ji| = {max_asymmetry})")
            }
            Error::DimensionMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
