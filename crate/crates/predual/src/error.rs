//! Error type shared across the crate.

use crate::groups::Frequency;
use thiserror::Error;

/// Errors produced by construction, validation, and the solvers.
#[derive(Error, Debug)]
pub enum Error {
    /// A grid or sample-table length does not match the group's grid.
    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    /// A frequency has the wrong shape for the group (integer vs pair).
    #[error("frequency {freq} is not a member of the dual of this group")]
    FrequencyMismatch { freq: Frequency },

    /// A frequency (or a derived lag) lies outside the alias-free band of the grid.
    #[error("frequency {freq} outside alias-free band (|x| <= {band}); increase the grid")]
    BandViolation { freq: Frequency, band: i64 },

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix not Hermitian: max asymmetry {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// A matrix that must be positive semidefinite has a significantly negative eigenvalue.
    #[error("matrix not positive semidefinite: min eigenvalue {min_eig:.3e} (scale {scale:.3e})")]
    NotPsd { min_eig: f64, scale: f64 },

    /// A construction or scenario parameter is invalid.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Parse failure for a frequency-set expression or data file.
    #[error("parse error: {0}")]
    Parse(String),

    /// The requested combination is outside the implemented theory.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The oracle's exhaustive path only runs at desk scale.
    #[error("size cap exceeded: oracle requires cyclic order <= {cap}, got {got}")]
    SizeCap { cap: usize, got: usize },

    /// A dual lower bound exceeded a primal upper bound beyond tolerance.
    #[error(
        "sandwich violation: lower bound {lower:.12e} exceeds upper bound {upper:.12e} + {tol:.1e}"
    )]
    SandwichViolation { lower: f64, upper: f64, tol: f64 },

    /// An iterative solve lost its footing (NaN, failed factorization, no descent).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration file problems.
    #[error("config error: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
