use thiserror::Error;

/// Every failure the library can report.
///
/// `Validation` covers bad inputs caught before any numerics start; the
/// other variants come out of the numerics themselves.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("matrix is not Hermitian: entry ({row}, {col}) differs from its mirror by {gap:e}")]
    NonHermitian { row: usize, col: usize, gap: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("degenerate Gramian: smallest eigenvalue {min_eig:e} is not positive")]
    DegenerateGramian { min_eig: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("grid too coarse: mode {mode} has {points_per_wavelength:.1} points per wavelength, need 16")]
    Resolution { mode: usize, points_per_wavelength: f64 },
    #[error("eigenvalues {index} and {next} are closer than the solver tolerance ({gap:e})")]
    Degeneracy { index: usize, next: usize, gap: f64 },
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("mode {mode} has a vanishing trace weight and cannot be controlled")]
    NonControllableMode { mode: usize },
    #[error("size cap exceeded: order {order} > {cap}")]
    Size { order: usize, cap: usize },
}

impl Error {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// True for input-validation failures, false for numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
