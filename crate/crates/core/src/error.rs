use thiserror::Error;

/// Error type shared by every numerical routine in this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A value lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Construction parameters violate a precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Required input data is missing or malformed.
    #[error("input error: {0}")]
    Input(String),

    /// An iterative scheme failed to converge within its budget.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A constructed object failed its own consistency checks.
    #[error("construction error: {0}")]
    Construction(String),

    /// The symplectic leaf is degenerate or outside the supported classes.
    #[error("unsupported surface: {0}")]
    UnsupportedSurface(String),
}

pub type Result<T> = std::result::Result<T, Error>;
