use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A covariance model violates `R(0) = 1`, `|R| <= 1` or the sign of `R''(0+)`.
    #[error("invalid covariance model: {0}")]
    InvalidCovariance(String),

    /// The joint exceedance probability vanished, so a conditional quantity
    /// cannot be formed.
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: estimate {value:e} with error {error:e} after {intervals} intervals")]
    Quadrature {
        value: f64,
        error: f64,
        intervals: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Circulant embedding produced a clearly negative eigenvalue and the grid
    /// is too large for the dense fallback.
    #[error("circulant embedding is not nonnegative definite (most negative eigenvalue {min_eigenvalue:e}) and {nodes} nodes exceed the dense fallback limit")]
    EmbeddingNotNonnegative { min_eigenvalue: f64, nodes: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    /// No lag pair fell into the (dilated) set for any dilation radius.
    #[error("no pairs at lag {lag}")]
    NoPairs { lag: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("zero mean mark")]
    ZeroMeanMark,

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical verification of a proven statement failed, which points at
    /// an implementation defect.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
