use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive-definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at position {index}")]
    NonFinite { index: usize },

    #[error("size {size} exceeds configured cap {cap}")]
    SizeOverflow { size: usize, cap: usize },

    #[error("{what} needs n >= {min}, got {n}")]
    TooSmall {
        what: &'static str,
        n: usize,
        min: usize,
    },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integration diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("coupling is subcritical (eta = {eta})")]
    SubcriticalAlpha { eta: f64 },

    #[error("polynomial has no positive real root")]
    NoRealRoot,

    #[error("window [{lo}, {hi}] outside trajectory span [{start}, {end}]")]
    WindowOutOfRange {
        lo: f64,
        hi: f64,
        start: f64,
        end: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::Diverged { .. } | Error::NoRealRoot
        )
    }
}
