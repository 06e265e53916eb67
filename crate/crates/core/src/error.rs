use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Hurst parameter {0} outside the admitted range [0.5, 1)")]
    InvalidHurst(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("covariance factorization failed for n = {steps}, H = {hurst}; use the circulant generator instead")]
    FactorizationFailed { steps: usize, hurst: f64 },

    #[error("grid of {steps} steps exceeds the Cholesky cap of {cap}")]
    CapExceeded { steps: usize, cap: usize },

    #[error("circulant embedding has negative eigenvalue {value:e} at index {index}")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("cursor at the horizon: {0} needs room to extend the path")]
    CursorAtHorizon(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("path is not on a refined (doubled) grid: {0}")]
    NotRefined(String),

    #[error("driver is not a fractional Brownian motion with H > 1/2")]
    NotFractional,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("singular regression matrix at time index {index}; set a positive ridge")]
    SingularRegression { index: usize },

    #[error("PDE residual {residual:e} exceeds tolerance at path {path}, time index {index}")]
    PdeResidual {
        residual: f64,
        path: usize,
        index: usize,
    },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
