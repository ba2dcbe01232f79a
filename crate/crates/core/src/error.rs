use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("predictor column {} is constant and cannot be centered or scaled", column + 1)]
    DegeneratePredictor {
        /// 0-based.
        column: usize,
    },

    #[error("matrix is not positive definite: leading minor {minor} has pivot {pivot:e}")]
    NotPositiveDefinite { minor: usize, pivot: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chain failed at iteration {iteration}: {quantity} is {value}")]
    ChainFailure {
        iteration: usize,
        quantity: String,
        value: f64,
    },

    #[error("1F1({a}; {b}; {x}) series did not converge after {terms} terms")]
    SeriesDivergence { a: f64, b: f64, x: f64, terms: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("contract violation: {0}")]
    Contract(String),
}
