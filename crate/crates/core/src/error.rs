use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate cell {index} (measure {measure:e})")]
    DegenerateCell { index: usize, measure: f64 },

    #[error("degenerate tangent fit at point {point}")]
    DegenerateTangentFit { point: usize },

    #[error("weights required: {0}")]
    WeightsRequired(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{count} isolated point(s) have no neighbour inside the kernel support (first: {first})")]
    IsolatedPoints { count: usize, first: usize },

    #[error("{method} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("dense solve limited to n <= {limit} (got n = {n}); subsample the cloud or raise the threshold")]
    DenseLimit { n: usize, limit: usize },

    #[error("eigenvalues carry imaginary parts up to {max_imag:e} (allowed {allowed:e})")]
    SpuriousImaginary { max_imag: f64, allowed: f64 },

    #[error("augmented Lagrangian iteration diverged at iteration {iteration} with beta = {beta:e} (boundary residual {residual:e}); increase beta")]
    AlmDiverged { beta: f64, iteration: usize, residual: f64 },

    #[error("reference function has zero norm")]
    ZeroReference,

    #[error("rank-deficient basis")]
    RankDeficient,

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}
