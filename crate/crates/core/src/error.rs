use thiserror::Error;

pub type Result<T, E = SqgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SqgError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("inverse fractional Laplacian undefined on means (zero mode = {mean:e})")]
    NonZeroMean { mean: f64 },

    #[error("mollifier under-resolved: eps = {eps} < dx = {dx}")]
    MollifierUnderResolved { eps: f64, dx: f64 },

    #[error("support overflow: {0}")]
    SupportOverflow(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("CFL violation: dt = {dt:e} exceeds admissible {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("simulation blew up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("png encoding: {0}")]
    Png(String),
}
