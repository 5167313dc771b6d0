use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("kernels live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite kernel sample at ({i}, {j})")]
    NonFiniteSample { i: usize, j: usize },

    #[error("kernel too stiff for this grid: dt * max|F_ii| = {0:.3e} >= 1")]
    IllConditioned(f64),

    #[error("resolvent residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("singular system at time index {0}")]
    Singular(usize),

    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("{solver} does not support system kind {kind}")]
    UnsupportedKind { solver: &'static str, kind: String },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("flip angle {0} rad outside [0, pi)")]
    FlipAngleDomain(f64),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
