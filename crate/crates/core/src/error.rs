use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {width}x{height} is too small (minimum {min}x{min})")]
    DimensionTooSmall { width: usize, height: usize, min: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("cannot resample {from:?} to {to:?}: not adjacent pyramid levels")]
    AspectMismatch {
        from: (usize, usize),
        to: (usize, usize),
    },

    #[error("buffer length {found} does not match {width}x{height}")]
    BufferLength {
        width: usize,
        height: usize,
        found: usize,
    },

    #[error("CFL number {cfl:.4} exceeds 1")]
    CflViolation { cfl: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("saddle-point solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("degenerate triangle (signed area {area:e})")]
    DegenerateTriangle { area: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid time {t} (horizon {horizon})")]
    InvalidTime { t: f64, horizon: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed {kind} data: {msg}")]
    Format { kind: &'static str, msg: String },
}

impl Error {
    pub(crate) fn format(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Format {
            kind,
            msg: msg.into(),
        }
    }
}
