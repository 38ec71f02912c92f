use thiserror::Error;

pub type Result<T, E = FlmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FlmError {
    #[error("invalid input dimension {m}: expected 1..={max}")]
    InvalidDimension { m: usize, max: usize },

    #[error("{what} index {index} out of range 1..={bound}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("malformed checkpoint: {0}")]
    Parse(String),

    #[error("checkpoint is missing section `{0}`")]
    MissingSection(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown problem `{name}` (valid: {valid})")]
    UnknownProblem { name: String, valid: &'static str },

    #[error("integration blew up at t = {time}")]
    Integration { time: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
