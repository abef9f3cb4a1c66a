use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),

    #[error("lambda = 0 is not a point of the frequency set")]
    ZeroFrequency,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("boundary decay violated: edge/max ratio {ratio:e} exceeds {limit:e}")]
    BoundaryDecay { ratio: f64, limit: f64 },

    #[error("non-finite values produced by {0}")]
    NonFinite(&'static str),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("time step {dt} violates the stability bound {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("malformed container: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
