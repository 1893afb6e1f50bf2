use thiserror::Error;

use crate::geometry::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown benchmark `{0}` (expected boat, pendulum or sheep)")]
    UnknownBenchmark(String),

    #[error("unrecognized configuration key `{0}`")]
    UnknownKey(String),

    #[error("parameter `{key}` is fixed for this benchmark and cannot be overridden")]
    FixedParameter { key: String },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite state at t = {time} while integrating from {start:?}")]
    Integration { time: f64, start: Vec2 },

    #[error(
        "jacobian determinant became non-positive at t = {time}, x = {position:?}, div v = {divergence}; reduce the time step"
    )]
    NonPositiveDeterminant {
        time: f64,
        position: Vec2,
        divergence: f64,
    },

    #[error("degenerate boundary curve: {0}")]
    DegenerateCurve(String),

    #[error("boundary curve has non-positive signed area {area} (orientation flipped)")]
    Orientation { area: f64 },

    #[error("resampling would leave {0} vertices (minimum is 8)")]
    TooFewVertices(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no baseline stored for `{0}`")]
    MissingBaseline(String),

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
