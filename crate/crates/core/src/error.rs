use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("non-positive price at index {index}")]
    NonPositivePrice { index: usize },

    #[error("non-monotone dates at index {index}")]
    NonMonotoneDates { index: usize },

    #[error("dates and values differ in length ({dates} vs {values})")]
    LengthMismatch { dates: usize, values: usize },

    #[error("singular or degenerate matrix: {0}")]
    Singular(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported level {0}")]
    UnsupportedLevel(f64),

    #[error("unsupported m {0}")]
    UnsupportedM(usize),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("stationarity resampling exhausted at period {period}")]
    StationarityExhausted { period: usize },

    #[error("too many failed bootstrap replicates: {failed} of {reps}")]
    BootstrapFailures { failed: usize, reps: usize },

    #[error("malformed embedded table: {0}")]
    Table(&'static str),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
