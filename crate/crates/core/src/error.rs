//! Error type shared by all modules of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// No eigenfrequency lies in the requested window `[lo, hi]`.
    #[error("empty spectral window: no eigenfrequency in [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    /// The requested frequency exceeds the enumeration cap.
    #[error("frequency {requested} exceeds the configured cap {cap}")]
    FrequencyCap { requested: f64, cap: f64 },

    /// A window of dimension below the minimum required by an operation.
    #[error("degenerate window: dimension {dimension} < {required}")]
    DegenerateWindow { dimension: usize, required: usize },

    /// Gram matrices above this dimension are refused to bound memory.
    #[error("window dimension {dimension} exceeds the Gram matrix cap {cap}")]
    GramCap { dimension: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative numerical routine failed to converge.
    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
