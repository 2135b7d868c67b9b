use thiserror::Error;

/// Errors produced by the modem, analysis and file layers.
#[derive(Debug, Error)]
pub enum GfdmError {
    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transmit window is singular: min |W_tx| = {min_abs:e} at (k={k}, m={m})")]
    SingularWindow { min_abs: f64, k: usize, m: usize },

    #[error("modulation matrix is numerically singular (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },

    #[error("channel frequency response has a null: min |H| = {min_abs:e} at bin {bin}")]
    SingularChannel { min_abs: f64, bin: usize },

    #[error("{required} parallel multiplier chains required, only {available} available")]
    ChainLimitExceeded { required: usize, available: usize },

    #[error("pulse overlaps {overlap} subcarriers, direct engine supports at most {available}")]
    OverlapTooLarge { overlap: usize, available: usize },

    #[error("cost model has no FFT processing latency for size {0}")]
    MissingCostEntry(usize),

    #[error("malformed sample file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GfdmError {
    /// True for singular windows, matrices and channels.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GfdmError::SingularWindow { .. }
                | GfdmError::SingularMatrix { .. }
                | GfdmError::SingularChannel { .. }
        )
    }

    /// True for errors caused by bad parameters or inputs rather than I/O or numerics.
    pub fn is_validation(&self) -> bool {
        !self.is_numerical() && !matches!(self, GfdmError::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, GfdmError>;
