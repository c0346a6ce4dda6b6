use thiserror::Error;

/// Errors raised by the design pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range 1..={max}")]
    Index { index: usize, max: usize },

    #[error(
        "precision insufficient: residual {achieved:e} exceeds tolerance {tolerance:e} at {bits} bits"
    )]
    PrecisionInsufficient {
        achieved: f64,
        tolerance: f64,
        bits: u32,
    },

    #[error("degenerate mode combination: measure jumps by {jump:e} at level {level:e}")]
    DegenerateCombination { level: f64, jump: f64 },

    #[error("mode {mode} has zero mass on the control domain and cannot be controlled")]
    UncontrollableMode { mode: usize },

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PrecisionInsufficient { .. } | Error::DegenerateCombination { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
