use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate domain: volume {0:e} is below 1e-12")]
    DegenerateDomain(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("width {width} is not below the reach {reach}")]
    ReachExceeded { width: f64, reach: f64 },

    #[error("grid step {h} is too coarse for epsilon {eps} (need h < eps/4)")]
    GridTooCoarse { h: f64, eps: f64 },

    #[error("gradient vanishes near the boundary (|grad| = {0:e})")]
    VanishingGradient(f64),

    #[error("rejection acceptance rate {0:e} is below 1e-3")]
    LowAcceptance(f64),

    #[error("rejection sampler exceeded {0} retries")]
    RetryCapExceeded(usize),

    #[error("path extension cap of {0} steps exceeded")]
    ExtensionCap(usize),

    #[error("infinite moment: p = {p} is not below alpha = {alpha}")]
    InfiniteMoment { p: f64, alpha: f64 },

    #[error("insufficient ladder: {0} points, need at least 3")]
    InsufficientLadder(usize),

    #[error("clock path is not nondecreasing at index {0}")]
    ClockNotMonotone(usize),

    #[error("missing constant `{0}`; run `shc constants` to regenerate the cache")]
    MissingConstant(String),

    #[error("constants cache: {0}")]
    ConstantsFormat(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
