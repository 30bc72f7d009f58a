use thiserror::Error;

/// Errors raised by the calibration engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DcpError {
    #[error("draw vector is empty")]
    EmptyDraws,
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("k = {k} exceeds the number of draws M = {m}")]
    KTooLarge { k: usize, m: usize },
    #[error(
        "calibration set too small: rank {rank} required but only {n} scores available (alpha = {alpha})"
    )]
    InsufficientCalibration { rank: usize, n: usize, alpha: f64 },
    #[error("non-finite nonconformity score {0}")]
    NonFiniteScore(f64),
    #[error("invalid bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("score family {0} has no closed-form inverse")]
    UnsupportedFamily(String),
    #[error("metric requires at least {required} samples, got {got}")]
    EmptySet { required: usize, got: usize },
    #[error("target range {0} is degenerate")]
    DegenerateRange(f64),
    #[error("mean interval width is zero")]
    ZeroMeanWidth,
    #[error("series of length {len} is too short for lookback {lookback} + horizon {horizon}")]
    SeriesTooShort {
        len: usize,
        lookback: usize,
        horizon: usize,
    },
    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("training targets are constant ({0}); min-max scaling is undefined")]
    DegenerateScale(f64),
    #[error("no grid point lies inside the conformal set")]
    NoMember,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = DcpError> = std::result::Result<T, E>;
