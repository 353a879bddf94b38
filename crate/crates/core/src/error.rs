use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "frequency grid too coarse: {bins_per_half_coherence:.2} bins per coherence interval, need at least {required}"
    )]
    Resolution {
        bins_per_half_coherence: f64,
        required: f64,
    },

    #[error("grid mismatch: expected {expected} frequency samples, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("path-loss exponent {0} <= 2 makes the interference sum diverge")]
    DivergentInterference(f64),

    #[error("impulse response has no taps")]
    EmptyResponse,

    #[error("impulse response has zero energy")]
    ZeroResponse,

    #[error("{signals} transmitted signals but {channels} channels")]
    LengthMismatch { signals: usize, channels: usize },

    #[error("channel {index} has zero energy")]
    ZeroEnergy { index: usize },

    #[error("node ({x}, {y}) lies outside the {side}x{side} grid")]
    OutsideGrid { x: i64, y: i64, side: usize },

    #[error("grid side must be odd so the sink is a lattice point, got {0}")]
    EvenSide(usize),

    #[error("exponents must satisfy 0 < gamma < beta < 1/2, got beta = {beta}, gamma = {gamma}")]
    ExponentOrder { beta: f64, gamma: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
