use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A counting operation was asked to run at or beyond criticality.
    #[error("parameters are not subcritical (mu_plus = {mu_plus}, mu_minus = {mu_minus}); counting requires mu > 1 on both sides")]
    Supercritical { mu_plus: f64, mu_minus: f64 },

    /// `alpha = 0` on the given side; use the separable path instead.
    #[error("oscillator `{side}` is decoupled (alpha = 0)")]
    DecoupledOscillator { side: &'static str },

    #[error("channel ({m}, {n}) is open at energy {energy}: decay rate radicand {radicand} is not positive")]
    OpenChannel {
        m: usize,
        n: usize,
        energy: f64,
        radicand: f64,
    },

    #[error("decay rate must be positive, got {0}")]
    DegenerateChannel(f64),

    #[error("mismatched decay rates in H1 product: {0} vs {1}")]
    MismatchedGamma(f64, f64),

    #[error("energy {lambda} is within the margin {margin} of the threshold {threshold}")]
    MarginViolation {
        lambda: f64,
        threshold: f64,
        margin: f64,
    },

    #[error("operator dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("count sequence is not monotone: {0:?}")]
    NonMonotone(Vec<usize>),

    #[error("count did not stall before the cap; trace of (size, count): {0:?}")]
    NotConverged(Vec<(usize, usize)>),

    #[error("count at {0} is boundary-ambiguous (between {1} and {2})")]
    Ambiguous(f64, usize, usize),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
