use thiserror::Error;

/// Errors produced by the model, the solvers and the closed-form evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("a market needs at least one facility")]
    NoFacilities,

    #[error("position {0} is outside the market [0, 1]")]
    PositionOutOfRange(f64),

    #[error("invalid borders: {0}")]
    InvalidBorders(String),

    #[error("facility index {index} out of range for {len} facilities")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("scan grid must have at least {min} points, got {got}")]
    GridTooCoarse { got: usize, min: usize },

    #[error("client equilibrium did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no closed form for {kind} placement with n = {n}")]
    UnsupportedSize { kind: &'static str, n: usize },

    #[error("continued fraction hits a vanishing denominator at depth {depth}")]
    Singularity { depth: usize },

    #[error("precision must be at least 1 client")]
    EmptyGrid,

    #[error("slot {slot} is outside a grid of {precision} clients")]
    SlotOutOfRange { slot: usize, precision: usize },

    #[error("client dynamics did not settle within {rounds} rounds")]
    RoundLimit { rounds: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}
