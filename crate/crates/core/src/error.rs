use thiserror::Error;

use crate::chain::ErgodicityVerdict;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {name} = {value} lies outside [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("cannot parse parameter vector {0:?}: expected four comma-separated probabilities")]
    ParseParams(String),

    #[error("player count {n} outside supported range {min}..={max}")]
    PlayerCount { n: u32, min: u32, max: u32 },

    #[error("player index {index} out of range 1..={n}")]
    PlayerIndex { index: usize, n: u32 },

    #[error("state bits {bits:#x} have bits set above position {n}")]
    StateBits { bits: u64, n: u32 },

    #[error("vector length {got} does not match state-space size {expected}")]
    Dimension { expected: usize, got: usize },

    #[error("chain is not ergodic ({})", .0.case_label)]
    NotErgodic(Box<ErgodicityVerdict>),

    #[error("game C chain is not ergodic ({})", .0.case_label)]
    GameCNotErgodic(Box<ErgodicityVerdict>),

    #[error("power iteration did not reach residual {tolerance:e} in {iterations} iterations (last {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("linear solve failed: matrix is singular")]
    Singular,

    #[error("parameters ({p0}, {p1}, {p2}, {p3}) are outside the p0 = 1, p3 = 0, 0 < p1 + p2 < 2 family")]
    NotSpecialCase { p0: f64, p1: f64, p2: f64, p3: f64 },

    #[error("{0}")]
    InvalidConfig(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
