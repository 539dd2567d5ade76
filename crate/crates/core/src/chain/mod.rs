//! Exact analysis of the `n`-player discrete-time chain on `{0,1}^n`.
//!
//! At each turn a uniformly chosen player `i` tosses a `p_m` coin, where `m`
//! is its neighbor code. Heads is a win (status 1), tails a loss (status 0),
//! so the state moves to `x^i` with probability `c_i(x) / n` and stays put
//! otherwise. The transition matrix is never materialized except in the
//! small dense cross-check solver.

mod classes;
mod ergodicity;
mod profit;
mod stationary;

pub use classes::{brute_force_classes, MAX_BRUTE_FORCE_N};
pub use ergodicity::{classify_ergodicity, ClosedClass, ErgodicityVerdict};
pub use profit::{
    classify_effect, closed_form_special, parrondo_check, profit_curve, profit_curve_with, Effect,
    MuSource, ParrondoReport, ProfitCurve, ProfitPoint, ZERO_TOLERANCE,
};
pub use stationary::{
    augmented_chain_residual, stationary, stationary_with, MuFormulas, Solver, StationaryOptions,
    StationaryResult, DENSE_LIMIT, RESTRICT_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{code_at, flip_prob_at, Params, MIN_RING};

/// Largest `n` for which a dense `2^n` probability vector is allocated.
pub const MAX_CHAIN_N: u32 = 24;

/// An `n`-player game with bias vector `params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n: u32,
    pub params: Params,
}

impl ChainSpec {
    pub fn new(n: u32, params: Params) -> Result<Self> {
        if !(MIN_RING..=MAX_CHAIN_N).contains(&n) {
            return Err(Error::PlayerCount {
                n,
                min: MIN_RING,
                max: MAX_CHAIN_N,
            });
        }
        Ok(ChainSpec { n, params })
    }

    /// Number of states, `2^n`.
    pub fn states(&self) -> usize {
        1usize << self.n
    }

    /// Expected one-turn payoff from state `x`: `n^{-1} sum_i (p_m - q_m)`.
    #[inline]
    pub(crate) fn payoff(&self, x: u64) -> f64 {
        let s: f64 = (0..self.n as usize)
            .map(|i| 2.0 * self.params.p(code_at(x, self.n, i)) - 1.0)
            .sum();
        s / self.n as f64
    }
}

/// Returns `vP` for a row vector `v` over the `2^n` states.
pub fn apply_transition(spec: &ChainSpec, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.states()];
    apply_transition_into(spec, v, &mut out, Exec::default())?;
    Ok(out)
}

/// Matrix-free `out = vP`.
///
/// Each output entry is gathered from its own state and its `n` single-flip
/// neighbors, using `P(y^i, y) = (1 - c_i(y)) / n`, so writes are disjoint.
pub fn apply_transition_into(
    spec: &ChainSpec,
    v: &[f64],
    out: &mut [f64],
    exec: Exec,
) -> Result<()> {
    let dim = spec.states();
    if v.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: v.len(),
        });
    }
    if out.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: out.len(),
        });
    }
    let n = spec.n;
    let inv_n = 1.0 / n as f64;
    let p = spec.params;
    exec.fill(out, |y| {
        let yb = y as u64;
        let mut stay = 0.0;
        let mut inflow = 0.0;
        for i in 0..n as usize {
            let c = flip_prob_at(&p, yb, n, i);
            stay += c;
            inflow += v[y ^ (1 << i)] * (1.0 - c);
        }
        v[y] * (1.0 - stay * inv_n) + inflow * inv_n
    });
    Ok(())
}
