//! Cooperative Parrondo games on a ring of `n` players.
//!
//! Each player's coin depends on whether its two neighbors last won or lost,
//! through the bias vector `(p0, p1, p2, p3)`. The crate computes exact mean
//! profits for the finite ring, certifies ergodicity of the infinite-lattice
//! spin system, and simulates that spin system.
//!
//! States are little-endian: player `i` (1-based) is bit `i - 1`.

pub mod chain;
pub mod error;
pub mod exec;
pub mod model;
pub mod numeric;
pub mod regions;
pub mod sim;

pub use chain::{
    apply_transition, brute_force_classes, classify_ergodicity, closed_form_special,
    parrondo_check, profit_curve, stationary, ChainSpec, ErgodicityVerdict, StationaryResult,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{flip_prob, neighbor_code, NeighborCode, Params, RingState};
