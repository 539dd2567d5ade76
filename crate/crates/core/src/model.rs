//! Parameter and state primitives.
//!
//! Player `i` (1-based, as in the game description) is stored in bit `i - 1`
//! of a [`RingState`]; the ring closes so that player 0 is player `n` and
//! player `n + 1` is player 1.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four bias probabilities of game B, indexed by neighbor code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Params([f64; 4]);

const NAMES: [&str; 4] = ["p0", "p1", "p2", "p3"];

impl Params {
    pub fn new(p0: f64, p1: f64, p2: f64, p3: f64) -> Result<Self> {
        Self::from_array([p0, p1, p2, p3])
    }

    pub fn from_array(p: [f64; 4]) -> Result<Self> {
        for (k, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidProbability {
                    name: NAMES[k],
                    value: v,
                });
            }
        }
        Ok(Params(p))
    }

    /// Game A: a fair coin regardless of neighbors.
    pub fn fair() -> Self {
        Params([0.5; 4])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    #[inline]
    pub fn p(&self, m: usize) -> f64 {
        self.0[m]
    }

    /// `q_m = 1 - p_m`.
    #[inline]
    pub fn q(&self, m: usize) -> f64 {
        1.0 - self.0[m]
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Biases of game C, the even mixture of game A and game B.
    pub fn mix_with_fair(&self) -> Self {
        Params(self.0.map(|p| (0.5 + p) / 2.0))
    }

    /// `(p0, p1, p2, p3) -> (q3, q2, q1, q0)`; negates the mean profit.
    pub fn involution_lambda(&self) -> Self {
        let [p0, p1, p2, p3] = self.0;
        Params([1.0 - p3, 1.0 - p2, 1.0 - p1, 1.0 - p0])
    }

    /// True for the `p0 = 1, p3 = 0` family.
    pub fn is_alternating_family(&self) -> bool {
        self.0[0] == 1.0 && self.0[3] == 0.0
    }
}

impl TryFrom<[f64; 4]> for Params {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        Params::from_array(p)
    }
}

impl From<Params> for [f64; 4] {
    fn from(p: Params) -> Self {
        p.0
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a},{b},{c},{d}")
    }
}

fn parse_probability(s: &str) -> Option<f64> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            (den != 0.0).then(|| num / den)
        }
        None => s.parse().ok(),
    }
}

/// Parses the flag form `p0,p1,p2,p3`; each entry may be a decimal or a
/// fraction such as `3/4`.
impl FromStr for Params {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::ParseParams(s.to_string()));
        }
        let mut p = [0.0; 4];
        for (slot, part) in p.iter_mut().zip(&parts) {
            *slot = parse_probability(part).ok_or_else(|| Error::ParseParams(s.to_string()))?;
        }
        Params::from_array(p)
    }
}

/// Largest ring a [`RingState`] can hold.
pub const MAX_RING: u32 = 64;
pub const MIN_RING: u32 = 3;

/// Win/loss statuses of `n` players on a ring, bit `i - 1` holding player `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RingState {
    n: u32,
    bits: u64,
}

impl RingState {
    pub fn new(n: u32, bits: u64) -> Result<Self> {
        check_ring_size(n)?;
        if n < 64 && bits >> n != 0 {
            return Err(Error::StateBits { bits, n });
        }
        Ok(RingState { n, bits })
    }

    pub fn zeros(n: u32) -> Result<Self> {
        Self::new(n, 0)
    }

    /// Parses a 0/1 string whose first character is player 1.
    pub fn parse(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (k, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' if k < 64 => bits |= 1 << k,
                _ => return Err(Error::InvalidConfig(format!("bad state string {s:?}"))),
            }
        }
        Self::new(s.chars().count() as u32, bits)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Status of player `i` (1-based).
    pub fn status(&self, i: usize) -> Result<u8> {
        let i0 = self.index(i)?;
        Ok(((self.bits >> i0) & 1) as u8)
    }

    /// The state with player `i` toggled.
    pub fn toggled(&self, i: usize) -> Result<Self> {
        let i0 = self.index(i)?;
        Ok(RingState {
            n: self.n,
            bits: self.bits ^ (1 << i0),
        })
    }

    fn index(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.n as usize {
            return Err(Error::PlayerIndex {
                index: i,
                n: self.n,
            });
        }
        Ok(i - 1)
    }
}

impl fmt::Display for RingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n {
            f.write_str(if (self.bits >> k) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub(crate) fn check_ring_size(n: u32) -> Result<()> {
    if !(MIN_RING..=MAX_RING).contains(&n) {
        return Err(Error::PlayerCount {
            n,
            min: MIN_RING,
            max: MAX_RING,
        });
    }
    Ok(())
}

/// `m = 2 x_{i-1} + x_{i+1}`, selecting which bias a player uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborCode(u8);

impl NeighborCode {
    pub fn value(self) -> usize {
        self.0 as usize
    }
}

/// Neighbor code of player `i` (1-based) with periodic wraparound.
pub fn neighbor_code(s: RingState, i: usize) -> Result<NeighborCode> {
    let i0 = s.index(i)?;
    Ok(NeighborCode(code_at(s.bits, s.n, i0) as u8))
}

/// Rate at which player `i` flips: `p_m` when a loser, `q_m` when a winner.
pub fn flip_prob(p: &Params, s: RingState, i: usize) -> Result<f64> {
    let i0 = s.index(i)?;
    Ok(flip_prob_at(p, s.bits, s.n, i0))
}

/// Neighbor code at 0-based site `i0` of an `n`-site ring.
#[inline]
pub(crate) fn code_at(bits: u64, n: u32, i0: usize) -> usize {
    let n = n as usize;
    let left = if i0 == 0 { n - 1 } else { i0 - 1 };
    let right = if i0 + 1 == n { 0 } else { i0 + 1 };
    ((((bits >> left) & 1) << 1) | ((bits >> right) & 1)) as usize
}

#[inline]
pub(crate) fn flip_prob_at(p: &Params, bits: u64, n: u32, i0: usize) -> f64 {
    let m = code_at(bits, n, i0);
    if (bits >> i0) & 1 == 0 {
        p.p(m)
    } else {
        p.q(m)
    }
}
