//! Execution strategy for the data-parallel loops.
//!
//! With the `parallel` feature (default) the loops run on the rayon pool;
//! without it every strategy degrades to the sequential path. Both paths
//! produce bit-identical results: reductions are always split into the same
//! fixed-size blocks and combined in block order.

use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Block length for reductions and fills.
pub const BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Writes `f(i)` into `out[i]` for every index.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => out
                .par_chunks_mut(BLOCK)
                .enumerate()
                .for_each(|(b, chunk)| {
                    let base = b * BLOCK;
                    for (k, slot) in chunk.iter_mut().enumerate() {
                        *slot = f(base + k);
                    }
                }),
            _ => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = f(i);
                }
            }
        }
    }

    /// Compensated sum of `f(i)` over `0..len`.
    pub fn sum<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.sum_array::<1, _>(len, |i| [f(i)])[0]
    }

    /// Component-wise compensated sums of an array-valued function.
    pub fn sum_array<const K: usize, F>(self, len: usize, f: F) -> [f64; K]
    where
        F: Fn(usize) -> [f64; K] + Sync + Send,
    {
        let blocks = len.div_ceil(BLOCK);
        let block_sum = |b: usize| {
            let mut acc = [CompensatedSum::default(); K];
            for i in b * BLOCK..((b + 1) * BLOCK).min(len) {
                let v = f(i);
                for k in 0..K {
                    acc[k].add(v[k]);
                }
            }
            acc.map(|a| a.value())
        };
        let partials: Vec<[f64; K]> = self.map(blocks, block_sum);
        let mut total = [CompensatedSum::default(); K];
        for p in partials {
            for k in 0..K {
                total[k].add(p[k]);
            }
        }
        total.map(|a| a.value())
    }

    /// Maximum of `f(i)` over `0..len` (0 for an empty range).
    pub fn max<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let blocks = len.div_ceil(BLOCK);
        let block_max = |b: usize| {
            (b * BLOCK..((b + 1) * BLOCK).min(len))
                .map(&f)
                .fold(0.0_f64, f64::max)
        };
        self.map(blocks, block_max).into_iter().fold(0.0, f64::max)
    }

    /// Evaluates `f` on `0..len`, returning results in index order.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }
}
