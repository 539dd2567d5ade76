//! Monte Carlo volumes of the ergodicity regions in the parameter cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

pub const MIN_SAMPLES: u64 = 10_000;

/// Samples drawn from one RNG stream.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeDim {
    /// `(p0, p1, p1, p3)` with three free coordinates.
    #[serde(rename = "3d")]
    Slice3d,
    #[serde(rename = "4d")]
    Full4d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    A,
    B,
    C,
    D,
    COrLambdaC,
    Union4,
    Union5,
}

impl Region {
    pub const ALL: [Region; 7] = [
        Region::A,
        Region::B,
        Region::C,
        Region::D,
        Region::COrLambdaC,
        Region::Union4,
        Region::Union5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::A => "a",
            Region::B => "b",
            Region::C => "c",
            Region::D => "d",
            Region::COrLambdaC => "c_or_lambda_c",
            Region::Union4 => "union4",
            Region::Union5 => "union5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub region: Region,
    pub estimate: f64,
    /// Binomial standard error `sqrt(v (1 - v) / samples)`.
    pub std_error: f64,
    pub hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeTable {
    pub dim: VolumeDim,
    pub samples: u64,
    pub seed: u64,
    pub rows: Vec<VolumeEstimate>,
}

impl VolumeTable {
    pub fn get(&self, region: Region) -> &VolumeEstimate {
        self.rows
            .iter()
            .find(|r| r.region == region)
            .expect("every region is estimated")
    }
}

fn memberships(p: [f64; 4]) -> [bool; 7] {
    let a = super::a(p);
    let b = super::b(p);
    let c = super::c(p);
    let d = super::d(p);
    let lc = super::c(super::lambda(p));
    let u4 = a || b || c || d;
    [a, b, c, d, c || lc, u4, u4 || lc]
}

/// Estimates region volumes from `samples` uniform draws.
///
/// Chunk `k` of the sample uses the ChaCha8 stream `k` under `seed`, so the
/// result does not depend on how chunks are scheduled.
pub fn estimate_volumes(
    dim: VolumeDim,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<VolumeTable> {
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES as usize,
            got: samples as usize,
        });
    }
    let chunks = samples.div_ceil(CHUNK);
    let counts = exec.map(chunks as usize, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let len = CHUNK.min(samples - k as u64 * CHUNK);
        let mut hits = [0u64; 7];
        for _ in 0..len {
            let p = match dim {
                VolumeDim::Slice3d => {
                    let (p0, p1, p3) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
                    [p0, p1, p1, p3]
                }
                VolumeDim::Full4d => std::array::from_fn(|_| rng.gen::<f64>()),
            };
            for (h, m) in hits.iter_mut().zip(memberships(p)) {
                *h += m as u64;
            }
        }
        hits
    });
    let mut totals = [0u64; 7];
    for c in counts {
        for (t, h) in totals.iter_mut().zip(c) {
            *t += h;
        }
    }
    let nf = samples as f64;
    let rows = Region::ALL
        .iter()
        .zip(totals)
        .map(|(&region, hits)| {
            let v = hits as f64 / nf;
            VolumeEstimate {
                region,
                estimate: v,
                std_error: (v * (1.0 - v) / nf).sqrt(),
                hits,
            }
        })
        .collect();
    Ok(VolumeTable {
        dim,
        samples,
        seed,
        rows,
    })
}
