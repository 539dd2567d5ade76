//! Continuous-time simulation of the spin system.
//!
//! Every site carries a rate-1 clock. On a ring of `L` sites the clocks are
//! merged into one rate-`L` Poisson stream whose events pick a site uniformly;
//! the chosen player then tosses its `p_m` coin, which both decides the payoff
//! and whether the site flips. Self-loops (a win by a winner, a loss by a
//! loser) are still games and still count toward profit.
//!
//! For `(1, p1, p2, 0)` started with a single defect pair, the whole infinite
//! configuration is a function of the defect's type and position, which is
//! simulated exactly in [`walk`].

mod ring;
pub mod walk;

pub use ring::{lattice_convergence, simulate, simulate_replications, LatticeCheck};
pub use walk::{
    excursion_tail_check, sample_excursions, simulate_special_walk, special_walk_replications,
    DefectState, ExcursionStats, SpecialWalkConfig, SpecialWalkOutcome, TailFit, TailReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Params;

/// Smallest ring accepted by [`simulate`].
pub const MIN_RING_SIZE: usize = 8;

/// Batches used for batch-means confidence intervals.
pub const BATCHES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefectKind {
    #[serde(rename = "00")]
    Zeros,
    #[serde(rename = "11")]
    Ones,
}

impl DefectKind {
    pub fn bit(self) -> u8 {
        match self {
            DefectKind::Zeros => 0,
            DefectKind::Ones => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitialState {
    AllZeros,
    UniformRandom,
    /// `0101...`; needs an even ring.
    Alternating,
    /// Alternating except sites `position` and `position + 1`, which share
    /// `kind`; needs an odd ring.
    AlternatingWithDefect {
        kind: DefectKind,
        position: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleGrid {
    /// Equally spaced in `(0, horizon]`.
    #[default]
    Linear,
    /// Eight points per doubling, ending at the horizon.
    Geometric,
}

impl SampleGrid {
    /// Increasing sample times in `(0, horizon]`, at most `count` of them.
    pub fn times(self, horizon: f64, count: usize) -> Vec<f64> {
        match self {
            SampleGrid::Linear => (1..=count)
                .map(|k| horizon * k as f64 / count as f64)
                .collect(),
            SampleGrid::Geometric => {
                let mut t: Vec<f64> = (0..count)
                    .map(|j| horizon * 2f64.powf(-(j as f64) / 8.0))
                    .take_while(|&t| t >= 1.0)
                    .collect();
                t.reverse();
                t
            }
        }
    }
}

fn default_samples() -> usize {
    200
}

fn default_burn_in() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub ring_size: usize,
    pub params: Params,
    pub horizon: f64,
    pub seed: u64,
    pub initial: InitialState,
    /// Number of profit samples per window.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grid: SampleGrid,
    /// Fraction of the horizon discarded before occupation is recorded.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

impl SimConfig {
    pub fn new(ring_size: usize, params: Params, horizon: f64, seed: u64) -> Self {
        SimConfig {
            ring_size,
            params,
            horizon,
            seed,
            initial: InitialState::UniformRandom,
            samples: default_samples(),
            grid: SampleGrid::default(),
            burn_in: default_burn_in(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let l = self.ring_size;
        if l < MIN_RING_SIZE {
            return bad(format!("ring size {l} below minimum {MIN_RING_SIZE}"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return bad(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in
            ));
        }
        if self.samples == 0 {
            return bad("at least one profit sample is required".into());
        }
        match self.initial {
            InitialState::Alternating if l % 2 == 1 => {
                bad(format!("alternating start needs an even ring, got {l}"))
            }
            InitialState::AlternatingWithDefect { .. } if l % 2 == 0 => bad(format!(
                "a single defect pair fits only on an odd ring, got {l}"
            )),
            InitialState::AlternatingWithDefect { position, .. } if position >= l => {
                bad(format!("defect position {position} outside ring of {l}"))
            }
            _ => Ok(()),
        }
    }
}

/// Cumulative profit of a set of players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitSeries {
    pub window: Vec<usize>,
    /// `(time, cumulative profit per player)`.
    pub samples: Vec<(f64, f64)>,
    pub wins: u64,
    pub losses: u64,
}

impl ProfitSeries {
    pub(crate) fn new(window: Vec<usize>) -> Self {
        ProfitSeries {
            window,
            samples: Vec::new(),
            wins: 0,
            losses: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.window.len()
    }

    pub fn profit_per_player(&self) -> f64 {
        (self.wins as f64 - self.losses as f64) / self.size() as f64
    }

    /// Profit per player per unit time over `[t/2, t]` for every sample `t`
    /// whose half is also a sample time.
    pub fn half_window_rates(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &(t, s) in &self.samples {
            let half = t / 2.0;
            if let Some(&(_, s_half)) = self
                .samples
                .iter()
                .find(|(u, _)| (u - half).abs() <= 1e-9 * t)
            {
                out.push((t, (s - s_half) / half));
            }
        }
        out
    }

    /// Smallest and largest half-window rate at times `>= from`.
    pub fn half_window_range(&self, from: f64) -> Option<(f64, f64)> {
        self.half_window_rates()
            .into_iter()
            .filter(|&(t, _)| t >= from)
            .fold(None, |acc, (_, r)| match acc {
                None => Some((r, r)),
                Some((lo, hi)) => Some((lo.min(r), hi.max(r))),
            })
    }
}

/// Time-weighted marginals of the configuration, averaged over sites.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OccupationStats {
    /// `[pi_0(0), pi_0(1)]`.
    pub one_site: [f64; 2],
    /// `pairs[2u + v] = pi_{-1,1}(u, v)`.
    pub pairs: [f64; 4],
    pub total_time: f64,
}

/// `(mu via pairs, mu via one site)`.
pub fn estimate_mu(stats: &OccupationStats, p: &Params) -> Result<(f64, f64)> {
    if stats.total_time <= 0.0 {
        return Err(Error::InvalidConfig(
            "occupation statistics cover no time".into(),
        ));
    }
    let pairs: f64 = (0..4).map(|m| stats.pairs[m] * p.p(m)).sum();
    Ok((2.0 * pairs - 1.0, 2.0 * stats.one_site[1] - 1.0))
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
        }
    }

    /// Whether `value` lies within `k` standard errors.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Batch-means summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub mu_pairs: Estimate,
    pub mu_site: Estimate,
    pub batch_mu_site: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub replication: u64,
    pub series: Vec<ProfitSeries>,
    pub occupation: OccupationStats,
    pub batches: BatchSummary,
    pub events: u64,
    /// FNV-1a digest of the event stream, hex encoded.
    pub digest: String,
}

impl SimOutcome {
    pub fn mu(&self, p: &Params) -> (f64, f64) {
        estimate_mu(&self.occupation, p).expect("positive observed time")
    }
}

/// Estimates pooled across independent replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pooled {
    pub replications: usize,
    pub mu_pairs: Estimate,
    pub mu_site: Estimate,
    /// Profit per player per unit time for each window.
    pub profit_rate: Vec<Estimate>,
}

pub fn pool(outcomes: &[SimOutcome], p: &Params, horizon: f64) -> Pooled {
    let mus: Vec<(f64, f64)> = outcomes.iter().map(|o| o.mu(p)).collect();
    let pairs: Vec<f64> = mus.iter().map(|m| m.0).collect();
    let site: Vec<f64> = mus.iter().map(|m| m.1).collect();
    let windows = outcomes.first().map_or(0, |o| o.series.len());
    let profit_rate = (0..windows)
        .map(|w| {
            let xs: Vec<f64> = outcomes
                .iter()
                .map(|o| o.series[w].profit_per_player() / horizon)
                .collect();
            Estimate::from_samples(&xs)
        })
        .collect();
    Pooled {
        replications: outcomes.len(),
        mu_pairs: Estimate::from_samples(&pairs),
        mu_site: Estimate::from_samples(&site),
        profit_rate,
    }
}

/// 64-bit FNV-1a.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub(crate) fn hex(self) -> String {
        format!("{:016x}", self.0)
    }
}
