//! Uniformized simulation of the spin system on a ring.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    estimate_mu, pool, BatchSummary, Estimate, Fnv, InitialState, OccupationStats, Pooled,
    ProfitSeries, SimConfig, SimOutcome, BATCHES,
};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Runs replication 0 of `cfg`.
pub fn simulate(cfg: &SimConfig, windows: &[Vec<usize>]) -> Result<SimOutcome> {
    cfg.validate()?;
    check_windows(cfg.ring_size, windows)?;
    Ok(run(cfg, windows, 0))
}

/// Runs replications `0..count`, each on its own ChaCha8 stream.
pub fn simulate_replications(
    cfg: &SimConfig,
    windows: &[Vec<usize>],
    count: usize,
    exec: Exec,
) -> Result<Vec<SimOutcome>> {
    cfg.validate()?;
    check_windows(cfg.ring_size, windows)?;
    if count == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    Ok(exec.map(count, |r| run(cfg, windows, r as u64)))
}

fn check_windows(l: usize, windows: &[Vec<usize>]) -> Result<()> {
    for w in windows {
        if w.is_empty() {
            return Err(Error::InvalidConfig("empty window".into()));
        }
        if let Some(&s) = w.iter().find(|&&s| s >= l) {
            return Err(Error::InvalidConfig(format!(
                "window site {s} outside ring 0..{l}"
            )));
        }
        let mut sorted = w.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != w.len() {
            return Err(Error::InvalidConfig(format!("window {w:?} repeats a site")));
        }
    }
    Ok(())
}

fn initial_state(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let l = cfg.ring_size;
    match cfg.initial {
        InitialState::AllZeros => vec![0; l],
        InitialState::UniformRandom => (0..l).map(|_| rng.gen_range(0..2u8)).collect(),
        InitialState::Alternating => (0..l).map(|i| (i % 2) as u8).collect(),
        InitialState::AlternatingWithDefect { kind, position } => {
            let mut x = vec![0; l];
            for k in 0..l {
                x[(position + 1 + k) % l] = (kind.bit() + k as u8) % 2;
            }
            x
        }
    }
}

/// Running state of one ring.
struct Ring {
    x: Vec<u8>,
    ones: usize,
    /// Number of sites whose `(left, right)` neighbor pair has each code.
    codes: [usize; 4],
}

impl Ring {
    fn new(x: Vec<u8>) -> Self {
        let mut ring = Ring {
            ones: x.iter().map(|&b| b as usize).sum(),
            codes: [0; 4],
            x,
        };
        for i in 0..ring.x.len() {
            let c = ring.code(i);
            ring.codes[c] += 1;
        }
        ring
    }

    fn code(&self, i: usize) -> usize {
        let l = self.x.len();
        2 * self.x[(i + l - 1) % l] as usize + self.x[(i + 1) % l] as usize
    }

    fn flip(&mut self, i: usize) {
        let l = self.x.len();
        let (left, right) = ((i + l - 1) % l, (i + 1) % l);
        self.codes[self.code(left)] -= 1;
        self.codes[self.code(right)] -= 1;
        self.x[i] ^= 1;
        if self.x[i] == 1 {
            self.ones += 1;
        } else {
            self.ones -= 1;
        }
        self.codes[self.code(left)] += 1;
        self.codes[self.code(right)] += 1;
    }
}

/// Time-weighted site counts, split into batches over the observed span.
struct Occupation {
    start: f64,
    end: f64,
    batch_len: f64,
    ones: Vec<f64>,
    codes: Vec<[f64; 4]>,
}

impl Occupation {
    fn new(start: f64, end: f64) -> Self {
        Occupation {
            start,
            end,
            batch_len: (end - start) / BATCHES as f64,
            ones: vec![0.0; BATCHES],
            codes: vec![[0.0; 4]; BATCHES],
        }
    }

    fn add(&mut self, t0: f64, t1: f64, ring: &Ring) {
        let (mut a, b) = (t0.max(self.start), t1.min(self.end));
        while a < b {
            let k = (((a - self.start) / self.batch_len) as usize).min(BATCHES - 1);
            let edge = if k + 1 == BATCHES {
                b
            } else {
                b.min(self.start + (k + 1) as f64 * self.batch_len)
            };
            let dt = edge - a;
            self.ones[k] += dt * ring.ones as f64;
            for (w, &c) in self.codes[k].iter_mut().zip(&ring.codes) {
                *w += dt * c as f64;
            }
            if edge <= a {
                break;
            }
            a = edge;
        }
    }

    fn stats(&self, ones: f64, codes: [f64; 4], span: f64, l: usize) -> OccupationStats {
        let norm = span * l as f64;
        let one = ones / norm;
        OccupationStats {
            one_site: [1.0 - one, one],
            pairs: codes.map(|c| c / norm),
            total_time: span,
        }
    }

    fn finish(&self, cfg: &SimConfig) -> (OccupationStats, BatchSummary) {
        let l = cfg.ring_size;
        let ones: f64 = self.ones.iter().sum();
        let mut codes = [0.0; 4];
        for c in &self.codes {
            for m in 0..4 {
                codes[m] += c[m];
            }
        }
        let overall = self.stats(ones, codes, self.end - self.start, l);
        let per_batch: Vec<(f64, f64)> = (0..BATCHES)
            .map(|k| {
                let s = self.stats(self.ones[k], self.codes[k], self.batch_len, l);
                estimate_mu(&s, &cfg.params).expect("batches have positive length")
            })
            .collect();
        let pairs: Vec<f64> = per_batch.iter().map(|m| m.0).collect();
        let site: Vec<f64> = per_batch.iter().map(|m| m.1).collect();
        let summary = BatchSummary {
            mu_pairs: Estimate::from_samples(&pairs),
            mu_site: Estimate::from_samples(&site),
            batch_mu_site: site,
        };
        (overall, summary)
    }
}

fn run(cfg: &SimConfig, windows: &[Vec<usize>], replication: u64) -> SimOutcome {
    let l = cfg.ring_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(replication);
    let mut ring = Ring::new(initial_state(cfg, &mut rng));

    let mut site_windows: Vec<Vec<usize>> = vec![Vec::new(); l];
    for (k, w) in windows.iter().enumerate() {
        for &s in w {
            site_windows[s].push(k);
        }
    }
    let mut series: Vec<ProfitSeries> = windows
        .iter()
        .map(|w| ProfitSeries::new(w.clone()))
        .collect();
    let sample_times = cfg.grid.times(cfg.horizon, cfg.samples);
    let mut next_sample = 0;
    let mut occupation = Occupation::new(cfg.burn_in * cfg.horizon, cfg.horizon);
    let mut digest = Fnv::new();
    let rate = l as f64;
    let p = cfg.params;
    let mut t = 0.0;
    let mut events = 0u64;

    loop {
        let next = t - (1.0 - rng.gen::<f64>()).ln() / rate;
        let stop = next > cfg.horizon;
        let until = if stop { cfg.horizon } else { next };
        occupation.add(t, until, &ring);
        while next_sample < sample_times.len() && sample_times[next_sample] <= until {
            for s in series.iter_mut() {
                let v = s.profit_per_player();
                s.samples.push((sample_times[next_sample], v));
            }
            next_sample += 1;
        }
        if stop {
            break;
        }
        t = next;
        let site = rng.gen_range(0..l);
        let u: f64 = rng.gen();
        let won = u < p.p(ring.code(site));
        let flips = won == (ring.x[site] == 0);
        if flips {
            ring.flip(site);
        }
        for &k in &site_windows[site] {
            if won {
                series[k].wins += 1;
            } else {
                series[k].losses += 1;
            }
        }
        events += 1;
        digest.write(&t.to_bits().to_le_bytes());
        digest.write(&(site as u32).to_le_bytes());
        digest.write(&[won as u8 | (flips as u8) << 1]);
    }

    let (occupation, batches) = occupation.finish(cfg);
    SimOutcome {
        replication,
        series,
        occupation,
        batches,
        events,
        digest: digest.hex(),
    }
}

/// Pooled estimates on rings of size `L` and `2L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCheck {
    pub ring_size: usize,
    pub base: Pooled,
    pub doubled: Pooled,
    /// `|mu(2L) - mu(L)|` for the one-site estimator.
    pub shift: f64,
    /// Combined standard error of the two estimates.
    pub sigma: f64,
    pub converged: bool,
}

/// Compares the one-site estimate of `mu` on rings of size `L` and `2L`.
pub fn lattice_convergence(
    cfg: &SimConfig,
    replications: usize,
    exec: Exec,
) -> Result<LatticeCheck> {
    let base_runs = simulate_replications(cfg, &[], replications, exec)?;
    let mut big = cfg.clone();
    big.ring_size *= 2;
    if let InitialState::AlternatingWithDefect { .. } = big.initial {
        big.ring_size += 1;
    }
    let big_runs = simulate_replications(&big, &[], replications, exec)?;
    let base = pool(&base_runs, &cfg.params, cfg.horizon);
    let doubled = pool(&big_runs, &cfg.params, cfg.horizon);
    let shift = (doubled.mu_site.mean - base.mu_site.mean).abs();
    let sigma = base.mu_site.std_error.hypot(doubled.mu_site.std_error);
    Ok(LatticeCheck {
        ring_size: cfg.ring_size,
        base,
        doubled,
        shift,
        sigma,
        converged: shift < sigma,
    })
}
