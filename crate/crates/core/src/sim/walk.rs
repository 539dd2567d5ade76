//! Exact simulation of `(1, p1, p2, 0)` on the integer lattice from a
//! configuration that alternates except for one adjacent equal pair.
//!
//! With `p0 = 1` and `p3 = 0` every site away from the pair plays a
//! deterministic game, so the configuration is determined by the pair's type
//! `b` and the position `i` of its left site. Label `(b, i)` moves as
//!
//! * `(0, i) -> (1, i + 1)` at rate `p1`, `(0, i) -> (1, i - 1)` at rate `p2`;
//! * `(1, i) -> (0, i + 1)` at rate `q2`, `(1, i) -> (0, i - 1)` at rate `q1`,
//!
//! so `b + i (mod 2)` never changes. Excursions are measured on the embedded
//! jump chain of `i` between alternate visits to `+2` and `-2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DefectKind, Fnv, ProfitSeries, SampleGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numeric::fit_line;

/// Excursion levels are `+LEVEL` and `-LEVEL`.
pub const LEVEL: i64 = 2;

/// Fewest excursions [`excursion_tail_check`] accepts.
pub const MIN_EXCURSIONS: usize = 1000;

/// Excursions simulated per RNG stream in [`sample_excursions`].
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectState {
    /// Common value of the two equal adjacent sites.
    pub bit: u8,
    /// Left site of the pair.
    pub position: i64,
}

impl DefectState {
    pub fn new(kind: DefectKind, position: i64) -> Self {
        DefectState {
            bit: kind.bit(),
            position,
        }
    }

    /// 0 for the closed class containing `(0, even)`, 1 otherwise.
    pub fn class(&self) -> u8 {
        ((self.bit as i64 + self.position).rem_euclid(2)) as u8
    }

    /// The state at `position` in the same class.
    fn at(class: u8, position: i64) -> Self {
        DefectState {
            bit: ((class as i64 + position).rem_euclid(2)) as u8,
            position,
        }
    }

    pub fn status(&self, j: i64) -> u8 {
        let i = self.position;
        let dist = if j <= i { i - j } else { j - i - 1 };
        ((self.bit as i64 + dist) % 2) as u8
    }

    fn is_pair_site(&self, j: i64) -> bool {
        j == self.position || j == self.position + 1
    }

    /// Player `j` plays with uniform variate `u`. Returns whether it won and
    /// the new state if its status changed.
    fn play(&self, p1: f64, p2: f64, j: i64, u: f64) -> (bool, Option<DefectState>) {
        let m = 2 * self.status(j - 1) + self.status(j + 1);
        let bias = [1.0, p1, p2, 0.0][m as usize];
        let won = u < bias;
        if won != (self.status(j) == 0) {
            return (won, None);
        }
        debug_assert!(self.is_pair_site(j));
        let position = if j == self.position {
            self.position - 1
        } else {
            self.position + 1
        };
        let next = DefectState {
            bit: 1 - self.bit,
            position,
        };
        (won, Some(next))
    }
}

fn default_window() -> usize {
    1
}

fn default_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialWalkConfig {
    pub p1: f64,
    pub p2: f64,
    pub defect: DefectKind,
    #[serde(default)]
    pub position: i64,
    pub horizon: f64,
    pub seed: u64,
    /// Players `1..=window_size` are tracked.
    #[serde(default = "default_window")]
    pub window_size: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub grid: SampleGrid,
}

impl SpecialWalkConfig {
    pub fn new(p1: f64, p2: f64, horizon: f64, seed: u64) -> Self {
        SpecialWalkConfig {
            p1,
            p2,
            defect: DefectKind::Zeros,
            position: 0,
            horizon,
            seed,
            window_size: 1,
            samples: default_samples(),
            grid: SampleGrid::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_walk_params(self.p1, self.p2)?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.window_size == 0 || self.samples == 0 {
            return Err(Error::InvalidConfig(
                "window size and sample count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// The label chain is irreducible on each class only when all four jump
/// rates are positive.
fn check_walk_params(p1: f64, p2: f64) -> Result<()> {
    for (name, v) in [("p1", p1), ("p2", p2)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "{name} = {v} must lie strictly between 0 and 1"
            )));
        }
    }
    Ok(())
}

/// Samples of the excursion between alternate visits to `+2` and `-2`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExcursionStats {
    /// Jumps of the embedded walk per excursion.
    pub return_times: Vec<u64>,
    /// Absolute window profit accumulated during each excursion.
    pub profits: Vec<u64>,
    /// Excursions stopped at the step cap; longer than every recorded one.
    pub censored: usize,
}

impl ExcursionStats {
    pub fn len(&self) -> usize {
        self.return_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.return_times.is_empty()
    }

    fn extend(&mut self, other: ExcursionStats) {
        self.return_times.extend(other.return_times);
        self.profits.extend(other.profits);
        self.censored += other.censored;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialWalkOutcome {
    pub replication: u64,
    pub config: SpecialWalkConfig,
    pub series: ProfitSeries,
    /// Excursions after the first.
    pub excursions: ExcursionStats,
    pub final_state: DefectState,
    pub jumps: u64,
    pub events: u64,
    pub digest: String,
}

/// Runs stream 0 of `cfg`.
pub fn simulate_special_walk(cfg: &SpecialWalkConfig) -> Result<SpecialWalkOutcome> {
    cfg.validate()?;
    Ok(run_walk(cfg, 0))
}

/// Runs streams `0..count` of `cfg`.
pub fn special_walk_replications(
    cfg: &SpecialWalkConfig,
    count: usize,
    exec: Exec,
) -> Result<Vec<SpecialWalkOutcome>> {
    cfg.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    Ok(exec.map(count, |r| run_walk(cfg, r as u64)))
}

fn run_walk(cfg: &SpecialWalkConfig, stream: u64) -> SpecialWalkOutcome {
    let nw = cfg.window_size as i64;
    let in_window = |j: i64| (1..=nw).contains(&j);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut state = DefectState::new(cfg.defect, cfg.position);
    let class = state.class();
    let mut series = ProfitSeries::new((1..=cfg.window_size).collect());
    let sample_times = cfg.grid.times(cfg.horizon, cfg.samples);
    let mut next_sample = 0;
    let mut digest = Fnv::new();
    let mut excursions = ExcursionStats::default();
    let mut target = LEVEL;
    let mut seen_first = false;
    let mut steps = 0u64;
    let mut profit_mark = 0i64;
    let (mut t, mut jumps, mut events) = (0.0, 0u64, 0u64);

    loop {
        let mut extra = [0i64; 2];
        let mut n_extra = 0;
        for j in [state.position, state.position + 1] {
            if !in_window(j) {
                extra[n_extra] = j;
                n_extra += 1;
            }
        }
        let slots = cfg.window_size + n_extra;
        let next = t - (1.0 - rng.gen::<f64>()).ln() / slots as f64;
        let until = next.min(cfg.horizon);
        while next_sample < sample_times.len() && sample_times[next_sample] <= until {
            series
                .samples
                .push((sample_times[next_sample], series.profit_per_player()));
            next_sample += 1;
        }
        if next > cfg.horizon {
            break;
        }
        t = next;
        let k = rng.gen_range(0..slots);
        let site = if k < cfg.window_size {
            k as i64 + 1
        } else {
            extra[k - cfg.window_size]
        };
        let (won, moved) = state.play(cfg.p1, cfg.p2, site, rng.gen());
        if in_window(site) {
            if won {
                series.wins += 1;
            } else {
                series.losses += 1;
            }
        }
        events += 1;
        digest.write(&t.to_bits().to_le_bytes());
        digest.write(&site.to_le_bytes());
        digest.write(&[won as u8 | (moved.is_some() as u8) << 1]);
        if let Some(s) = moved {
            state = s;
            jumps += 1;
            steps += 1;
            if state.position == target {
                let profit = series.wins as i64 - series.losses as i64;
                if seen_first {
                    excursions.return_times.push(steps);
                    excursions
                        .profits
                        .push((profit - profit_mark).unsigned_abs());
                }
                seen_first = true;
                steps = 0;
                profit_mark = profit;
                target = -target;
            }
        }
    }
    debug_assert_eq!(state.class(), class);
    SpecialWalkOutcome {
        replication: stream,
        config: cfg.clone(),
        series,
        excursions,
        final_state: state,
        jumps,
        events,
        digest: digest.hex(),
    }
}

/// Draws `count` independent excursions of the walk with player 1's profit,
/// starting each stream from `(0, 2)`. Excursions longer than `max_steps`
/// jumps are abandoned, counted as censored, and the walk restarts at the
/// level it was heading for.
pub fn sample_excursions(
    p1: f64,
    p2: f64,
    count: usize,
    max_steps: u64,
    seed: u64,
    exec: Exec,
) -> Result<ExcursionStats> {
    check_walk_params(p1, p2)?;
    if max_steps == 0 {
        return Err(Error::InvalidConfig("step cap must be positive".into()));
    }
    let chunks = count.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let len = CHUNK.min(count - c * CHUNK);
        excursion_chunk(p1, p2, len, max_steps, &mut rng)
    });
    let mut out = ExcursionStats::default();
    for p in parts {
        out.extend(p);
    }
    Ok(out)
}

fn excursion_chunk(
    p1: f64,
    p2: f64,
    count: usize,
    max_steps: u64,
    rng: &mut ChaCha8Rng,
) -> ExcursionStats {
    // Player 1 and the two pair sites each play at rate 1. While player 1 is
    // not in the pair it wins or loses deterministically, so the number of
    // its games before the next pair event is geometric.
    let ln_third = (1.0f64 / 3.0).ln();
    let mut out = ExcursionStats::default();
    let mut state = DefectState::at(0, LEVEL);
    let mut target = -LEVEL;
    while out.len() + out.censored < count {
        let mut steps = 0u64;
        let mut profit = 0i64;
        while state.position != target {
            if steps >= max_steps {
                state = DefectState::at(state.class(), target);
                out.censored += 1;
                break;
            }
            let pair_site = state.position + rng.gen_range(0..2);
            if !state.is_pair_site(1) {
                let games = ((1.0 - rng.gen::<f64>()).ln() / ln_third) as i64;
                let sign = if state.status(1) == 1 { 1 } else { -1 };
                profit += sign * games;
            }
            let (won, moved) = state.play(p1, p2, pair_site, rng.gen());
            if pair_site == 1 {
                profit += if won { 1 } else { -1 };
            }
            if let Some(s) = moved {
                state = s;
                steps += 1;
            }
        }
        if steps < max_steps {
            out.return_times.push(steps);
            out.profits.push(profit.unsigned_abs());
        }
        target = -target;
    }
    out
}

/// Log-log least-squares fit of an empirical survival function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub std_error: f64,
    /// Smallest value in the fitted tail (the 90th percentile).
    pub threshold: u64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub excursions: usize,
    pub censored: usize,
    /// Survival of the return time; the walk predicts slope `-1/2`.
    pub return_time: TailFit,
    /// Survival of the per-excursion profit; also predicted `-1/2`.
    pub profit: TailFit,
}

pub fn excursion_tail_check(stats: &ExcursionStats) -> Result<TailReport> {
    if stats.len() < MIN_EXCURSIONS {
        return Err(Error::TooFewSamples {
            needed: MIN_EXCURSIONS,
            got: stats.len(),
        });
    }
    Ok(TailReport {
        excursions: stats.len(),
        censored: stats.censored,
        return_time: survival_fit(&stats.return_times, stats.censored)?,
        profit: survival_fit(&stats.profits, stats.censored)?,
    })
}

/// Fits `log P(V >= v)` against `log v` at every distinct observed value at
/// or above the 90th percentile. Censored samples count as larger than all
/// observed ones.
fn survival_fit(values: &[u64], censored: usize) -> Result<TailFit> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let total = (sorted.len() + censored) as f64;
    let q90 = sorted[((0.9 * total) as usize).min(sorted.len() - 1)];
    let threshold = q90.max(1);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut k = sorted.partition_point(|&v| v < threshold);
    while k < sorted.len() {
        let v = sorted[k];
        let at_least = (sorted.len() - k + censored) as f64;
        xs.push((v as f64).ln());
        ys.push((at_least / total).ln());
        k = sorted.partition_point(|&w| w <= v);
    }
    let fit = fit_line(&xs, &ys).ok_or(Error::TooFewSamples {
        needed: 3,
        got: xs.len(),
    })?;
    Ok(TailFit {
        slope: fit.slope,
        std_error: fit.slope_se,
        threshold,
        points: xs.len(),
    })
}
