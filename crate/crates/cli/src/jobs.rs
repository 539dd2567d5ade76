//! Fully resolved commands. A `Job` is what the manifest records, so
//! running the same job again reproduces the same files.

use std::fmt;
use std::fs::{self, File};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use parrondo::chain::{
    classify_ergodicity, closed_form_special, parrondo_check, profit_curve, stationary_with,
    ChainSpec, ErgodicityVerdict, MuFormulas, MuSource, ParrondoReport, Solver, StationaryOptions,
};
use parrondo::regions::{estimate_volumes, region_report, VolumeDim};
use parrondo::sim::{
    pool, simulate_replications, special_walk_replications, Estimate, InitialState, SimConfig,
    SpecialWalkConfig,
};
use parrondo::{Error, Exec, Params};
use serde::{Deserialize, Serialize};

/// Terminal slopes are fitted over this many trailing curve points.
pub const SLOPE_POINTS: usize = 20;

/// Half-window rates before this time are left out of the reported range.
pub const RATE_RANGE_FROM: f64 = 1000.0;

/// Input the command line accepted but the job cannot use.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Game {
    #[value(name = "A")]
    A,
    #[value(name = "B")]
    B,
    #[value(name = "C")]
    C,
}

impl Game {
    pub fn params(self, base: Params) -> Params {
        match self {
            Game::A => Params::fair(),
            Game::B => base,
            Game::C => base.mix_with_fair(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Auto,
    Power,
    Dense,
}

impl From<SolverChoice> for Solver {
    fn from(s: SolverChoice) -> Self {
        match s {
            SolverChoice::Auto => Solver::Auto,
            SolverChoice::Power => Solver::Power,
            SolverChoice::Dense => Solver::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeJob {
    pub n: u32,
    pub params: Params,
    pub game: Game,
    pub solver: SolverChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Job {
    pub n_list: Vec<u32>,
    pub points: usize,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionsJob {
    pub params: Option<Params>,
    pub volume: Option<VolumeDim>,
    pub samples: u64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Ring,
    /// `(1, p1, p2, 0)` from one defect pair, simulated on the whole lattice.
    SpecialWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateJob {
    pub config: SimConfig,
    pub windows: Vec<Vec<usize>>,
    pub replications: usize,
    pub mode: SimMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanJob {
    pub params: Params,
    pub n_from: u32,
    pub n_to: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Job {
    Analyze(AnalyzeJob),
    Figure1(Figure1Job),
    Regions(RegionsJob),
    Simulate(SimulateJob),
    Scan(ScanJob),
}

/// Files written by a job and what to show the user.
pub struct Outcome {
    pub files: Vec<String>,
    pub summary: String,
    /// The requested quantity does not exist (non-ergodic chain).
    pub refused: bool,
}

impl Job {
    pub fn command(&self) -> &'static str {
        match self {
            Job::Analyze(_) => "analyze",
            Job::Figure1(_) => "figure1",
            Job::Regions(_) => "regions",
            Job::Simulate(_) => "simulate",
            Job::Scan(_) => "scan",
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        match self {
            Job::Regions(r) => r.seed.into_iter().collect(),
            Job::Simulate(s) => vec![s.config.seed],
            _ => Vec::new(),
        }
    }

    pub fn run(&self, dir: &Path) -> Result<Outcome> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        match self {
            Job::Analyze(j) => analyze(j, dir),
            Job::Figure1(j) => figure1(j, dir),
            Job::Regions(j) => regions(j, dir),
            Job::Simulate(j) => simulate(j, dir),
            Job::Scan(j) => scan(j, dir),
        }
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(dir.join(name), &text).with_context(|| format!("writing {name}"))?;
    Ok(text)
}

fn write_csv<T: Serialize>(
    dir: &Path,
    name: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(dir.join(name)).with_context(|| format!("creating {name}"))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StationarySummary {
    mu_formulas: MuFormulas,
    formula_discrepancy: f64,
    marginal_1: [f64; 2],
    marginal_13: [[f64; 2]; 2],
    residual: f64,
    iterations: usize,
    solver: Solver,
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: u32,
    game: Game,
    params: Params,
    verdict: ErgodicityVerdict,
    mu: Option<f64>,
    mu_source: MuSource,
    stationary: Option<StationarySummary>,
    parrondo: Option<ParrondoReport>,
}

fn analyze(job: &AnalyzeJob, dir: &Path) -> Result<Outcome> {
    let used = job.game.params(job.params);
    let spec = ChainSpec::new(job.n, used)?;
    let verdict = classify_ergodicity(&spec);
    let opts = StationaryOptions {
        solver: job.solver.into(),
        ..StationaryOptions::default()
    };
    let (mu, mu_source, summary) = if verdict.ergodic {
        let r = stationary_with(&spec, &opts)?;
        let s = StationarySummary {
            mu_formulas: r.mu_formulas,
            formula_discrepancy: r.formula_discrepancy,
            marginal_1: r.marginal_1,
            marginal_13: r.marginal_13,
            residual: r.residual,
            iterations: r.iterations,
            solver: r.solver,
        };
        (Some(r.mu), MuSource::Stationary, Some(s))
    } else {
        let [p0, p1, p2, p3] = used.as_array();
        match (p0 == 1.0 && p3 == 0.0)
            .then(|| closed_form_special(job.n, p1, p2).ok())
            .flatten()
        {
            Some(mu) => (Some(mu), MuSource::ClosedForm, None),
            None => (None, MuSource::Unavailable, None),
        }
    };
    let parrondo = match job.game {
        Game::A => None,
        Game::B | Game::C => match parrondo_check(job.n, job.params) {
            Ok(r) => Some(r),
            Err(Error::GameCNotErgodic(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };
    let report = AnalyzeReport {
        n: job.n,
        game: job.game,
        params: used,
        verdict,
        mu,
        mu_source,
        stationary: summary,
        parrondo,
    };
    let text = write_json(dir, "analyze.json", &report)?;
    Ok(Outcome {
        files: vec!["analyze.json".into()],
        summary: text,
        refused: mu.is_none(),
    })
}

#[derive(Serialize)]
struct CurveRow {
    n: usize,
    profit_per_player: f64,
}

#[derive(Serialize)]
struct CurveSummary {
    players: u32,
    game: Game,
    params: Params,
    file: String,
    terminal_slope: Option<f64>,
}

fn figure1(job: &Figure1Job, dir: &Path) -> Result<Outcome> {
    if job.n_list.is_empty() {
        return Err(invalid("--n-list is empty"));
    }
    if job.points == 0 {
        return Err(invalid("--points must be at least 1"));
    }
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for &n in &job.n_list {
        for game in [Game::B, Game::C] {
            let params = game.params(job.params);
            let curve = profit_curve(&ChainSpec::new(n, params)?, job.points)?;
            let name = format!("figure1_n{n}_{game:?}.csv");
            write_csv(
                dir,
                &name,
                curve.points.iter().map(|p| CurveRow {
                    n: p.n,
                    profit_per_player: p.mean_profit_per_player,
                }),
            )?;
            summary.push(CurveSummary {
                players: n,
                game,
                params,
                file: name.clone(),
                terminal_slope: curve.terminal_slope(SLOPE_POINTS),
            });
            files.push(name);
        }
    }
    let text = write_json(dir, "figure1_summary.json", &summary)?;
    files.push("figure1_summary.json".into());
    Ok(Outcome {
        files,
        summary: text,
        refused: false,
    })
}

#[derive(Serialize)]
struct VolumeRow {
    region: &'static str,
    estimate: f64,
    std_error: f64,
    hits: u64,
}

fn regions(job: &RegionsJob, dir: &Path) -> Result<Outcome> {
    match (job.params, job.volume) {
        (Some(p), None) => {
            let text = write_json(dir, "regions.json", &region_report(&p))?;
            Ok(Outcome {
                files: vec!["regions.json".into()],
                summary: text,
                refused: false,
            })
        }
        (None, Some(dim)) => {
            let seed = job
                .seed
                .ok_or_else(|| invalid("--volume needs an explicit --seed"))?;
            let table = estimate_volumes(dim, job.samples, seed, Exec::default())?;
            let rows: Vec<VolumeRow> = table
                .rows
                .iter()
                .map(|r| VolumeRow {
                    region: r.region.name(),
                    estimate: r.estimate,
                    std_error: r.std_error,
                    hits: r.hits,
                })
                .collect();
            write_csv(dir, "volumes.csv", &rows)?;
            write_json(dir, "volumes.json", &table)?;
            let mut text = String::from("region          estimate   std_error\n");
            for r in &rows {
                text += &format!("{:<15} {:.6}   {:.6}\n", r.region, r.estimate, r.std_error);
            }
            Ok(Outcome {
                files: vec!["volumes.csv".into(), "volumes.json".into()],
                summary: text,
                refused: false,
            })
        }
        _ => Err(invalid("give exactly one of --params or --volume")),
    }
}

/// Parses `"0;1,2,3;4-7"` into windows.
pub fn parse_windows(s: &str) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let mut w = Vec::new();
        for item in part.split(',').map(str::trim) {
            let num = |t: &str| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid(format!("bad window entry {item:?}")))
            };
            match item.split_once('-') {
                Some((a, b)) => {
                    let (a, b) = (num(a)?, num(b)?);
                    if a > b {
                        return Err(invalid(format!("empty range {item:?}")));
                    }
                    w.extend(a..=b);
                }
                None => w.push(num(item)?),
            }
        }
        out.push(w);
    }
    Ok(out)
}

/// Picks the exact lattice walk when the config describes one.
pub fn sim_mode(config: &SimConfig) -> SimMode {
    let special = config.params.is_alternating_family()
        && matches!(config.initial, InitialState::AlternatingWithDefect { .. });
    if special {
        SimMode::SpecialWalk
    } else {
        SimMode::Ring
    }
}

#[derive(Serialize)]
struct RingRow<'a> {
    replication: u64,
    events: u64,
    mu_pairs: f64,
    mu_site: f64,
    batch_mu_site_se: f64,
    digest: &'a str,
}

#[derive(Serialize)]
struct SeriesRow {
    time: f64,
    profit_per_player: f64,
}

#[derive(Serialize)]
struct PatternRow {
    pattern: &'static str,
    weight: f64,
}

#[derive(Serialize)]
struct WalkRow<'a> {
    replication: u64,
    events: u64,
    jumps: u64,
    profit_rate: f64,
    excursions: usize,
    half_window_min: Option<f64>,
    half_window_max: Option<f64>,
    digest: &'a str,
}

#[derive(Serialize)]
struct ExcursionRow {
    return_time: u64,
    profit: u64,
}

#[derive(Serialize)]
struct WalkSummary {
    mode: SimMode,
    window_size: usize,
    replications: usize,
    /// Pooled profit per player per unit time. For an odd window this has no
    /// limit; see the half-window range instead.
    profit_rate: Estimate,
    half_window_min: Option<f64>,
    half_window_max: Option<f64>,
}

#[derive(Serialize)]
struct RingSummary {
    mode: SimMode,
    pooled: parrondo::sim::Pooled,
    /// Batch-means estimates of replication 0.
    batch_mu_pairs: Estimate,
    batch_mu_site: Estimate,
}

fn simulate(job: &SimulateJob, dir: &Path) -> Result<Outcome> {
    match job.mode {
        SimMode::Ring => simulate_ring(job, dir),
        SimMode::SpecialWalk => simulate_walk(job, dir),
    }
}

fn simulate_ring(job: &SimulateJob, dir: &Path) -> Result<Outcome> {
    let cfg = &job.config;
    let runs = simulate_replications(cfg, &job.windows, job.replications, Exec::default())?;
    let mut files = Vec::new();
    let rows: Vec<RingRow> = runs
        .iter()
        .map(|o| {
            let (mu_pairs, mu_site) = o.mu(&cfg.params);
            RingRow {
                replication: o.replication,
                events: o.events,
                mu_pairs,
                mu_site,
                batch_mu_site_se: o.batches.mu_site.std_error,
                digest: &o.digest,
            }
        })
        .collect();
    write_csv(dir, "replications.csv", &rows)?;
    files.push("replications.csv".to_string());
    for o in &runs {
        for (k, s) in o.series.iter().enumerate() {
            let name = format!("profit_r{}_w{k}.csv", o.replication);
            write_csv(
                dir,
                &name,
                s.samples
                    .iter()
                    .map(|&(time, profit_per_player)| SeriesRow {
                        time,
                        profit_per_player,
                    }),
            )?;
            files.push(name);
        }
        let occ = &o.occupation;
        let patterns = [
            ("x0=0", occ.one_site[0]),
            ("x0=1", occ.one_site[1]),
            ("00", occ.pairs[0]),
            ("01", occ.pairs[1]),
            ("10", occ.pairs[2]),
            ("11", occ.pairs[3]),
        ];
        let name = format!("occupation_r{}.csv", o.replication);
        write_csv(
            dir,
            &name,
            patterns.map(|(pattern, weight)| PatternRow { pattern, weight }),
        )?;
        files.push(name);
    }
    let summary = RingSummary {
        mode: SimMode::Ring,
        pooled: pool(&runs, &cfg.params, cfg.horizon),
        batch_mu_pairs: runs[0].batches.mu_pairs,
        batch_mu_site: runs[0].batches.mu_site,
    };
    let text = write_json(dir, "summary.json", &summary)?;
    files.push("summary.json".into());
    Ok(Outcome {
        files,
        summary: text,
        refused: false,
    })
}

fn walk_config(job: &SimulateJob) -> Result<SpecialWalkConfig> {
    let cfg = &job.config;
    let InitialState::AlternatingWithDefect { kind, position } = cfg.initial else {
        return Err(invalid(
            "the lattice walk needs an alternating-with-defect start",
        ));
    };
    let window_size = match job.windows.as_slice() {
        [] => 1,
        [w] if !w.is_empty() && w.iter().copied().eq(1..=w.len()) => w.len(),
        _ => {
            return Err(invalid(
                "the lattice walk tracks one window of the form 1..k, e.g. --windows 1-4",
            ))
        }
    };
    let [_, p1, p2, _] = cfg.params.as_array();
    Ok(SpecialWalkConfig {
        p1,
        p2,
        defect: kind,
        position: position as i64,
        horizon: cfg.horizon,
        seed: cfg.seed,
        window_size,
        samples: cfg.samples,
        grid: cfg.grid,
    })
}

fn simulate_walk(job: &SimulateJob, dir: &Path) -> Result<Outcome> {
    let wcfg = walk_config(job)?;
    let runs = special_walk_replications(&wcfg, job.replications, Exec::default())?;
    let mut files = Vec::new();
    let ranges: Vec<Option<(f64, f64)>> = runs
        .iter()
        .map(|o| o.series.half_window_range(RATE_RANGE_FROM))
        .collect();
    let rows: Vec<WalkRow> = runs
        .iter()
        .zip(&ranges)
        .map(|(o, r)| WalkRow {
            replication: o.replication,
            events: o.events,
            jumps: o.jumps,
            profit_rate: o.series.profit_per_player() / wcfg.horizon,
            excursions: o.excursions.len(),
            half_window_min: r.map(|r| r.0),
            half_window_max: r.map(|r| r.1),
            digest: &o.digest,
        })
        .collect();
    write_csv(dir, "replications.csv", &rows)?;
    files.push("replications.csv".to_string());
    for o in &runs {
        let name = format!("profit_r{}.csv", o.replication);
        write_csv(
            dir,
            &name,
            o.series
                .samples
                .iter()
                .map(|&(time, profit_per_player)| SeriesRow {
                    time,
                    profit_per_player,
                }),
        )?;
        files.push(name);
        let name = format!("excursions_r{}.csv", o.replication);
        let ex = &o.excursions;
        write_csv(
            dir,
            &name,
            ex.return_times
                .iter()
                .zip(&ex.profits)
                .map(|(&return_time, &profit)| ExcursionRow {
                    return_time,
                    profit,
                }),
        )?;
        files.push(name);
    }
    let rates: Vec<f64> = rows.iter().map(|r| r.profit_rate).collect();
    let all: Vec<(f64, f64)> = ranges.iter().flatten().copied().collect();
    let summary = WalkSummary {
        mode: SimMode::SpecialWalk,
        window_size: wcfg.window_size,
        replications: runs.len(),
        profit_rate: Estimate::from_samples(&rates),
        half_window_min: all.iter().map(|r| r.0).reduce(f64::min),
        half_window_max: all.iter().map(|r| r.1).reduce(f64::max),
    };
    let text = write_json(dir, "summary.json", &summary)?;
    files.push("summary.json".into());
    Ok(Outcome {
        files,
        summary: text,
        refused: false,
    })
}

#[derive(Serialize)]
struct ScanRow {
    n: u32,
    mu_b: Option<f64>,
    mu_b_source: &'static str,
    mu_c: Option<f64>,
    effect: &'static str,
    note: String,
}

fn scan(job: &ScanJob, dir: &Path) -> Result<Outcome> {
    if job.n_from > job.n_to {
        return Err(invalid("--n-from exceeds --n-to"));
    }
    // Validate the range before fanning out.
    ChainSpec::new(job.n_from, job.params)?;
    ChainSpec::new(job.n_to, job.params)?;
    let ns: Vec<u32> = (job.n_from..=job.n_to).collect();
    let results = Exec::default().map(ns.len(), |k| (ns[k], parrondo_check(ns[k], job.params)));
    let mut rows = Vec::new();
    for (n, r) in results {
        rows.push(match r {
            Ok(r) => ScanRow {
                n,
                mu_b: r.mu_b,
                mu_b_source: match r.mu_b_source {
                    MuSource::Stationary => "stationary",
                    MuSource::ClosedForm => "closed-form",
                    MuSource::Unavailable => "unavailable",
                },
                mu_c: Some(r.mu_c),
                effect: match r.effect {
                    parrondo::chain::Effect::Present => "present",
                    parrondo::chain::Effect::Absent => "absent",
                    parrondo::chain::Effect::Anti => "anti",
                    parrondo::chain::Effect::Undefined => "undefined",
                },
                note: String::new(),
            },
            Err(Error::GameCNotErgodic(v)) => ScanRow {
                n,
                mu_b: None,
                mu_b_source: "unavailable",
                mu_c: None,
                effect: "undefined",
                note: format!("game C not ergodic ({})", v.case_label),
            },
            Err(e) => return Err(e.into()),
        });
    }
    write_csv(dir, "scan.csv", &rows)?;
    let text = fs::read_to_string(dir.join("scan.csv"))?;
    Ok(Outcome {
        files: vec!["scan.csv".into()],
        summary: text,
        refused: false,
    })
}
