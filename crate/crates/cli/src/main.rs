mod jobs;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use parrondo::regions::VolumeDim;
use parrondo::sim::SimConfig;
use parrondo::{Error, Params};

use jobs::{
    invalid, parse_windows, sim_mode, AnalyzeJob, Figure1Job, Game, InputError, Job, RegionsJob,
    ScanJob, SimMode, SimulateJob, SolverChoice,
};
use manifest::RunManifest;

const EXIT_REFUSED: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(
    name = "parrondo",
    version,
    about = "Cooperative Parrondo games on a ring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ergodicity, stationary mean profit and Parrondo verdict for one ring.
    Analyze {
        #[arg(long)]
        n: u32,
        /// Game B biases p0,p1,p2,p3.
        #[arg(long, value_parser = parse_params)]
        params: Params,
        #[arg(long, value_enum, ignore_case = true)]
        game: Game,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverChoice,
        #[arg(long, default_value = "parrondo-out")]
        out: PathBuf,
    },
    /// Mean profit per player after each of the first turns, games B and C.
    Figure1 {
        #[arg(long, value_delimiter = ',', default_values_t = [12u32, 13])]
        n_list: Vec<u32>,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, value_parser = parse_params, default_value = "1,0.75,0.75,0")]
        params: Params,
        #[arg(long, default_value = "parrondo-out")]
        out: PathBuf,
    },
    /// Lattice ergodicity conditions at one point, or region volumes.
    Regions {
        #[arg(long, value_parser = parse_params, conflicts_with = "volume", required_unless_present = "volume")]
        params: Option<Params>,
        #[arg(long, value_parser = parse_dim)]
        volume: Option<VolumeDim>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, required_if_eq_any = [("volume", "3d"), ("volume", "4d")])]
        seed: Option<u64>,
        #[arg(long, default_value = "parrondo-out")]
        out: PathBuf,
    },
    /// Simulate the spin system from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Windows of sites, e.g. "0;0,1;4-7". Defaults to site 0 on the
        /// ring and site 1 for the lattice walk.
        #[arg(long)]
        windows: Option<String>,
        #[arg(long, default_value_t = 1)]
        replications: usize,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "parrondo-out")]
        out: PathBuf,
    },
    /// Exact means of games B and C over a range of ring sizes.
    Scan {
        #[arg(long, value_parser = parse_params)]
        params: Params,
        #[arg(long, default_value_t = 3)]
        n_from: u32,
        #[arg(long)]
        n_to: u32,
        #[arg(long, default_value = "parrondo-out")]
        out: PathBuf,
    },
    /// Rerun the job recorded in a manifest and compare output digests.
    Replay {
        manifest: PathBuf,
        #[arg(long, default_value = "parrondo-replay")]
        out: PathBuf,
    },
}

fn parse_params(s: &str) -> std::result::Result<Params, String> {
    s.parse::<Params>().map_err(|e| e.to_string())
}

fn parse_dim(s: &str) -> std::result::Result<VolumeDim, String> {
    match s.to_ascii_lowercase().as_str() {
        "3d" => Ok(VolumeDim::Slice3d),
        "4d" => Ok(VolumeDim::Full4d),
        _ => Err(format!("expected 3d or 4d, got {s:?}")),
    }
}

fn read_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("bad config {}: {e}", path.display())))
}

fn resolve(command: Command) -> Result<(Job, PathBuf)> {
    Ok(match command {
        Command::Analyze {
            n,
            params,
            game,
            solver,
            out,
        } => (
            Job::Analyze(AnalyzeJob {
                n,
                params,
                game,
                solver,
            }),
            out,
        ),
        Command::Figure1 {
            n_list,
            points,
            params,
            out,
        } => (
            Job::Figure1(Figure1Job {
                n_list,
                points,
                params,
            }),
            out,
        ),
        Command::Regions {
            params,
            volume,
            samples,
            seed,
            out,
        } => (
            Job::Regions(RegionsJob {
                params,
                volume,
                samples,
                seed: volume.and(seed),
            }),
            out,
        ),
        Command::Simulate {
            config,
            windows,
            replications,
            seed,
            out,
        } => {
            let mut config = read_config(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let mode = sim_mode(&config);
            let windows = match (windows, &mode) {
                (Some(w), _) => parse_windows(&w)?,
                (None, SimMode::Ring) => vec![vec![0]],
                (None, SimMode::SpecialWalk) => vec![vec![1]],
            };
            (
                Job::Simulate(SimulateJob {
                    config,
                    windows,
                    replications,
                    mode,
                }),
                out,
            )
        }
        Command::Scan {
            params,
            n_from,
            n_to,
            out,
        } => (
            Job::Scan(ScanJob {
                params,
                n_from,
                n_to,
            }),
            out,
        ),
        Command::Replay { .. } => unreachable!("replay is handled separately"),
    })
}

fn execute(job: &Job, out: &Path) -> Result<bool> {
    let outcome = job.run(out)?;
    RunManifest::new(job, out, &outcome.files)?.write(out)?;
    print!("{}", outcome.summary);
    Ok(outcome.refused)
}

/// Returns whether every recorded output was reproduced.
fn replay(path: &Path, out: &Path) -> Result<bool> {
    let recorded = RunManifest::read(path)?;
    let outcome = recorded.job.run(out)?;
    let fresh = RunManifest::new(&recorded.job, out, &outcome.files)?;
    fresh.write(out)?;
    let mut all = true;
    for (name, digest) in &recorded.outputs {
        let ok = match fresh.outputs.get(name) {
            Some(d) => d == digest,
            None => false,
        };
        all &= ok;
        println!("{} {name}", if ok { "match   " } else { "MISMATCH" });
    }
    for name in fresh.outputs.keys() {
        if !recorded.outputs.contains_key(name) {
            all = false;
            println!("extra    {name}");
        }
    }
    Ok(all)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::NotErgodic(_) | Error::GameCNotErgodic(_) => EXIT_REFUSED,
            Error::NoConvergence { .. } | Error::Singular | Error::Dimension { .. } => 1,
            _ => EXIT_INVALID,
        };
    }
    if err.downcast_ref::<InputError>().is_some()
        || err.downcast_ref::<serde_json::Error>().is_some()
    {
        return EXIT_INVALID;
    }
    1
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Command::Replay { manifest, out } = cli.command {
        let ok = replay(&manifest, &out).context("replay failed")?;
        return Ok(if ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        });
    }
    let (job, out) = resolve(cli.command)?;
    Ok(if execute(&job, &out)? {
        ExitCode::from(EXIT_REFUSED)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_parse_ranges_and_lists() {
        let w = parse_windows("0; 1,2 ;4-6").unwrap();
        assert_eq!(w, vec![vec![0], vec![1, 2], vec![4, 5, 6]]);
        assert!(parse_windows("3-1").is_err());
        assert!(parse_windows("a").is_err());
    }

    #[test]
    fn job_round_trips_through_json() {
        let job = Job::Regions(RegionsJob {
            params: None,
            volume: Some(VolumeDim::Full4d),
            samples: 10_000,
            seed: Some(9),
        });
        let text = serde_json::to_string(&job).unwrap();
        assert!(text.contains("\"command\":\"regions\""));
        assert_eq!(serde_json::from_str::<Job>(&text).unwrap(), job);
    }

    #[test]
    fn refusals_and_bad_input_map_to_distinct_codes() {
        let spec = parrondo::ChainSpec::new(4, Params::new(1.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let refused = Error::NotErgodic(Box::new(parrondo::classify_ergodicity(&spec)));
        assert_eq!(exit_code(&refused.into()), EXIT_REFUSED);
        assert_eq!(
            exit_code(&Error::InvalidConfig("x".into()).into()),
            EXIT_INVALID
        );
        assert_eq!(exit_code(&invalid("x")), EXIT_INVALID);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), 1);
    }

    #[test]
    fn digest_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            manifest::file_digest(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
