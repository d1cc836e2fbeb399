//! Waveform-based earthquake location experiments from the shell:
//! synthetic data generation, single-event location, convergence-domain
//! mapping, method comparison, and an alignment walkthrough.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 location did not
//! converge, 1 runtime failure.

mod commands;
mod config;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, ModeKind};
use hypoloc::exec::ExecMode;
use hypoloc::model::Point;

#[derive(Parser)]
#[command(
    name = "hypoloc",
    version,
    about = "Waveform-based earthquake location experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory for run artifacts.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads; 1 forces fully sequential execution.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate observed seismograms from the configured truth.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Locate one event from a starting hypocenter.
    Locate {
        #[command(flatten)]
        common: Common,
        /// Directory holding a previous synth run; omitted, observations
        /// are synthesized in memory from the config truth.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Starting hypocenter as x,z in km (overrides the config).
        #[arg(long, value_name = "X,Z", value_parser = parse_point)]
        xi0: Option<Point>,
        /// Override the configured location mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Scan a rectangle of starting hypocenters and map which converge.
    Map {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Map both modes on one scan and report the basin area ratio.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Print and export the per-station misfit-vs-shift curves for a
    /// trial hypocenter.
    ShiftDemo {
        #[command(flatten)]
        common: Common,
        /// Trial hypocenter as x,z in km (overrides the config).
        #[arg(long, value_name = "X,Z", value_parser = parse_point)]
        xi0: Option<Point>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    New,
    Conventional,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> ModeKind {
        match m {
            ModeArg::New => ModeKind::New,
            ModeArg::Conventional => ModeKind::Conventional,
        }
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, z) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,z but got {s:?}"))?;
    let parse = |v: &str, name: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("{name} coordinate {v:?} is not a number"))
    };
    Ok(Point::new(parse(x, "x")?, parse(z, "z")?))
}

fn exec_mode(threads: Option<usize>) -> Result<ExecMode> {
    match threads {
        None => Ok(ExecMode::Parallel),
        Some(0) => Err(anyhow!("--threads must be at least 1")),
        Some(1) => Ok(ExecMode::Sequential),
        Some(n) => {
            // a second invocation in one process has already sized the
            // pool; keep going with the existing one
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(ExecMode::Parallel)
        }
    }
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn run(cli: Cli) -> Result<u8, (u8, anyhow::Error)> {
    let common = match &cli.cmd {
        Cmd::Synth { common }
        | Cmd::Locate { common, .. }
        | Cmd::Map { common, .. }
        | Cmd::Compare { common }
        | Cmd::ShiftDemo { common, .. } => common,
    };
    let cfg = FileConfig::load(&common.config).map_err(|e| (EXIT_CONFIG, e))?;
    let exec = exec_mode(common.threads).map_err(|e| (EXIT_CONFIG, e))?;
    let out = common.out.clone();
    // inputs that a command would only trip over mid-run are still
    // configuration problems; settle them before any engine spins up
    match cli.cmd {
        Cmd::Synth { .. } => {
            commands::cmd_synth(&cfg, &out, exec).map_err(|e| (EXIT_RUNTIME, e))?;
            Ok(0)
        }
        Cmd::Locate { data, xi0, mode, .. } => {
            let start = commands::resolve_start(&cfg, xi0).map_err(|e| (EXIT_CONFIG, e))?;
            let observed = match data {
                Some(dir) => {
                    Some(setup::load_observed(&cfg, &dir).map_err(|e| (EXIT_CONFIG, e))?)
                }
                None => None,
            };
            commands::cmd_locate(&cfg, &out, observed, start, mode.map(ModeKind::from), exec)
                .map_err(|e| (EXIT_RUNTIME, e))
        }
        Cmd::Map { mode, .. } => {
            cfg.scan_spec().map_err(|e| (EXIT_CONFIG, e))?;
            commands::cmd_map(&cfg, &out, mode.map(ModeKind::from), exec)
                .map_err(|e| (EXIT_RUNTIME, e))?;
            Ok(0)
        }
        Cmd::Compare { .. } => {
            cfg.scan_spec().map_err(|e| (EXIT_CONFIG, e))?;
            commands::cmd_compare(&cfg, &out, exec).map_err(|e| (EXIT_RUNTIME, e))?;
            Ok(0)
        }
        Cmd::ShiftDemo { xi0, .. } => {
            let start = commands::resolve_start(&cfg, xi0).map_err(|e| (EXIT_CONFIG, e))?;
            commands::cmd_shift_demo(&cfg, &out, start, exec).map_err(|e| (EXIT_RUNTIME, e))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
