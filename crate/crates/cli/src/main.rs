//! `gapbif`: runs the verification suites from one TOML config and writes CSV, JSON and SVG artifacts.
//!
//! Exit codes: 0 when every requested check passes, 2 for configuration or
//! validation errors, 3 when a suite reports failing verdicts, 1 otherwise.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crate::commands::Outcome;
use crate::config::{ConfigError, RunConfig};
use crate::output::Artifacts;

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SUITE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gapbif", version, about = "Bifurcation from spectral-gap edges: numerical verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq)]
enum Command {
    /// Band functions and gaps.
    Bands,
    /// Gap edges, splitting constants and the coercivity inequalities.
    Split,
    /// Scalings of the cut-off Bloch packets.
    BlochCheck,
    /// Estimates for the gap direction.
    ZetaCheck,
    /// Properties of the convex minorant.
    MinorantCheck,
    /// One nontrivial solution at a given lambda (shifted frame).
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
    },
    /// Branch sweep towards the upper gap edge with rate fits.
    Sweep,
    /// L^p behaviour of the spectral projector.
    LpCheck,
    /// Every suite enabled under [checks], with a JSON report and a summary.
    FullReport,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(ConfigError::Invalid { key: "--jobs".into(), message: "must be at least 1".into() }.into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("configuring the thread pool")?;
    }
    let cfg = load_config(cli)?;
    let mut art = Artifacts::create(&cfg.output_dir, cfg.seed)?;
    let outcome = match cli.command {
        Command::MinorantCheck => commands::cmd_minorant_check(&cfg, &mut art)?,
        cmd => {
            let model = commands::build_model(&cfg)?;
            match cmd {
                Command::Bands => commands::cmd_bands(&cfg, &model, &mut art)?,
                Command::Split => commands::cmd_split(&cfg, &model, &mut art)?,
                Command::BlochCheck => commands::cmd_bloch_check(&cfg, &model, &mut art)?,
                Command::ZetaCheck => commands::cmd_zeta_check(&cfg, &model, &mut art)?,
                Command::Solve { lambda } => commands::cmd_solve(&cfg, &model, lambda, &mut art)?,
                Command::Sweep => commands::cmd_sweep(&cfg, &model, &mut art)?,
                Command::LpCheck => commands::cmd_lp_check(&cfg, &model, &mut art)?,
                Command::FullReport => commands::cmd_full_report(&cfg, &model, &mut art)?,
                Command::MinorantCheck => unreachable!("handled above"),
            }
        }
    };
    for path in art.written() {
        println!("wrote {}", path.display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for s in &outcome.suites {
                println!("{} {}", if s.passed { "PASS" } else { "FAIL" }, s.suite);
                for f in &s.failing {
                    println!("  failing: {f}");
                }
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SUITE)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_OTHER)
            }
        }
    }
}
