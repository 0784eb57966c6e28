//! Command-line front end for the formation variational integrators.
//!
//! Subcommands: `simulate`, `compare`, `order`, `roa` (driven by a TOML
//! experiment file, see [`config`]) and `alpha` (driven by flags). Exit codes
//! are 0 on success, 1 for configuration errors, 2 for divergence and 3 for
//! I/O errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_alpha, cmd_compare, cmd_order, cmd_roa, cmd_simulate, AlphaArgs, AlphaOutcome,
    CompareReport, RoaReport, RunMetadata, SimulateReport, METADATA_FILE,
};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

/// Environment variable read when `--workers` is absent.
pub const WORKERS_ENV: &str = "FORMVI_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "formvi", version, about = "Forced variational integrators for formation control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write positions and energy.
    Simulate(RunArgs),
    /// Run every `[[runs]]` entry from the same start and cross-check shapes.
    Compare(RunArgs),
    /// Estimate empirical convergence orders.
    Order(RunArgs),
    /// Region-of-attraction sweep.
    Roa(RoaArgs),
    /// Step-size bound for distance-based formations.
    Alpha(AlphaFlags),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to `output` in the config, then `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RoaArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlphaFlags {
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: f64,
    #[arg(long)]
    pub agents: usize,
    #[arg(long)]
    pub edges: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub radius: f64,
    /// Momentum bound `c`.
    #[arg(long = "momentum-bound", default_value_t = 1.0, allow_negative_numbers = true)]
    pub momentum_bound: f64,
    #[arg(long = "max-distance", default_value_t = 1.0, allow_negative_numbers = true)]
    pub max_distance: f64,
    /// Step size to check against the bound.
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Also write `alpha.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load(args: &RunArgs) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply_overrides(args.h, args.kappa);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((cfg, out))
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(args) => {
            let (cfg, out) = load(&args)?;
            let r = cmd_simulate(&cfg, &out)?;
            println!(
                "{} steps with {}; final energy {}; {} force evaluations; wrote {}",
                r.steps_completed,
                r.integrator.name(),
                r.final_energy.map_or("n/a".into(), output::num),
                r.rhs_evals,
                out.display()
            );
        }
        Command::Compare(args) => {
            let (cfg, out) = load(&args)?;
            let r = cmd_compare(&cfg, &out)?;
            for (i, row) in r.rows.iter().enumerate() {
                let same: Vec<&str> = (0..r.rows.len())
                    .filter(|&j| j != i && r.congruent[i][j])
                    .map(|j| r.rows[j].label.as_str())
                    .collect();
                println!(
                    "{}: {} force evaluations, {:.3} s, congruent with [{}]",
                    row.label,
                    row.rhs_evals,
                    row.wall_seconds,
                    same.join(", ")
                );
            }
        }
        Command::Order(args) => {
            let (cfg, out) = load(&args)?;
            for e in cmd_order(&cfg, &out)? {
                println!("{}: slope {}", e.method.name(), output::num(e.slope));
            }
        }
        Command::Roa(args) => {
            let (cfg, out) = load(&args.run)?;
            let r = cmd_roa(&cfg, &out, args.workers)?;
            println!(
                "{} samples on {} workers: converged_congruent {}, converged_other {}, not_converged {}, diverged {}",
                r.samples, r.workers, r.counts[0], r.counts[1], r.counts[2], r.counts[3]
            );
        }
        Command::Alpha(f) => {
            let args = AlphaArgs {
                radius: f.radius,
                momentum_bound: f.momentum_bound,
                kappa: f.kappa,
                num_agents: f.agents,
                num_edges: f.edges,
                max_distance: f.max_distance,
                h: f.h,
            };
            let a = cmd_alpha(&args)?;
            println!("M = {}", output::num(a.m));
            println!("alpha = {}", output::num(a.alpha));
            println!("alpha (2 significant digits) = {}", a.alpha_rounded);
            if let Some(dir) = &f.out {
                std::fs::create_dir_all(dir)?;
                output::write_json(&dir.join("alpha.json"), &a)?;
            }
            if let (Some(h), Some(k)) = (a.h, a.max_steps) {
                println!("max guaranteed steps at h = {h}: {k}");
            }
            if a.violation {
                return Err(CliError::Guarantee {
                    h: a.h.expect("violation implies h"),
                    alpha: a.alpha,
                });
            }
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
