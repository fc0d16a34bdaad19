//! Reproducible command-line front end for the Anosov contact-metric
//! laboratory. Exit codes: 0 ok, 1 identity violation, 2 config error,
//! 3 numeric failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::CmdError;
use config::Config;

#[derive(Parser)]
#[command(
    name = "anosov-lab",
    version,
    about = "Numerical laboratory for contact Anosov 3-flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML, flat keys).
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,

    /// Output directory for CSVs and the JSON report.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensemble sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Pesin entropy estimate with per-orbit running averages.
    Entropy,
    /// Dirichlet energy of the configured metric (optimizer optional).
    Energy,
    /// Averaged-norm rate uniformization sweep over windows.
    Uniformize,
    /// Torsion, Ricci and sectional curvatures along orbits.
    Curvature,
    /// Ricci realization round-trip from (eta, sigma) fields.
    Realize,
    /// Criticality residual of the canonical algebraic metric.
    Tanno,
    /// Invariant battery; exits 1 on any violation.
    Identities,
    /// Dump one sampled orbit with rates and auxiliary channels.
    Orbit,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }

    let config = match Config::from_path(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };

    let started = Instant::now();
    let result = match cli.command {
        Command::Entropy => commands::cmd_entropy(&config, &cli.out, cli.seed),
        Command::Energy => commands::cmd_energy_with_optimizer(&config, &cli.out, cli.seed),
        Command::Uniformize => commands::cmd_uniformize(&config, &cli.out, cli.seed),
        Command::Curvature => commands::cmd_curvature(&config, &cli.out, cli.seed),
        Command::Realize => commands::cmd_realize(&config, &cli.out, cli.seed),
        Command::Tanno => commands::cmd_tanno(&config, &cli.out, cli.seed),
        Command::Identities => commands::cmd_identities(&config, &cli.out, cli.seed),
        Command::Orbit => commands::cmd_orbit(&config, &cli.out, cli.seed),
    };

    match result {
        Ok(mut report) => {
            report.wall_clock_seconds = started.elapsed().as_secs_f64();
            match report.write(&cli.out) {
                Ok(path) => {
                    println!("report: {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("failed to write report: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Err(CmdError::Identity(msg)) => {
            eprintln!("identity violation: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}
