//! `vortex-re`: stability analysis, parameter scans and simulation of point-vortex
//! relative equilibria on the sphere.

mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use config::Params;
use error::CliError;

#[derive(Parser)]
#[command(name = "vortex-re", version, about = "Relative equilibria of point vortices on the sphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one relative equilibrium and write its report as JSON.
    Analyze(Params),
    /// Classify every cell of a parameter plane; CSV (and optionally SVG) output.
    Scan(Params),
    /// Integrate a configuration and report conservation, rigid rotation and growth.
    Simulate(Params),
    /// Run the invariant suite; exit status 1 if any check fails.
    Verify(Params),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, params) = match cli.command {
        Command::Analyze(p) => ("analyze", p),
        Command::Scan(p) => ("scan", p),
        Command::Simulate(p) => ("simulate", p),
        Command::Verify(p) => ("verify", p),
    };
    let p = params.resolve()?;
    if let Some(t) = p.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--threads: {e}")))?;
    }
    match name {
        "analyze" => commands::analyze(&p),
        "scan" => commands::scan(&p),
        "simulate" => commands::simulate(&p),
        _ => commands::verify(&p),
    }
}

fn main() {
    // clap exits with status 2 on malformed flags, matching the invalid-parameter code
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
