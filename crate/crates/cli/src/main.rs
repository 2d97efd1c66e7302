//! Command-line entry point: wires configuration files to the simulation
//! pipelines and writes figure-ready CSV/JSON outputs.

mod context;
mod scenarios;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use context::RunContext;
use pscatter_core::ModelError;

#[derive(Parser, Debug)]
#[command(
    name = "pscatter",
    version,
    about = "Light-scattering simulator for a phonon-coupled emitter in a low-Q cavity"
)]
struct Cli {
    /// Scenario name, or "list" to show the registry.
    scenario: String,

    /// Configuration file (TOML). Relative names also resolve against
    /// $PSCATTER_CONFIG_DIR.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override a config value, e.g. --set phonon.alpha=0.05 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads for sweep points.
    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Seed for synthetic-noise generation.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Write per-point diagnostics JSON.
    #[arg(long)]
    verbose: bool,

    /// Dump the phonon propagator and correlation function to CSV.
    #[arg(long)]
    dump_phonon: bool,
}

fn usage_error(e: &ModelError) -> bool {
    matches!(
        e,
        ModelError::Config(_)
            | ModelError::InvalidParam { .. }
            | ModelError::Parse { .. }
            | ModelError::Io(_)
    )
}

fn run() -> Result<(), (String, u8)> {
    let cli = Cli::parse();

    if cli.scenario == "list" {
        for s in scenarios::registry() {
            println!("{:18} {}", s.name(), s.summary());
        }
        return Ok(());
    }

    let Some(scenario) = scenarios::find(&cli.scenario) else {
        let names: Vec<&str> = scenarios::registry().iter().map(|s| s.name()).collect();
        return Err((
            format!(
                "unknown scenario {:?}; available: {}",
                cli.scenario,
                names.join(", ")
            ),
            2,
        ));
    };

    let ctx = RunContext::build(
        cli.config.as_deref(),
        &cli.set,
        &cli.out,
        cli.workers.max(1),
        cli.seed,
        cli.verbose,
        cli.dump_phonon,
    )
    .map_err(|e| (e.to_string(), 2))?;

    scenario.run(&ctx).map_err(|e| {
        let code = if usage_error(&e) { 2 } else { 1 };
        (e.to_string(), code)
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
