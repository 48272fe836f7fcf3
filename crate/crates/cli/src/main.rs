//! Batch runner: loads a TOML configuration, runs one experiment and writes
//! CSV/JSON artifacts plus a hashed manifest into the output directory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{RunConfig, SchemaError};
use output::{sha256_hex, OutputDir};

#[derive(Parser, Debug)]
#[command(
    name = "qlink",
    version,
    about = "Simulate and design itinerant-photon links between transmon qutrits"
)]
struct Cli {
    /// TOML configuration; the bundled reference configuration when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every random stream (tomography shots, Monte Carlo draws).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "QLINK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Emission rate across the photon-frequency sweep.
    GammaF,
    /// Photon emission with the receiver drive off.
    Emit,
    /// Photon absorption at the configured delay.
    Absorb,
    /// State transfer of the cardinal states with process tomography.
    Transfer,
    /// Remote entanglement with two-qutrit tomography.
    Bell,
    /// Error budget of the configured protocol.
    Budget,
    /// Bandwidth map over the resonator design grid.
    DesignSweep,
    /// Fabrication-variation matching yield.
    MonteCarlo,
    /// Matching yield over relative κ and J spreads.
    Sensitivity,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GammaF => "gamma-f",
            Command::Emit => "emit",
            Command::Absorb => "absorb",
            Command::Transfer => "transfer",
            Command::Bell => "bell",
            Command::Budget => "budget",
            Command::DesignSweep => "design-sweep",
            Command::MonteCarlo => "monte-carlo",
            Command::Sensitivity => "sensitivity",
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(SchemaError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    let resolved = cfg.to_toml()?;
    let mut out = OutputDir::create(&cli.out)?;
    match cli.command {
        Command::GammaF => commands::gamma_f_curve(&cfg, &mut out)?,
        Command::Emit => commands::emit(&cfg, &mut out)?,
        Command::Absorb => commands::absorb(&cfg, &mut out)?,
        Command::Transfer => commands::transfer(&cfg, &mut out)?,
        Command::Bell => commands::bell(&cfg, &mut out)?,
        Command::Budget => commands::budget(&cfg, &mut out)?,
        Command::DesignSweep => commands::design_sweep(&cfg, &mut out)?,
        Command::MonteCarlo => commands::monte_carlo(&cfg, &mut out)?,
        Command::Sensitivity => commands::sensitivity(&cfg, &mut out)?,
    }
    out.write_bytes("config.toml", resolved.as_bytes())?;
    let seed = cli.seed.unwrap_or(cfg.monte_carlo.seed);
    out.finish(cli.command.name(), seed, &sha256_hex(resolved.as_bytes()))
}

/// Exit status and error class: 2 for configuration problems, 3 for
/// failures inside the numerics, 1 otherwise.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if e.downcast_ref::<SchemaError>().is_some() {
        return (2, "schema");
    }
    match e.downcast_ref::<qlink::Error>() {
        Some(qlink::Error::InvalidInput(_)) | Some(qlink::Error::DimensionMismatch(_)) => (2, "schema"),
        Some(_) => (3, "numerical"),
        None => (1, "io"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            let body = serde_json::json!({
                "error": kind,
                "exit_code": code,
                "subcommand": cli.command.name(),
                "message": format!("{e:#}"),
            });
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
