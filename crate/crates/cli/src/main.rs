//! `superband` — synthesize, propagate, and analyze superbandwidth
//! wavepackets from the command line. All commands are deterministic:
//! the same config and seed reproduce byte-identical outputs.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Ctx, CliError};
use config::{parse_times, OutputFormat, SimConfig};

#[derive(Parser)]
#[command(name = "superband", version, about = "Superbandwidth wavepacket simulator")]
struct Cli {
    /// INI configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Interference parameter alpha (overrides the config).
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Comma-separated output times (overrides the config).
    #[arg(long, global = true)]
    times: Option<String>,

    /// Output file formats.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Worker threads for trajectory integration.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the state and dump field, density, and local momentum
    /// per configured time.
    Evolve,
    /// Recompute the extremum table and diff it against the embedded
    /// reference values.
    Table1 {
        /// Scale factor applied to every cell tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Time-integrated probability flux through two planes, both routes.
    Flux,
    /// Guided trajectories, extremum tagging, and (when asymptotic) the
    /// velocity histogram.
    Bohm,
    /// Free classical ensembles: showcase preset and a seeded draw.
    Classical,
    /// Local-momentum lobe slope over alpha and the critical alpha.
    SweepAlpha,
}

fn load_config(cli: &Cli) -> Result<SimConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            SimConfig::parse(&text).map_err(|e| CliError::Config(e.0))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        cfg.state.alpha = alpha;
    }
    if let Some(times) = &cli.times {
        cfg.run.times = parse_times("times", times).map_err(|e| CliError::Config(e.0))?;
    }
    if let Some(fmt) = cli.format {
        cfg.output.format = match fmt {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        };
    }
    if let Some(out) = &cli.out {
        cfg.output.directory = out.display().to_string();
    }
    cfg.validate().map_err(|e| CliError::Config(e.0))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if cli.threads == 0 {
        return Err(CliError::Config("threads must be positive".into()));
    }
    let ctx = Ctx {
        out: PathBuf::from(&cfg.output.directory),
        threads: cli.threads,
        cfg,
    };
    match &cli.command {
        Command::Evolve => commands::cmd_evolve(&ctx),
        Command::Table1 { tol_scale } => commands::cmd_table1(&ctx, *tol_scale),
        Command::Flux => commands::cmd_flux(&ctx),
        Command::Bohm => commands::cmd_bohm(&ctx),
        Command::Classical => commands::cmd_classical(&ctx),
        Command::SweepAlpha => commands::cmd_sweep_alpha(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("superband: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Health(_) => ExitCode::from(3),
                CliError::ReferenceDiff => ExitCode::from(4),
                CliError::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
