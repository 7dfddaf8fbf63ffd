mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wingleg_core::config::ConfigError;
use wingleg_core::Error;

#[derive(Debug, Parser)]
#[command(name = "wingleg", version, about = "Take-off simulation, gaits and locomotion metrics for a legged winged robot")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Scenario file (TOML); the bundled take-off scenario when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plots: bool,
    /// Seed for synthetic noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Validate inputs without running anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a take-off and the following flight.
    Simulate,
    /// Generate joint references for a gait.
    Gait {
        /// Gait mode; overrides the config.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Energetics of a logged run (trajectory, `t,V,I` or `t,I` CSV).
    Metrics {
        file: PathBuf,
        /// Events CSV giving the exact take-off time of a trajectory.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Fit the leg-mass power law to `body_mass_kg,leg_mass_kg` pairs.
    Fit {
        /// Pairs CSV; the bundled allometry fixture when omitted.
        file: Option<PathBuf>,
        /// Relative noise added to the fixture when a seed is given.
        #[arg(long, default_value_t = 0.02)]
        noise: f64,
    },
    /// Full-factorial parameter sweep.
    Sweep,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { source: ConfigError::Invalid(e), .. } | CliError::Core(e) => match e {
                Error::ConstraintDegeneracy { .. }
                | Error::ConstraintRankDeficient { .. }
                | Error::RankDeficiencyRequiresDamping
                | Error::MassMatrixIndefinite
                | Error::IntegrationDiverged { .. }
                | Error::NonConvergence { .. }
                | Error::NoActiveConstraints => 3,
                _ => 2,
            },
            CliError::Config { .. } | CliError::Usage(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Simulate => commands::simulate(g),
        Command::Gait { mode } => commands::gait(g, mode.as_deref()),
        Command::Metrics { file, events } => commands::metrics(g, file, events.as_deref()),
        Command::Fit { file, noise } => commands::fit(g, file.as_deref(), *noise),
        Command::Sweep => commands::sweep(g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
