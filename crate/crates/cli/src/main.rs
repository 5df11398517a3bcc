//! `franson`: batch front end for the dispersion-aware Franson simulator.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use franson::{FransonError, VisibilityMethod};

#[derive(Debug, Parser)]
#[command(
    name = "franson",
    version,
    about = "Dispersion-aware Franson interferometry simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Intrinsic and observed visibility, with Bell significance.
    Visibility(VisibilityArgs),
    /// Coincidence rate versus phase sum as `phi_rad,coincidence_rate` CSV.
    Fringe(FringeArgs),
    /// Observed visibility over a list of pair rates, analytic and simulated.
    AlphaSweep(AlphaSweepArgs),
    /// Gate-level Monte Carlo estimate of the raw visibility.
    Montecarlo(MonteCarloArgs),
    /// Solve long-path fiber lengths for a dispersion target.
    Design(DesignArgs),
    /// Built-in scenario presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    /// List preset names.
    List,
    /// Print a preset's full expansion as a config file.
    Show { name: String },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Experiment config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario preset (see `presets list`).
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Sweep,
    Integral,
}

impl From<MethodArg> for VisibilityMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sweep => VisibilityMethod::PhaseSweep,
            MethodArg::Integral => VisibilityMethod::ComplexIntegral,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunOverrides {
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gates per batch.
    #[arg(long)]
    pub gates: Option<u64>,
    /// Number of batches.
    #[arg(long)]
    pub batches: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VisibilityArgs {
    #[command(flatten)]
    pub source: Source,
    /// Method used for the observed visibility and Bell significance.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Visibility uncertainty for the Bell significance.
    #[arg(long)]
    pub sigma_v: Option<f64>,
    /// Write the fringe CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fringe sample count.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FringeArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub points: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlphaSweepArgs {
    #[command(flatten)]
    pub source: Source,
    /// Mean pairs per gate, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub alphas: Vec<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Skip the Monte Carlo columns.
    #[arg(long)]
    pub analytic_only: bool,
    #[command(flatten)]
    pub run: RunOverrides,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub run: RunOverrides,
    /// Phase points per batch.
    #[arg(long)]
    pub phases: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Per-batch visibilities as `batch,visibility` CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summed coincidence histogram as `offset,counts` CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Raw detection stream of one run at the configured phase.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Design problem file (TOML).
    #[arg(long)]
    pub problem: PathBuf,
    /// Extra fiber catalog layered over the built-in fibers.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Also print the solution as a config fragment for this arm.
    #[arg(long, value_parser = ["signal_arm", "idler_arm"])]
    pub fragment: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] FransonError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                FransonError::Parse(_) | FransonError::Data(_) => 3,
                FransonError::Domain(_)
                | FransonError::Configuration(_)
                | FransonError::Contract(_) => 4,
                FransonError::Infeasible { .. } => 5,
                FransonError::Statistics(_) => 6,
                FransonError::Io { .. } => 7,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Visibility(a) => commands::visibility(a),
        Command::Fringe(a) => commands::fringe(a),
        Command::AlphaSweep(a) => commands::alpha_sweep(a),
        Command::Montecarlo(a) => commands::montecarlo(a),
        Command::Design(a) => commands::design(a),
        Command::Presets { action } => match action {
            PresetAction::List => commands::presets_list(),
            PresetAction::Show { name } => commands::presets_show(&name),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // downstream reader closed early, e.g. `| head`
        Err(CliError::Core(FransonError::Io { source, .. }))
            if source.kind() == std::io::ErrorKind::BrokenPipe =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(FransonError::Infeasible {
                unconstrained: Some(u),
                ..
            }) = &e
            {
                for (name, length) in &u.lengths_mm {
                    eprintln!("  unconstrained {name} = {} mm", report::sci(*length));
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
