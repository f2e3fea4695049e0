use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stigmergy::harness::{self, ExperimentConfig, ExperimentKind, OutputFormat, Overrides};

#[derive(Parser)]
#[command(name = "stigmergy", version, about = "Stigmergic foraging experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static patch occupancy against the pheromone-free reference
    Validate(Common),
    /// Re-adaptation after the rewarding arm moves
    Adapt(Common),
    /// Mean time to adapt over memory, switch epoch and exploration
    Sweep(Common),
    /// Pheromone/cross-learning equivalence and replicator drift
    Verify(Common),
    /// Fit the sigmoid and deposit quantum to an occupancy CSV
    Fit {
        #[command(flatten)]
        common: Common,
        /// Occupancy CSV to fit (overrides fit.target)
        #[arg(long)]
        target: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Runs (configurations for verify, runs per evaluation for fit)
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Override a configuration key, e.g. --set adapt.epsilon=0.1
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common, extra) = match cli.command {
        Command::Validate(c) => (ExperimentKind::Validate, c, None),
        Command::Adapt(c) => (ExperimentKind::Adapt, c, None),
        Command::Sweep(c) => (ExperimentKind::Sweep, c, None),
        Command::Verify(c) => (ExperimentKind::Verify, c, None),
        Command::Fit { common, target } => (ExperimentKind::Fit, common, target),
    };
    let mut set = common.set;
    if let Some(t) = extra {
        set.push(format!("fit.target={:?}", t.display().to_string()));
    }
    let overrides = Overrides {
        seed: common.seed,
        out_dir: common.out,
        runs: common.runs,
        format: common.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
        set,
    };
    let result = ExperimentConfig::load(common.config.as_deref(), kind, &overrides)
        .and_then(|config| harness::run(&config));
    match result {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
