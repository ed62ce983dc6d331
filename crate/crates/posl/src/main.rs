use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use posl::commands::{report_cmd, run_cmd, simulate_cmd, tune_cmd};
use posl::{CliResult, Overrides};
use posl_core::learners::OutcomeMode;

/// Personalised online super learner for repeated outcomes in panel data.
#[derive(Parser)]
#[command(name = "posl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic panel CSV and schema sidecar to the configured paths.
    Simulate(Common),
    /// Grid-search hyperparameters on the tuning sample.
    Tune(Common),
    /// Forward validation over the working sample.
    Run(Common),
    /// Metrics and plot-ready curves from a predictions file.
    Report {
        #[command(flatten)]
        common: Common,
        /// Defaults to predictions.csv in the output directory.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replaces the simulation, split and learner seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Continuous,
    Binary,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            mode: self.mode.map(|m| match m {
                Mode::Continuous => OutcomeMode::Continuous,
                Mode::Binary => OutcomeMode::Binary,
            }),
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Simulate(c) => simulate_cmd(&c.config, &c.overrides()),
        Command::Tune(c) => tune_cmd(&c.config, &c.overrides()),
        Command::Run(c) => run_cmd(&c.config, &c.overrides()),
        Command::Report { common, predictions } => report_cmd(&common.config, predictions.as_deref(), &common.overrides()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
