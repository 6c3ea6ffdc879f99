use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gossiplab_cli::config::{preset, ExperimentConfig, GraphSpec};
use gossiplab_cli::report::VerifyStatus;
use gossiplab_cli::{exit, CliError, Overrides, Run};
use gossiplab_core::sim::Arithmetic;
use gossiplab_core::Schedule;

#[derive(Parser)]
#[command(name = "gossiplab", version, about = "Randomized gossip averaging over unreliable links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Connectivity predicates and structural constants of the selection matrix.
    AnalyzeGraph(Common),
    /// Run an ensemble; JSON statistics, plus CSV traces with --out.
    Simulate(Common),
    /// Empirical epsilon-computation times against the closed-form bounds.
    Tcom(Common),
    /// Average preservation under dependent and independent links.
    PreserveAverage(Common),
    /// Enumeration and random-chain property suites.
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithmeticArg {
    Float,
    Dyadic,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, env = "GOSSIPLAB_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Output directory; reports go to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    arithmetic: Option<ArithmeticArg>,
    /// Trials per ensemble.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

impl Common {
    fn run(self, needs_config: bool) -> Result<Run, CliError> {
        let config = match (&self.config, needs_config) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, false) => preset(GraphSpec::Complete { nodes: 3 }, Schedule::constant(0.5)?),
            (None, true) => return Err(CliError::Config("--config is required".into())),
        };
        let overrides = Overrides {
            seed: self.seed,
            workers: self.workers.map(|w| w as usize),
            out: self.out,
            arithmetic: self.arithmetic.map(|a| match a {
                ArithmeticArg::Float => Arithmetic::Float,
                ArithmeticArg::Dyadic => Arithmetic::Dyadic,
            }),
            trials: self.trials,
        };
        Run::new(config, overrides)
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::AnalyzeGraph(c) => gossiplab_cli::analyze_graph(&c.run(true)?).map(|_| exit::OK),
        Command::Simulate(c) => gossiplab_cli::simulate(&c.run(true)?).map(|_| exit::OK),
        Command::Tcom(c) => gossiplab_cli::tcom(&c.run(true)?).map(|_| exit::OK),
        Command::PreserveAverage(c) => gossiplab_cli::preserve_average(&c.run(false)?).map(|_| exit::OK),
        Command::Verify(c) => {
            let report = gossiplab_cli::verify(&c.run(false)?)?;
            Ok(match report.status {
                VerifyStatus::Pass => exit::OK,
                VerifyStatus::Fail => exit::VERIFICATION,
                VerifyStatus::Inconclusive => exit::INCONCLUSIVE,
            })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gossiplab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
