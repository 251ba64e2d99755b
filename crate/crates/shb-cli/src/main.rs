//! `shb` — reproducible experiments for the nonsmooth stochastic heavy
//! ball method: single runs, seed sweeps, avoidance experiments,
//! differential-inclusion integration, and the catalog invariant check.
//!
//! Exit codes: 0 ok, 2 validation, 3 divergence, 4 capability.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};

use shb_core::Error;

#[derive(Debug)]
pub struct CliError {
    message: String,
    code: i32,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 2 }
    }

    pub fn divergence(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 3 }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 1 }
    }

    pub fn check_failed(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 1 }
    }

    pub fn exit_code(&self) -> i32 {
        self.code
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Capability(_) => 4,
            _ => 2,
        };
        CliError { message: e.to_string(), code }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

#[derive(Parser)]
#[command(name = "shb", version, about = "stochastic heavy ball experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON configuration file (defaults are used when omitted)
    #[arg(long)]
    config: Option<String>,
    /// catalog problem name shortcut
    #[arg(long)]
    problem: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<String>,
    /// dotted-path overrides, e.g. --set schedule.gamma=0.8
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One recorded run with post-hoc analysis
    Run(CommonArgs),
    /// Many seeds of the same experiment with aggregate statistics
    Sweep(CommonArgs),
    /// Randomized-initialization avoidance experiment
    Avoidance(CommonArgs),
    /// Integrate the limiting differential inclusion
    Di(CommonArgs),
    /// Catalog invariant suite (exit 0 iff all checks pass)
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// reduced probe counts for a fast smoke check
        #[arg(long)]
        quick: bool,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, doc) = config::resolve(
                args.config.as_deref(),
                args.problem.as_deref(),
                args.out.as_deref(),
                &args.sets,
            )?;
            commands::run::execute(&cfg, &doc)
        }
        Command::Sweep(args) => {
            let (cfg, doc) = config::resolve(
                args.config.as_deref(),
                args.problem.as_deref(),
                args.out.as_deref(),
                &args.sets,
            )?;
            commands::sweep::execute(&cfg, &doc)
        }
        Command::Avoidance(args) => {
            let (cfg, doc) = config::resolve(
                args.config.as_deref(),
                args.problem.as_deref(),
                args.out.as_deref(),
                &args.sets,
            )?;
            commands::avoidance::execute(&cfg, &doc)
        }
        Command::Di(args) => {
            let (cfg, doc) = config::resolve(
                args.config.as_deref(),
                args.problem.as_deref(),
                args.out.as_deref(),
                &args.sets,
            )?;
            commands::di::execute(&cfg, &doc)
        }
        Command::Check { common, quick } => {
            let (cfg, _) = config::resolve(
                common.config.as_deref(),
                common.problem.as_deref(),
                common.out.as_deref(),
                &common.sets,
            )?;
            commands::check::execute(&cfg, quick)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
