//! Command-line front end for `sampleguard`.

pub mod commands;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use sampleguard::logic::Duration;

use commands::{SimulateArgs, SmcArgs};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Usage, I/O, parse and configuration errors.
    pub const FAILURE: i32 = 1;
    /// The sampled formula is violated.
    pub const LTL_VIOLATED: i32 = 2;
    pub const UNSUPPORTED: i32 = 3;
    /// The requirement fails while the sampled formula holds.
    pub const MTL_ONLY: i32 = 4;
    pub const ASSUMPTION: i32 = 5;
}

pub const SEED_ENV: &str = "SAMPLEGUARD_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: exit::FAILURE,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sampleguard", version, about = "Sampled-time monitoring and statistical model checking for grid controllers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite each requirement of a file into its sampled-time form.
    Strengthen {
        formulas: PathBuf,
        /// Sampling period in minutes.
        #[arg(long)]
        delta: Duration,
    },
    /// Check a recorded trace against a requirements file.
    CheckTrace {
        trace: PathBuf,
        formulas: PathBuf,
        /// Sampling period; defaults to the trace header.
        #[arg(long)]
        delta: Option<Duration>,
    },
    /// Run one closed-loop episode and write its trace.
    Simulate {
        grid: PathBuf,
        #[arg(long, default_value = "noop")]
        controller: String,
        #[arg(long, default_value = "120")]
        horizon: Duration,
        #[arg(long, default_value = "5")]
        delta: Duration,
        /// Simulation tick; defaults to a fifth of the sampling period.
        #[arg(long)]
        delta_small: Option<Duration>,
        #[arg(long)]
        seed: Option<u64>,
        /// Requirements; defaults to the grid's own.
        #[arg(long)]
        formulas: Option<PathBuf>,
        /// Overload deadline of the grid's own requirements.
        #[arg(long, default_value = "10")]
        kappa: Duration,
        /// Trace destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the probability that a controller meets its requirements.
    Smc {
        scenario: PathBuf,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Master seed; overrides the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the scenario.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per_trace.csv.
        #[arg(long)]
        csv: bool,
    },
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::failure(format!("{SEED_ENV}: not an unsigned integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Strengthen { formulas, delta } => commands::cmd_strengthen(&formulas, delta, out).map(|()| exit::OK),
        Command::CheckTrace { trace, formulas, delta } => commands::cmd_check_trace(&trace, &formulas, delta, out),
        Command::Simulate {
            grid,
            controller,
            horizon,
            delta,
            delta_small,
            seed,
            formulas,
            kappa,
            out: dest,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => env_seed()?.unwrap_or(0),
            };
            let args = SimulateArgs {
                grid,
                controller,
                horizon,
                delta,
                delta_small,
                seed,
                formulas,
                kappa,
                out: dest,
            };
            commands::cmd_simulate(&args, out).map(|()| exit::OK)
        }
        Command::Smc {
            scenario,
            jobs,
            seed,
            out: dest,
            csv,
        } => {
            let args = SmcArgs {
                scenario,
                jobs,
                out: dest,
                csv,
                seed,
                seed_from_env: env_seed()?,
            };
            commands::cmd_smc(&args, out).map(|(code, _)| code)
        }
    }
}

/// Runs a parsed command line, reporting errors on `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn run_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                exit::FAILURE
            } else {
                exit::OK
            }
        }
    }
}
