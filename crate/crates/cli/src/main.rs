mod bench;
mod meta;
mod report;
mod sr;

use clap::{Parser, Subcommand};
use std::fmt;
use std::process::ExitCode;

/// Symbolic regression with pluggable and evolved selection operators.
#[derive(Parser)]
#[command(name = "metasr", version)]
struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inner symbolic-regression runs.
    #[command(subcommand)]
    Sr(sr::SrCommand),
    /// Operator x dataset x seed grid.
    Bench(bench::BenchArgs),
    /// Meta-evolution of selection operators.
    #[command(subcommand)]
    Meta(meta::MetaCommand),
    /// Tables from earlier outputs.
    #[command(subcommand)]
    Report(report::ReportCommand),
}

/// Bad input from the user: unknown names, missing files, replay misses.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl fmt::Display) -> anyhow::Error {
    UsageError(message.to_string()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Sr(cmd) => sr::run(cmd),
        Command::Bench(args) => bench::run(args),
        Command::Meta(cmd) => meta::run(cmd),
        Command::Report(cmd) => report::run(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<UsageError>()) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
