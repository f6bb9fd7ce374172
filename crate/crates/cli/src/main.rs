//! `atransn` command-line driver.

mod checkpoint;
mod data;
mod evaluate;
mod manifest;
mod report;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atransn::trainer::Mode;

#[derive(Parser, Debug)]
#[command(
    name = "atransn",
    version,
    about = "Knowledge-graph embedding with adversarial transfer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a teacher graph in plain mode.
    TrainTeacher(train::TeacherArgs),
    /// Train a target graph, optionally with teachers.
    TrainTarget(train::TargetArgs),
    /// Filtered link-prediction metrics of a checkpoint.
    Eval(evaluate::EvalArgs),
    /// Write a checkpoint's embeddings in the text dump format.
    Export(evaluate::ExportArgs),
    /// Generate a synthetic teacher/target world with nested alignments.
    Synth(synth::SynthArgs),
    /// Tabulate metrics files into a CSV and optional plot.
    Report(report::ReportArgs),
}

/// An error caused by the invocation rather than by the run; exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<atransn::Error>() {
        Some(
            atransn::Error::Io { .. } | atransn::Error::Training(_) | atransn::Error::State(_),
        ) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("ATRANSN_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        usage(format!(
            "ATRANSN_THREADS must be a positive integer, got '{value}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("cannot size the thread pool: {e}"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::TrainTeacher(args) => train::train_teacher(args),
        Command::TrainTarget(args) => train::train_target(args),
        Command::Eval(args) => evaluate::eval(args),
        Command::Export(args) => evaluate::export(args),
        Command::Synth(args) => synth::synth(args),
        Command::Report(args) => report::report(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|e| e.to_string())
}

pub fn ensure_dir(dir: &PathBuf) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| atransn::Error::io(dir, e).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&usage("bad flag")), 2);
        assert_eq!(exit_code(&atransn::Error::Config("x".into()).into()), 2);
        assert_eq!(exit_code(&atransn::Error::Vocabulary("x".into()).into()), 2);
        assert_eq!(exit_code(&atransn::Error::Training("nan".into()).into()), 1);
        let io = std::io::Error::other("disk");
        assert_eq!(exit_code(&atransn::Error::io("f", io).into()), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 1);
    }
}
