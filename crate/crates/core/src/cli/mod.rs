//! Command-line front end. Reports go to stdout as JSON, progress to stderr.

mod augment;
mod config;
mod data;
mod evaluate;
mod generate;

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use config::Config;

/// Exit codes other than 0 (success) and 1 (runtime or data error).
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER_BUDGET: u8 = 3;
pub const EXIT_POLICY: u8 = 4;
pub const EXIT_VERIFY: u8 = 5;

/// An error that maps to a specific exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(code: u8, message: impl Into<String>) -> anyhow::Error {
    Failure {
        code,
        message: message.into(),
    }
    .into()
}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    fail(EXIT_USAGE, message)
}

#[derive(Parser, Debug)]
#[command(name = "qpaug", version, about = "Generate, augment, solve and verify LP/QP datasets")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// JSON file whose keys mirror the long flag names; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "QPAUG_JOBS")]
    pub jobs: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a dataset and its manifest.
    Generate(generate::GenerateArgs),
    /// Apply random optimality-preserving transforms to a dataset.
    Augment(augment::AugmentArgs),
    /// Label instances with a reference solver.
    Solve(data::SolveArgs),
    /// Check the KKT conditions of every labeled instance.
    Verify(data::VerifyArgs),
    /// Reassign the train/val/test split of a manifest.
    Split(data::SplitArgs),
    /// Measure the inactive-constraint heuristic against labels.
    HeuristicEval(evaluate::HeuristicEvalArgs),
    /// Export bipartite graphs and optional pooled embeddings.
    Graph(evaluate::GraphArgs),
    /// Mean relative objective error of predictions.
    Metrics(evaluate::MetricsArgs),
}

/// Shared state for a command run.
pub struct Ctx {
    pub config: Config,
    pub jobs: usize,
    pub quiet: bool,
}

impl Ctx {
    pub fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.global.config.as_deref())?;
    let jobs = config.pick(cli.global.jobs, "jobs", 0usize)?;
    let quiet = config.switch(cli.global.quiet, "quiet")?;
    let ctx = Ctx { config, jobs, quiet };
    match cli.command {
        Command::Generate(a) => generate::run(&ctx, a),
        Command::Augment(a) => augment::run(&ctx, a),
        Command::Solve(a) => data::solve(&ctx, a),
        Command::Verify(a) => data::verify(&ctx, a),
        Command::Split(a) => data::split(&ctx, a),
        Command::HeuristicEval(a) => evaluate::heuristic_eval(&ctx, a),
        Command::Graph(a) => evaluate::graph(&ctx, a),
        Command::Metrics(a) => evaluate::metrics(&ctx, a),
    }
}

/// Prints a report as pretty JSON on stdout.
pub fn emit(report: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    Ok(())
}
