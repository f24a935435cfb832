//! `dendrolearn` command-line front end.
//!
//! Exit codes: 0 success, 2 input or usage error, 3 capacity exceeded.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dendrolearn::Penalty;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "dendrolearn", version, about = "MDL structure learning for categorical data")]
struct Cli {
    /// Print progress details on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a structure and its parameters from a CSV file.
    Learn(LearnArgs),
    /// Score a saved model against a CSV file.
    Score(ScoreArgs),
    /// Fill `?` cells of a CSV file with their most probable values.
    Impute(ImputeArgs),
    /// Sample records from a saved model.
    Generate(GenerateArgs),
    /// Count state-decomposition models.
    CountModels(CountArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Forest,
    BbnGreedy,
    BbnExhaustive,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "forest")]
    pub method: Method,
    /// mdl, aic, ml or custom:<c>
    #[arg(long, default_value = "mdl", value_parser = parse_penalty)]
    pub penalty: Penalty,
    /// Attribute ordering for the BBN searches: `natural` or a comma list of
    /// column names or 1-based column positions.
    #[arg(long, default_value = "natural")]
    pub ordering: String,
    #[arg(long, default_value_t = dendrolearn::bbn::DEFAULT_MAX_PARENTS)]
    pub max_parents: usize,
    /// Dirichlet smoothing parameter for the fitted tables.
    #[arg(long, default_value_t = dendrolearn::model::DEFAULT_DIRICHLET_A)]
    pub a: f64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to the penalty recorded in the model file, else mdl.
    #[arg(long, value_parser = parse_penalty)]
    pub penalty: Option<Penalty>,
    /// Also report the exact Dirichlet mixture code length.
    #[arg(long)]
    pub exact: bool,
    /// Dirichlet parameter for `--exact`; defaults to the model's.
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a `posterior` column with the probability of each completion.
    #[arg(long)]
    pub posterior: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Number of records.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CountArgs {
    /// Comma-separated cardinalities of the attributes, class last.
    #[arg(long)]
    pub cards: Option<String>,
    /// Size of a single predictor domain.
    #[arg(long)]
    pub m: Option<usize>,
}

fn parse_penalty(s: &str) -> Result<Penalty, String> {
    s.parse().map_err(|e: dendrolearn::Error| e.to_string())
}

fn configure_threads() -> Result<(), dendrolearn::Error> {
    let Ok(raw) = std::env::var("DENDROLEARN_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        dendrolearn::Error::Argument(format!("DENDROLEARN_THREADS must be an integer, got `{raw}`"))
    })?;
    if threads > 0 {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        let r = match cli.command {
            Command::Learn(args) => commands::learn(&args, cli.verbose, &mut out),
            Command::Score(args) => commands::score(&args, &mut out),
            Command::Impute(args) => commands::impute(&args, &mut out),
            Command::Generate(args) => commands::generate(&args, &mut out),
            Command::CountModels(args) => commands::count_models(&args, &mut out),
        };
        r.and_then(|()| out.flush().map_err(Into::into))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_capacity() { 3 } else { 2 })
        }
    }
}
