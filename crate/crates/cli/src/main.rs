//! `isolab` command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid input, 3 size cap,
//! 4 failed proof trace or missing certificate.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "isolab", version, about = "Column subsets on which an operator is an almost-isometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test one subset for membership and print the normalized Gram spectrum.
    Check(CheckArgs),
    /// Enumerate the maximal sets of the isomorphism (or suppression) family.
    Enumerate(FamilyArgs),
    /// Solve the marginal game and emit the certified witness measure.
    Witness(FamilyArgs),
    /// Select a large subset for a measure.
    Select(SelectArgs),
    /// Run the two-step pipeline and emit its inequality ledger.
    Trace(TraceArgs),
    /// Estimate empirical constants over generated ensembles.
    Estimate(EstimateArgs),
    /// Probability that a random subset is a member, for the doubling operator.
    Rate(RateArgs),
}

#[derive(Args, Debug)]
pub struct Common {
    /// Matrix file in text format, or a generator `gen:kind:n[:param][:seed]`.
    pub input: String,
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Membership tolerance.
    #[arg(long, default_value_t = isolab::structure::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Treat the input as a zero-diagonal S and test suppression instead.
    #[arg(long, conflicts_with = "epsilon")]
    pub delta: Option<f64>,
    /// Comma-separated zero-based indices.
    #[arg(long)]
    pub sigma: String,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct FamilyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, required_unless_present = "delta")]
    pub epsilon: Option<f64>,
    /// Use the suppression family of the input S instead.
    #[arg(long, conflicts_with = "epsilon")]
    pub delta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub epsilon: f64,
    /// `counting`, `file:PATH` or an inline comma list.
    #[arg(long, default_value = "counting")]
    pub mu: String,
    #[arg(long, value_enum, default_value_t = Method::Exhaustive)]
    pub method: Method,
    #[arg(long = "C", default_value_t = isolab::prooftrace::DEFAULT_C)]
    pub c: f64,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value = "counting")]
    pub mu: String,
    #[arg(long = "C", default_value_t = isolab::prooftrace::DEFAULT_C)]
    pub c: f64,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// One or more generator specs.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Comma-separated ε grid.
    #[arg(long, default_value = "0.5")]
    pub epsilon: String,
    /// Comma-separated C grid.
    #[arg(long = "C", default_value = "2")]
    pub c: String,
    /// Samples per generator.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `csv` for all rows, `tsv` for per-ε medians.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct RateArgs {
    /// Dimension of the doubling operator.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
    Tsv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Greedy,
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => commands::check(&a),
        Command::Enumerate(a) => commands::enumerate(&a),
        Command::Witness(a) => commands::witness(&a),
        Command::Select(a) => commands::select(&a),
        Command::Trace(a) => commands::trace(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Rate(a) => commands::rate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isolab: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
