//! Command-line pipeline for retrieval-augmented CTC decoding with gated
//! dual monolingual datastores.
//!
//! Exit codes: 0 success, 2 usage/config errors, 3 data-validation errors.

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use knnctc_cli::commands;

#[derive(Parser)]
#[command(
    name = "knnctc",
    version,
    about = "Retrieval-augmented CTC decoding with gated dual monolingual datastores"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a datastore from an embedding/logit tensor pair
    Build(commands::build::BuildArgs),
    /// Decode a manifest of utterances (modes s0-s3)
    Decode(commands::decode::DecodeArgs),
    /// Score hypotheses against manifest references (MER/CER/WER/RTF)
    Eval(commands::eval::EvalArgs),
    /// Emit per-frame gate distances as CSV
    Trace(commands::trace::TraceArgs),
    /// Benchmark brute-force vs partitioned search on a datastore
    Bench(commands::bench::BenchArgs),
    /// Generate a synthetic bilingual corpus
    Synth(commands::synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(args) => commands::build::run(args),
        Command::Decode(args) => commands::decode::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Trace(args) => commands::trace::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
