//! `anonkit`: anonymize speech corpora and score them for privacy and
//! utility.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{
    AnonymizeArgs, EerArgs, EvaluateArgs, GvdArgs, PitchArgs, ReportArgs, SynthArgs, WerArgs,
};
use crate::config::{FileConfig, Settings};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "anonkit",
    version,
    about = "Voice anonymization and privacy/utility evaluation"
)]
struct Cli {
    /// TOML configuration file; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for pseudo-speakers and synthetic corpora
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true, env = "ANONKIT_THREADS")]
    threads: Option<usize>,
    /// More log output (-v info, -vv debug, -vvv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Anonymize every utterance of a manifest
    Anonymize(AnonymizeArgs),
    /// Run the attack scenarios and utility metrics and write a report
    Evaluate(Box<EvaluateArgs>),
    /// Equal error rate of a scored trial list
    Eer(EerArgs),
    /// Word error rate of hypotheses against references
    Wer(WerArgs),
    /// Pitch correlation between original and anonymized utterances
    PitchCorr(PitchArgs),
    /// Gain of voice distinctiveness between two manifests
    Gvd(GvdArgs),
    /// Write a seeded synthetic corpus
    SynthCorpus(SynthArgs),
    /// Combine per-dataset metrics into one report
    Report(ReportArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(file, cli.seed, cli.threads)?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?;
    }
    match &cli.command {
        Command::Anonymize(a) => commands::anonymize(&settings, a),
        Command::Evaluate(a) => commands::evaluate(&settings, a),
        Command::Eer(a) => commands::eer(a),
        Command::Wer(a) => commands::wer(a),
        Command::PitchCorr(a) => commands::pitch_corr(&settings, a),
        Command::Gvd(a) => commands::gvd(&settings, a),
        Command::SynthCorpus(a) => commands::synth_corpus(&settings, a),
        Command::Report(a) => commands::report(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
