mod channels;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pilotsynth::Error;

/// Synthesize and evaluate zero-tail OFDM synchronization pilot sets.
#[derive(Parser, Debug)]
#[command(name = "pilotsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the pilot search and write the pilot file, trace and report.
    Synthesize(SynthesizeArgs),
    /// Re-evaluate a pilot file and write plot-ready CSV profiles.
    Evaluate(EvaluateArgs),
    /// Print time conversions and slot savings for a config or pilot file.
    Info(InfoArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Maxpeak,
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args, Debug)]
struct SynthesizeArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Interleave PAPR reduction (defaults from the config's [papr] section).
    #[arg(long, value_enum)]
    papr: Option<Switch>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Binary subspace cache; read when present and matching, written otherwise.
    #[arg(long)]
    subspace_cache: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct EvaluateArgs {
    /// Pilot file written by `synthesize`.
    pilots: PathBuf,
    /// Output directory; defaults to the pilot file's directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// TOML channel description for the overlap scenario.
    #[arg(long)]
    channels: Option<PathBuf>,
    /// Comma-separated per-pilot mixture gains, e.g. `1,1,1,1`.
    #[arg(long, value_delimiter = ',')]
    mixture_weights: Option<Vec<f64>>,
    #[arg(long)]
    subspace_cache: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct InfoArgs {
    /// TOML config or JSON pilot file.
    input: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidDims(_)
        | Error::InvalidPlacement(_)
        | Error::InvalidWindow(_)
        | Error::InvalidChannel(_)
        | Error::DimensionMismatch { .. } => 2,
        Error::Io(_) | Error::Json(_) | Error::Corrupt(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synthesize(args) => commands::synthesize(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Info(args) => commands::info(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
