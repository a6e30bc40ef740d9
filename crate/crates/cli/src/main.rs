mod commands;
mod images;
mod run;

use clap::{Parser, Subcommand, ValueEnum};
use fdl_core::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fdl", version, about = "Framelet denoising lab: shrinkage, low-rank and CNN denoisers")]
struct Cli {
    /// Worker threads for convolutions; results do not depend on the count.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Denoise a grayscale image (Netpbm P2/P5 or PNG).
    Denoise(DenoiseArgs),
    /// Perfect-reconstruction analysis of a network spec.
    AnalyzePr {
        /// NetworkSpec JSON file.
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convolution multiply-accumulate count of a network spec.
    Flops {
        spec: PathBuf,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the toy encoder-decoder from a TrainConfig JSON file.
    Train {
        config: PathBuf,
        #[arg(long, env = "FDL_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment: tight-frame, bias-zero, generalization or lowrank-demo.
    Experiment {
        name: String,
        #[arg(long, env = "FDL_SEED")]
        seed: Option<u64>,
        /// TrainConfig JSON overriding the default schedule.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Reduced schedule: 10 epochs of 48 images.
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    WaveletShrink,
    SvdLowrank,
    Checkpoint,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum Shrink {
    Soft,
    Garrote,
    Dog,
}

#[derive(clap::Args, Debug)]
struct DenoiseArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Shrinkage threshold; estimated per band from the noise level when omitted.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum, default_value = "soft")]
    shrink: Shrink,
    /// Use the undecimated transform.
    #[arg(long)]
    undecimated: bool,
    /// Noise std; estimated with the MAD rule when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of singular values kept, or "full".
    #[arg(long)]
    rank: Option<String>,
    /// Checkpoint directory written by `train` or `experiment`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Clean image for SNR metrics.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Process exit codes.
const EXIT_IO: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse(_) | Error::Csv(_) => EXIT_IO,
        Error::Numeric(_) => EXIT_NUMERIC,
        Error::Shape(_) | Error::Config(_) | Error::Domain(_) | Error::Json(_) => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    fdl_core::tensor::set_threads(cli.threads);
    let argv: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Denoise(args) => commands::denoise(&argv, args),
        Command::AnalyzePr { spec, out } => commands::analyze_pr(&argv, &spec, out),
        Command::Flops { spec, rows, cols, out } => commands::flops(&argv, &spec, rows, cols, out),
        Command::Train { config, seed, out } => commands::train(&argv, &config, seed, out),
        Command::Experiment { name, seed, config, desk, out } => {
            commands::experiment(&argv, &name, seed, config.as_deref(), desk, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
