//! Command-line entry point.
//!
//! `opgrowth <subcommand> --config <file> [--out <dir>] [--workers <n>]
//! [--seed <u64>]`
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error (bad config or
//! resource cap), 3 runtime failure.

use clap::{Args, Parser, Subcommand};
use opgrowth::config::{ExperimentConfig, ExperimentKind};
use opgrowth::error::Error;
use opgrowth::runner::{reproduce_paper, run_experiment};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "opgrowth",
    version,
    about = "Operator growth in charge-conserving automaton circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory (default: ./out).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: one per logical CPU).
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed, overriding the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Out-of-time-order correlator growth on the all-to-all model.
    Otoc(RunArgs),
    /// Charge autocorrelator decay on the all-to-all model.
    Autocorr(RunArgs),
    /// Butterfly-front profiles and velocity on the chain.
    Butterfly(RunArgs),
    /// Exact small-N size distributions, block-norm bounds and the sum rule.
    ExactBound(RunArgs),
    /// Closed-form chaos exponents and butterfly velocities.
    SykTheory(RunArgs),
    /// Run a small instance of every experiment kind end to end.
    ReproducePaper {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::ResourceCap(_) => 2,
        _ => 3,
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), (u8, String)> {
    let mut cfg = ExperimentConfig::parse_file(kind, &args.config)
        .map_err(|e| (exit_code_for(&e).max(2), e.to_string()))?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    run_experiment(&cfg, &args.common.out, args.common.workers)
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are successes, anything else is usage
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Otoc(a) => run(ExperimentKind::Otoc, a),
        Command::Autocorr(a) => run(ExperimentKind::Autocorr, a),
        Command::Butterfly(a) => run(ExperimentKind::Butterfly, a),
        Command::ExactBound(a) => run(ExperimentKind::ExactBound, a),
        Command::SykTheory(a) => run(ExperimentKind::SykTheory, a),
        Command::ReproducePaper { common } => {
            reproduce_paper(&common.out, common.seed.unwrap_or(1), common.workers)
                .map(|runs| {
                    for (name, m) in &runs {
                        eprintln!(
                            "{name}: {} outputs in {:.1}s",
                            m.checksums.len(),
                            m.wall_clock_seconds
                        );
                    }
                })
                .map_err(|e| (exit_code_for(&e), e.to_string()))
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
