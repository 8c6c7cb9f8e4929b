use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use keepaug_cli::commands::{self, AugmentArgs, BenchArgs, PreviewArgs};
use keepaug_cli::{with_threads, THREADS_ENV};

#[derive(Debug, Parser)]
#[command(name = "keepaug", version, about = "Foreground-preserving augmentation for segmentation datasets")]
struct Cli {
    /// Maximum worker threads (results do not depend on this).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate augmented epochs from a manifest and policy.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 1)]
        epochs: u64,
        #[arg(long, default_value_t = 8)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
        /// Print per-epoch statistics without writing anything.
        #[arg(long)]
        dry_run: bool,
        /// Overrides the policy file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace an existing output directory.
        #[arg(long)]
        force: bool,
    },
    /// Score predicted masks against a manifest with the Dice coefficient.
    Evaluate {
        /// Directory of `<patient>_<slice>.png` predictions.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render original | augmented | boundary overlay for one slice.
    Preview {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// `<patient>/<slice>`
        #[arg(long)]
        sample: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
    },
    /// Measure operator throughput and per-sample latency.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 100)]
        iterations: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    match cli.command {
        Command::Augment {
            manifest,
            policy,
            epochs,
            batch_size,
            out,
            dry_run,
            seed,
            force,
        } => {
            let args = AugmentArgs {
                manifest,
                policy,
                epochs,
                batch_size,
                out,
                dry_run,
                seed,
                force,
            };
            with_threads(cli.threads, || commands::augment(&args, &mut stdout.lock()))??;
        }
        Command::Evaluate { pred, manifest, out } => {
            let report = with_threads(cli.threads, || commands::evaluate(&pred, &manifest, &out))??;
            eprintln!("{} slices, csv written to {}", report.per_image.len(), out.display());
            writeln!(stdout.lock(), "{}", report.mean_percent())?;
        }
        Command::Preview {
            manifest,
            policy,
            sample,
            out,
            seed,
            epoch,
        } => {
            let args = PreviewArgs {
                manifest,
                policy,
                sample,
                out,
                seed,
                epoch,
            };
            let outcome = with_threads(cli.threads, || commands::preview(&args))??;
            let note = if outcome.degraded { " (no eligible KeepMix partner)" } else { "" };
            writeln!(stdout.lock(), "{} -> {}{note}", outcome.provenance, args.out.display())?;
        }
        Command::Bench {
            manifest,
            policy,
            iterations,
            seed,
        } => {
            let args = BenchArgs {
                manifest,
                policy,
                iterations,
                seed,
            };
            let report = with_threads(cli.threads, || commands::bench(&args))??;
            let mut out = stdout.lock();
            for line in report.json_lines() {
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
