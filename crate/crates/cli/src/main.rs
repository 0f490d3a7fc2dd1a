use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use opinion_cli::{cmd_batch, cmd_run, cmd_validate, parse_seeds, BatchSpec, Overrides};

#[derive(Parser)]
#[command(name = "opinion-sim", version, about = "Multilayer opinion dynamics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario with one seed and write its artifacts
    Run {
        scenario: PathBuf,
        /// Overrides the scenario's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        snapshot_stride: Option<u64>,
        /// Directory holding edges.csv and traits.csv to replay instead of generating
        #[arg(long)]
        topology: Option<PathBuf>,
    },
    /// Run one scenario over many seeds and aggregate across them
    Batch {
        scenario: PathBuf,
        /// Seed list, e.g. `1-10` or `1,4,9`
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[arg(long)]
        snapshot_stride: Option<u64>,
    },
    /// Check a scenario and print it with every default filled in
    Validate { scenario: PathBuf },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            snapshot_stride,
            topology,
        } => {
            let overrides = Overrides {
                seed,
                snapshot_stride,
            };
            let artifacts = cmd_run(&scenario, &overrides, &out, topology.as_deref())?;
            for name in artifacts.names() {
                println!("{}", out.join(name).display());
            }
        }
        Command::Batch {
            scenario,
            seeds,
            out,
            jobs,
            snapshot_stride,
        } => {
            let spec = BatchSpec {
                scenario,
                seeds: parse_seeds(&seeds)?,
                outdir: out,
                jobs,
                snapshot_stride,
            };
            let rows = cmd_batch(&spec)?;
            println!(
                "{} runs, {} aggregate rows -> {}",
                spec.seeds.len(),
                rows.len(),
                spec.outdir.join(opinion_cli::AGGREGATE_FILE).display()
            );
        }
        Command::Validate { scenario } => {
            print!("{}", cmd_validate(&scenario)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
