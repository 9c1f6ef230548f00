use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rogue_bench::{format_summary, parse_config, run_to_dir, summarize, BenchError, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "rogue-bench",
    version,
    about = "Run and summarize ROGUE bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every algorithm and replicate of a config and write CSV/JSON results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Comma-separated algorithm labels, e.g. `tuned_rogue_ucb,random`.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        /// Worker threads for replicates.
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Print final regret and growth ratio per algorithm from a results directory.
    Summarize {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            replicates,
            algorithms,
            workers,
        } => {
            let mut cfg = parse_config(&config)?;
            cfg.apply_overrides(seed, replicates, algorithms.as_deref())?;
            let out = out.or_else(|| cfg.output_dir.clone()).ok_or_else(|| {
                BenchError::Config("no output directory: pass --out or set output_dir".into())
            })?;
            let workers = workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let summary = run_to_dir(&cfg, &out, workers)?;
            print!("{}", format_summary(&summary.algorithms));
            println!(
                "oracle: {} ({})",
                summary.oracle.label(),
                summary.oracle_note
            );
            println!("results written to {}", out.display());
        }
        Command::Summarize { dir } => {
            print!("{}", format_summary(&summarize(&dir)?));
        }
    }
    Ok(())
}
