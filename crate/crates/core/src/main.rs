use clap::{Parser, Subcommand};
use ctbench::bench::{parse_config, rerank, run, RunOptions};
use ctbench::market_data::{descriptive_stats, load_ohlc};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ctbench",
    version,
    about = "Benchmark time-series generators on hourly crypto returns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured (split, model, task) cell and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Replaces every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Descriptive statistics of a candle directory, as JSON on stdout.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Rebuild rank tables from an existing output directory.
    Rank {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, Box<dyn std::error::Error>> {
    match command {
        Command::Run {
            config,
            out,
            jobs,
            seed,
        } => {
            let mut cfg = parse_config(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            let manifest = run(&cfg, RunOptions { jobs })?;
            let failed = manifest.failed_cells();
            eprintln!(
                "{} cells, {failed} failed; outputs in {}",
                manifest.cells.len(),
                cfg.output_dir.display()
            );
            for c in manifest.cells.iter().filter(|c| c.reason.is_some()) {
                eprintln!(
                    "  {:?} {}/{}/tau {}: {}",
                    c.status,
                    c.task,
                    c.model,
                    c.tau,
                    c.reason.as_deref().unwrap_or_default()
                );
            }
            Ok(failed == 0)
        }
        Command::Stats { data } => {
            let loaded = load_ohlc(&data)?;
            for d in &loaded.dropped {
                eprintln!("dropped {}: {}", d.asset, d.reason);
            }
            let summary = descriptive_stats(&loaded.prices.log_returns()?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(true)
        }
        Command::Rank { input } => {
            for note in rerank(&input)? {
                eprintln!("{note}");
            }
            Ok(true)
        }
    }
}
