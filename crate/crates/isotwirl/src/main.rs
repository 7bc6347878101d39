use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use isotwirl::acceptance::{criterion_ids, run_suite, Config, DEFAULT_SEED};
use isotwirl::cli::{run, tables, RunOptions};
use isotwirl::scenario::Scenario;

/// Closed-form isospectral twirling of chaos probes, with dense and
/// Monte-Carlo oracles.
#[derive(Parser)]
#[command(name = "isotwirl", version)]
struct Cli {
    /// Worker threads for sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario file and write CSV series plus a manifest.
    Run {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Master seed (overrides the scenario's [run] seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the acceptance suite and print PASS/FAIL per check.
    Verify {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Dump Weingarten, Gram and transfer-matrix eigenvalue tables as CSV.
    Tables {
        d: u64,
        /// Doping angle for the transfer-matrix eigenvalues.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let scn = Scenario::from_file(&scenario)?;
            let summary = run(&scn, &RunOptions { out: out.clone(), seed })?;
            println!("d = {}, seed = {}", summary.d, summary.seed);
            for f in &summary.files {
                println!("wrote {}", out.join(f).display());
            }
            if summary.unexplained_mismatches > 0 {
                println!(
                    "{} table-vs-displayed mismatches reported in manifest.json",
                    summary.unexplained_mismatches
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { only, seed } => {
            let ids = if only.is_empty() { criterion_ids() } else { only };
            let results = run_suite(&ids, &Config { seed }, &mut std::io::stdout().lock())?;
            Ok(if results.iter().all(|r| r.pass()) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Tables { d, theta, out } => {
            for f in tables(d, theta, &out)? {
                println!("wrote {}", out.join(f).display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
