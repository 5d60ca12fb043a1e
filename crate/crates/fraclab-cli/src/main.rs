//! `fraclab` — command-line front end for the fractional-Laplacian
//! laboratory: identity verification suites and reproducible simulation
//! runs with manifests.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error.

mod manifest;
mod tasks;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "numerical laboratory for the fractional Laplacian")]
struct Cli {
    /// Worker-thread cap (falls back to FRACLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs an identity suite and prints one CSV row per check.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Quadrature tolerance for the checks that take one.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Optional directory for results.csv and manifest.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Executes a task described by a JSON config and writes artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides solver tolerances where the task takes one.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Suite {
    Constants,
    Halfline,
    Ball,
    Coarea,
    Extension,
    Perimeter,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("FRACLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Verify { suite, tol, out } => match verify::run_suite(suite, tol, out.as_deref())
        {
            Ok(all_pass) => {
                if all_pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Run { config, seed, out, tol } => match tasks::run(&config, seed, out, tol) {
            Ok(()) => ExitCode::SUCCESS,
            Err(tasks::RunError::Config(msg)) => {
                eprintln!("config error: {msg}");
                ExitCode::from(2)
            }
            Err(tasks::RunError::Execution(msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        },
    }
}
