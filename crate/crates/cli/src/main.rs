use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pdwg_cli::{describe, run, unconverged, ExperimentConfig, RunOptions};

/// Lp primal-dual weak Galerkin experiments for the div-curl system.
#[derive(Parser)]
#[command(name = "pdwg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the grid described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid points solved concurrently.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Quadrature degree (overrides the config).
        #[arg(long)]
        quad_degree: Option<usize>,
    },
    /// Print the domain, coefficients, exact solution and reference values.
    Describe {
        id: usize,
        /// Exponent of example 4.
        #[arg(long)]
        gamma: Option<f64>,
    },
}

/// Some solve stopped at the iteration cap; artifacts were still written.
const EXIT_NOT_CONVERGED: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Describe { id, gamma } => match describe(id, gamma) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out, threads, quad_degree } => {
            let config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
            };
            let summary = match run(&config, &RunOptions { out, threads, quad_degree }) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::FAILURE;
                }
            };
            for table in &summary.tables {
                println!("{}", table.to_markdown());
                for r in unconverged(table) {
                    eprintln!("warning: p = {}, 1/h = {} stopped after {} iterations without converging", table.p, r.inv_h, r.iterations);
                }
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            if summary.all_converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }
    }
}
