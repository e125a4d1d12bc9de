//! `snv`: batch runner for stochastic nonlocal traffic-flow experiments.

mod config;
mod figures;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, Overrides};
use figures::{Figure, Scale};

#[derive(Parser)]
#[command(
    name = "snv",
    version,
    about = "Stochastic nonlocal traffic flow: solvers, Monte Carlo studies and figure data"
)]
struct Cli {
    /// Directory for all output files
    #[arg(long, global = true, env = "SNV_OUTPUT_DIR", default_value = "snv-output")]
    output_dir: PathBuf,
    /// Master seed; overrides the config file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single NV, sNV or EsNV run; one CSV per output time
    Solve(Overrides),
    /// Monte Carlo ensemble with mean, quantiles and the EsNV reference
    Mc(Overrides),
    /// Characteristics of each realization, their average and the EsNV path
    Characteristics(Overrides),
    /// Bias of the characteristic Monte Carlo average over (M, dt)
    Bias(Overrides),
    /// Propagated Jacobi noise density on the Chebyshev grid
    FokkerPlanck(Overrides),
    /// L1 stability bound for pairs of noise paths
    Stability(Overrides),
    /// Data and gnuplot script for one figure
    Figures {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        /// Base config for the figure runs
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let out = &cli.output_dir;
    let resolve = |o: &Overrides| ExperimentConfig::resolve(o, cli.seed, cli.threads);
    match &cli.command {
        Command::Solve(o) => run::solve(&resolve(o)?, out).map(drop),
        Command::Mc(o) => run::mc(&resolve(o)?, out).map(drop),
        Command::Characteristics(o) => run::characteristics(&resolve(o)?, out).map(drop),
        Command::Bias(o) => run::bias(&resolve(o)?, out).map(drop),
        Command::FokkerPlanck(o) => run::fokker_planck(&resolve(o)?, out),
        Command::Stability(o) => run::stability(&resolve(o)?, out).map(drop),
        Command::Figures { figure, scale, config } => {
            let o = Overrides { config: config.clone(), ..Overrides::default() };
            figures::generate(*figure, *scale, &resolve(&o)?, out)
        }
    }
}

/// Exit code 2 marks a rejected time step; everything else is 1.
fn report(err: &anyhow::Error) -> ExitCode {
    let core = err.chain().find_map(|e| e.downcast_ref::<snv_core::Error>());
    let (kind, code, extra) = match core {
        Some(snv_core::Error::Cfl { lambda, bound, admissible_dt }) => {
            ("cfl", 2, json!({ "lambda": lambda, "bound": bound, "admissible_dt": admissible_dt }))
        }
        Some(snv_core::Error::InvalidParameter(_)) => ("invalid_parameter", 1, json!({})),
        Some(_) => ("simulation", 1, json!({})),
        None => ("config", 1, json!({})),
    };
    let body = json!({ "error": kind, "message": format!("{err:#}"), "details": extra });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => {
            println!("output written to {}", cli.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
