//! Experiment runner: reads a TOML config, executes the named experiment,
//! writes JSON/CSV reports, and exits with a code describing the outcome
//! (0 consistent, 2 violation where the theory predicts none, 3
//! inconclusive, 64 invalid config, 65 budget overflow).

use clap::{Args, Parser, Subcommand};
use dyncubes::experiment::{list_systems, resolve, run, ExperimentConfig, ExperimentKind};
use dyncubes::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 64;
const EXIT_BUDGET: u8 = 65;

#[derive(Parser)]
#[command(name = "dyncubes", version, about = "cube structures of minimal systems, at desk scale")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the JSON report and CSV profiles.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cap the worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config's tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// List built-in systems and factor maps.
    Systems,
    /// Materialize a cube-set sample and export it.
    Cube(RunArgs),
    /// Estimate a regionally-proximal relation for a pair of points.
    Rp(RunArgs),
    /// Check cube-set saturation through a factor map.
    Saturation(RunArgs),
    /// Check face-orbit saturation through a factor map.
    FaceSaturation(RunArgs),
    /// Scan a sample for near-collisions violating unique completion.
    Completion(RunArgs),
    /// Profile every critical-pair pattern on the Sturmian system.
    SturmianCex(RunArgs),
}

fn expected_kind(cmd: &Cmd) -> Option<ExperimentKind> {
    match cmd {
        Cmd::Systems => None,
        Cmd::Cube(_) => Some(ExperimentKind::CubeSample),
        Cmd::Rp(_) => Some(ExperimentKind::RpEstimate),
        Cmd::Saturation(_) => Some(ExperimentKind::Saturation),
        Cmd::FaceSaturation(_) => Some(ExperimentKind::FaceSaturation),
        Cmd::Completion(_) => Some(ExperimentKind::Completion),
        Cmd::SturmianCex(_) => Some(ExperimentKind::SturmianCex),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let expected = expected_kind(&cli.cmd);
    let args = match cli.cmd {
        Cmd::Systems => {
            println!("{}", list_systems());
            return ExitCode::SUCCESS;
        }
        Cmd::Cube(a)
        | Cmd::Rp(a)
        | Cmd::Saturation(a)
        | Cmd::FaceSaturation(a)
        | Cmd::Completion(a)
        | Cmd::SturmianCex(a) => a,
    };

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure {n} threads: {e}");
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {:?}: {e}", args.config);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    // toml errors carry line/column positions
    let mut config = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error in {:?}: {e}", args.config);
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(k) = expected {
        if config.experiment != k {
            eprintln!(
                "config error: subcommand expects experiment {:?}, config declares {:?}",
                k, config.experiment
            );
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if let Err(e) = resolve(&config) {
        eprintln!("config error: {e}");
        return ExitCode::from(match e {
            Error::BudgetOverflow { .. } => EXIT_BUDGET,
            _ => EXIT_CONFIG,
        });
    }

    match run(&config, &args.out) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("report: {}", outcome.report_path.display());
            println!("profiles: {}", outcome.csv_path.display());
            ExitCode::from(u8::try_from(outcome.exit_code).unwrap_or(1))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::BudgetOverflow { .. } => EXIT_BUDGET,
                Error::InvalidParameter(_)
                | Error::ScheduleNotNested(_)
                | Error::SystemMismatch(_)
                | Error::DimensionMismatch(_) => EXIT_CONFIG,
                _ => 1,
            })
        }
    }
}
