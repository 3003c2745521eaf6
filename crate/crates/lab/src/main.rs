use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use hartree_lab::{experiments, ExperimentConfig, LabError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Groundstate,
    Evolve,
    Classify,
    GnVerify,
    CompareDnm,
    Dichotomy,
    Instability,
    OrbitStability,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Groundstate => "groundstate",
            Command::Evolve => "evolve",
            Command::Classify => "classify",
            Command::GnVerify => "gn-verify",
            Command::CompareDnm => "compare-dnm",
            Command::Dichotomy => "dichotomy",
            Command::Instability => "instability",
            Command::OrbitStability => "orbit-stability",
        }
    }
}

/// Numerical experiments for the mass-critical Hartree equation with a power perturbation.
///
/// Exit codes: 0 pass, 2 concordance or stability failure, 3 solver failure, 4 config error.
#[derive(Debug, Parser)]
#[command(name = "hartree-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// key = value configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `rng_seed` from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(cli: &Cli) -> Result<experiments::Report, LabError> {
    let mut config = ExperimentConfig::from_path(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.set("rng_seed", seed);
    }
    let out = match &cli.out {
        Some(dir) => dir.clone(),
        None => experiments::output_dir(&config, &PathBuf::from("out").join(cli.command.name()))?,
    };
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    }
    experiments::run(cli.command.name(), &config, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            for c in report.checks.iter().filter(|c| c.asserted) {
                println!("PASS,{},{}", c.name, c.value);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            if let LabError::Failed { kind, failures } = &err {
                for f in failures {
                    eprintln!("FAIL,{kind},{f}");
                }
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
