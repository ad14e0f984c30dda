use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roughscat::error::Result;
use roughscat::harness::{
    load_dataset, run_checks, run_forward, run_invert, run_synthesize, verify_artifacts,
    CheckOptions, Experiment, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "roughscat", version, about = "Scattering by locally rough surfaces: forward solves, synthetic data and inversion")]
struct Cli {
    /// Worker threads for the parallel solvers (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Far fields of the configured profile, one CSV per (k, direction).
    Forward(Common),
    /// Noisy far-field dataset for the configured profile.
    Synthesize(Common),
    /// Reconstruct the profile from a dataset.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Dataset written by `synthesize`.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run the self-check suite and print a JSON report.
    Check {
        /// Also write the report to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_k2_offset: f64,
    },
    /// Recompute the hashes recorded in an output directory's manifest.
    Verify {
        /// Output directory of an earlier run.
        dir: PathBuf,
    },
}

fn experiment(common: &Common) -> Result<Experiment> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.resolve()
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_report<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Forward(common) => {
            let exp = experiment(&common)?;
            let (_, manifest) = run_forward(&exp, &common.out)?;
            eprintln!("wrote {} files to {}", manifest.files.len(), common.out.display());
            Ok(true)
        }
        Command::Synthesize(common) => {
            let exp = experiment(&common)?;
            let (_, manifest) = run_synthesize(&exp, &common.out)?;
            eprintln!("wrote {} files to {}", manifest.files.len(), common.out.display());
            Ok(true)
        }
        Command::Invert { common, dataset } => {
            let exp = experiment(&common)?;
            let data = load_dataset(&dataset)?;
            let out = run_invert(&exp, &data, &common.out, |row| {
                eprintln!(
                    "stage {} k = {} iteration {}: err = {:.4e} ({:?})",
                    row.stage, row.k, row.iteration, row.err, row.event
                );
            })?;
            let e = out.reconstruction.profile_error;
            eprintln!("profile error: max {:.4e}, L2 {:.4e}", e.max, e.l2);
            Ok(true)
        }
        Command::Check { out, inject_k2_offset } => {
            let report = run_checks(CheckOptions {
                k2_diagonal_offset: inject_k2_offset,
            });
            print_json(&report)?;
            if let Some(dir) = out {
                write_report(&dir, "check_report.json", &report)?;
            }
            Ok(report.passed)
        }
        Command::Verify { dir } => {
            let report = verify_artifacts(&dir)?;
            print_json(&report)?;
            Ok(report.ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
