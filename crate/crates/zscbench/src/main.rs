use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zscbench::{run_ensemble, run_synth, run_variability, BenchError, ExperimentConfig, SynthConfig};

#[derive(Parser)]
#[command(name = "zscbench", version, about = "Zero-shot classification variability and ensemble benchmarks")]
struct Cli {
    /// Worker threads (0 = one per core); overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Experiment seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every configured model over random class partitions.
    Variability(Io),
    /// Bagged class-subset ensembles against a single-model baseline.
    Ensemble(Io),
    /// Write a synthetic dataset directory.
    Synth(Io),
}

#[derive(clap::Args)]
struct Io {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn experiment(io: &Io, seed: Option<u64>) -> Result<(ExperimentConfig, PathBuf), BenchError> {
    let mut cfg = ExperimentConfig::from_file(&io.config)?;
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    let out = io
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| BenchError::Config("no output directory: pass --out or set output_dir".into()))?;
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match &cli.command {
        Command::Variability(io) => {
            let (cfg, out) = experiment(io, cli.seed)?;
            let report = run_variability(&cfg, &out, cli.workers.unwrap_or(cfg.worker_count))?;
            print!("{}", report.table);
        }
        Command::Ensemble(io) => {
            let (cfg, out) = experiment(io, cli.seed)?;
            let report = run_ensemble(&cfg, &out, cli.workers.unwrap_or(cfg.worker_count))?;
            print!("{}", report.table);
        }
        Command::Synth(io) => {
            let cfg = SynthConfig::from_file(&io.config)?;
            let out = io.out.clone().ok_or_else(|| BenchError::Config("synth needs --out".into()))?;
            let d = run_synth(&cfg, cli.seed, &out)?;
            println!(
                "wrote {} samples, {} classes (D={}, E={}) to {}",
                d.num_samples(),
                d.num_classes(),
                d.feature_dim(),
                d.attr_dim(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ZSCBENCH_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zscbench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
