use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use trislip::experiment::{
    run_constraint_audit, run_counterexamples, run_flatnorm, run_scaling, scaling_slope, write_csv, write_json,
    ExperimentConfig, ExperimentKind,
};

/// Edge dislocations on a triangular lattice: energy scaling experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy of the relaxed recovery measure over a sweep of lattice spacings.
    Scaling(Common),
    /// Zero-energy counter-examples and the volume-constrained triangle test.
    Counterexamples(Common),
    /// Flat distance between the discrete and the target dislocation measure.
    Flatnorm(Common),
    /// Volume-constraint status of the recovery slip.
    ConstraintAudit(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn output_path(common: &Common, cfg: &ExperimentConfig) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .context("no output path: pass --out or set \"output\" in the config")
}

fn run(cli: Cli) -> Result<()> {
    let (kind, common) = match &cli.command {
        Command::Scaling(c) => (ExperimentKind::Scaling, c),
        Command::Counterexamples(c) => (ExperimentKind::Counterexamples, c),
        Command::Flatnorm(c) => (ExperimentKind::Flatnorm, c),
        Command::ConstraintAudit(c) => (ExperimentKind::ConstraintAudit, c),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    let cfg = ExperimentConfig::load(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    cfg.check_kind(kind)?;
    let out = output_path(common, &cfg)?;
    match kind {
        ExperimentKind::Scaling => {
            let rows = run_scaling(&cfg)?;
            write_csv(&rows, &cfg, kind, &out)?;
            for r in &rows {
                if let Some(e) = &r.error {
                    eprintln!("epsilon {}: {e}", r.epsilon);
                }
            }
            if let Some(s) = scaling_slope(&rows) {
                eprintln!("slope of F/eps^2 against |ln eps|: {s:.5}");
            }
        }
        ExperimentKind::Counterexamples => write_json(&run_counterexamples(&cfg)?, &cfg, kind, &out)?,
        ExperimentKind::Flatnorm => write_csv(&run_flatnorm(&cfg)?, &cfg, kind, &out)?,
        ExperimentKind::ConstraintAudit => write_csv(&run_constraint_audit(&cfg)?, &cfg, kind, &out)?,
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
