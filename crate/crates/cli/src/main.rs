//! `qsn`: runs the sensor-network experiments and writes CSV results plus a
//! JSON manifest that is enough to reproduce them.
//!
//! Exit status: 0 on success, 2 for invalid configuration, 3 when the
//! optimiser fails, 1 for anything else (I/O, numerics).

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsn_core::QsnError;

use config::{ConfigError, Experiment, ExperimentConfig, RunArgs};

#[derive(Parser)]
#[command(
    name = "qsn",
    version,
    about = "Variational quantum sensor-network experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimised QB of several topologies against fixed GHZ / excited probes.
    QbCompare(RunArgs),
    /// Optimised QB of one topology for each preparation depth L1.
    QbDepth(RunArgs),
    /// QB of one optimised probe across δ and α grids.
    QbSweep(RunArgs),
    /// CB for each measurement depth L2 on one optimised probe.
    CbDepth(RunArgs),
    /// CB of one optimised probe and measurement across δ and α grids.
    CbSweep(RunArgs),
    /// Bayesian estimation of δ from sampled outcomes.
    Bayes(RunArgs),
    /// QB of the noiseless optimum under local dephasing λ.
    NoiseSweep(RunArgs),
    /// Built-in network graphs (and a custom one via --topology).
    TopologyList(RunArgs),
    /// Re-runs the configuration recorded in a manifest.
    Replay {
        manifest: PathBuf,
        /// Write here instead of the recorded output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn resolve(command: Command) -> anyhow::Result<ExperimentConfig> {
    let (experiment, args) = match command {
        Command::QbCompare(a) => (Experiment::QbCompare, a),
        Command::QbDepth(a) => (Experiment::QbDepth, a),
        Command::QbSweep(a) => (Experiment::QbSweep, a),
        Command::CbDepth(a) => (Experiment::CbDepth, a),
        Command::CbSweep(a) => (Experiment::CbSweep, a),
        Command::Bayes(a) => (Experiment::Bayes, a),
        Command::NoiseSweep(a) => (Experiment::NoiseSweep, a),
        Command::TopologyList(a) => (Experiment::TopologyList, a),
        Command::Replay {
            manifest,
            output_dir,
        } => {
            let mut cfg = ExperimentConfig::from_manifest(&manifest)?;
            if output_dir.is_some() {
                cfg.output_dir = output_dir;
            }
            return Ok(cfg);
        }
    };
    ExperimentConfig::resolve(experiment, &args)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli.command)?;
    let out = experiments::run(&cfg)?;
    let written = output::write_run(&cfg, &out.tables, &out.extras)?;
    for line in &out.summary {
        println!("{line}");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_status(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<QsnError>() {
        Some(QsnError::Config(_) | QsnError::Domain(_)) => 2,
        Some(QsnError::OptimizationFailure(_) | QsnError::DegenerateProbe { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_status(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let cases: [(anyhow::Error, u8); 5] = [
            (ConfigError("x".into()).into(), 2),
            (QsnError::Config("x".into()).into(), 2),
            (QsnError::Domain("x".into()).into(), 2),
            (QsnError::OptimizationFailure("x".into()).into(), 3),
            (QsnError::Numeric("x".into()).into(), 1),
        ];
        for (err, code) in cases {
            assert_eq!(exit_status(&err), code, "{err}");
        }
        let wrapped = anyhow::Error::from(QsnError::Config("bad edge".into())).context("loading");
        assert_eq!(exit_status(&wrapped), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
