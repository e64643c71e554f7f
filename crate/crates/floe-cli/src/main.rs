//! Command-line driver: scenario orchestration and file output for the
//! floe simulation, coarse-graining, uncertainty, and assimilation tools.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "floe",
    version,
    about = "Discrete-element sea-ice floes over a stochastic spectral ocean: \
             simulation, superfloe reduction, ensemble statistics, and \
             Lagrangian data assimilation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario config file (key = value with unit suffixes); defaults apply
    /// when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for ensemble execution (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where artifacts are written.
    #[arg(long, global = true, default_value = "out")]
    pub output_dir: PathBuf,

    /// Force the all-pairs contact path instead of the cell grid.
    #[arg(long, global = true)]
    pub oracle: bool,

    /// Overrides the observation interval (integration steps).
    #[arg(long, global = true)]
    pub obs_interval_steps: Option<u64>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a floe field and write it as JSON and CSV.
    Init,
    /// Integrate the coupled system, writing a trajectory and a checkpoint.
    Simulate {
        /// Also write a per-step contact log (t, l, j, overlap, |f_n|, |f_t|).
        #[arg(long)]
        contact_log: bool,
        /// Resume from a binary checkpoint instead of initializing.
        #[arg(long)]
        from_checkpoint: Option<PathBuf>,
    },
    /// Coarse-grain the field into superfloes and report the statistics.
    Reduce,
    /// Ensemble momentum bands, long-run densities, and contact-force series.
    Uq,
    /// Estimate the additive-noise inflation amplitudes from a superfloe run.
    Inflate,
    /// Run the twin experiment: truth, forecast ensemble, filter updates.
    Assimilate,
    /// Score an estimate series against a truth series (RMSE and PCC).
    Score {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
    },
    /// Wall-clock comparison of the full and reduced systems.
    Bench {
        /// Outer steps to integrate in each system.
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool may already exist under tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = err
                .downcast_ref::<floe_sim::Error>()
                .map(error_kind)
                .unwrap_or("other");
            let body = serde_json::json!({
                "error": format!("{err:#}"),
                "kind": kind,
            });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}

fn error_kind(err: &floe_sim::Error) -> &'static str {
    use floe_sim::Error::*;
    match err {
        Parameter(_) => "parameter",
        Config(_) => "config",
        Parse { .. } => "parse",
        DegenerateContact(_, _) => "degenerate_contact",
        NumericalBlowup { .. } => "numerical_blowup",
        StepFailed { .. } => "step_failed",
        InsufficientData(_) => "insufficient_data",
        ZeroVariance(_) => "zero_variance",
        Io(_) => "io",
        Json(_) => "json",
    }
}
