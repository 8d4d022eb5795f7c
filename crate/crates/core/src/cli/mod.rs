//! Command-line front end. Every command writes a CSV plus a JSON manifest
//! next to it; `replay` re-runs a manifest.

mod commands;
mod manifest;

pub use commands::{CollapseRow, SweepRow};
pub use manifest::RunManifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "cpmmd",
    version,
    about = "Kernel two-sample tests with complexity-penalized kernel selection"
)]
pub struct Cli {
    /// Master seed.
    #[arg(long, env = "CPMMD_SEED", default_value_t = 0, global = true)]
    pub seed: u64,

    /// Worker threads for replicate loops (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Experiment {
    Multiscale,
    Kurtosis,
    Hdgm,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
pub enum Command {
    /// Split, calibrate, select and test on a CSV pair.
    Test {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// linear, poly:<p>, deep or deep:<width>
        #[arg(long, default_value = "linear")]
        regime: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        n_perm: usize,
        #[arg(long, default_value_t = 10)]
        n_cal: usize,
        /// Use this penalty coefficient instead of calibrating.
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "test_report.csv")]
        out: PathBuf,
    },
    /// Calibrate the penalty coefficient on a CSV pair.
    Calibrate {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long, default_value = "linear")]
        regime: String,
        #[arg(long, default_value_t = 10)]
        n_cal: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "calibration.csv")]
        out: PathBuf,
    },
    /// Power of competing selectors over a grid of alternatives.
    PowerSweep {
        #[arg(long, value_enum)]
        experiment: Experiment,
        /// Shifts (multiscale), degrees of freedom (kurtosis) or `DxN` cells (hdgm),
        /// comma separated. Defaults depend on the experiment.
        #[arg(long)]
        grid: Option<String>,
        /// Points per class. Defaults: 200 (multiscale, kurtosis).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        /// Hidden width of the MLP (hdgm).
        #[arg(long, default_value_t = 50)]
        width: usize,
        /// Mean shift of the hdgm alternative.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Polynomial degree (kurtosis).
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long, default_value_t = 200)]
        n_perm: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Ratio-criterion ascent under the null across widths.
    Collapse {
        #[arg(long, value_delimiter = ',', default_value = "10,50,200")]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Coefficient used to report the penalized criterion of each run.
        #[arg(long, default_value_t = 0.008)]
        c1: f64,
        #[arg(long, default_value_t = 1e-8)]
        lambda: f64,
        #[arg(long, default_value = "collapse.csv")]
        out: PathBuf,
    },
    /// Power and final spectral product across injected coefficients.
    C1Ablation {
        #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1")]
        c1_grid: Vec<f64>,
        /// `d,n,delta`
        #[arg(long, value_delimiter = ',', default_value = "20,200,0.5")]
        cell: Vec<f64>,
        #[arg(long, default_value_t = 25)]
        reps: usize,
        #[arg(long, default_value_t = 50)]
        width: usize,
        #[arg(long, default_value_t = 200)]
        n_perm: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value = "c1_ablation.csv")]
        out: PathBuf,
    },
    /// Write a synthetic two-sample CSV pair.
    Generate {
        /// multiscale:<delta>, hdgm:<d>:<delta>, t:<d>:<df> or scale:<s_p>:<s_q>
        #[arg(long)]
        family: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out_x: PathBuf,
        #[arg(long)]
        out_y: PathBuf,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write outputs here instead of the recorded path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Test { .. } => "test",
            Command::Calibrate { .. } => "calibrate",
            Command::PowerSweep { .. } => "power-sweep",
            Command::Collapse { .. } => "collapse",
            Command::C1Ablation { .. } => "c1-ablation",
            Command::Generate { .. } => "generate",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Runs a parsed command line and returns the manifest of the run.
pub fn run(cli: Cli) -> Result<RunManifest> {
    if let Some(n) = cli.threads {
        // A pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    commands::execute(cli.command, cli.seed)
}

/// Maps a run result onto the documented exit codes, printing any error.
pub fn exit_code(result: &Result<RunManifest>) -> i32 {
    match result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_CONFIG
            }
        }
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
