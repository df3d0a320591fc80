use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use npreg_core::asymconst::Region;
use npreg_core::intervals::{CiMethod, Multiplier};
use npreg_core::{HcType, Kernel};
use npreg_sim::DgpSpec;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "npreg",
    version,
    about = "Local polynomial confidence intervals with bootstrap bias correction",
    args_override_self = true
)]
pub struct Cli {
    /// `key=value` file of defaults; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Report format [default: csv for simulate, json otherwise].
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bootstrap {
    Analytic,
    Resampled,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Intervals for g(x) at one evaluation point.
    Ci(CiArgs),
    /// Intervals for the jump at a sharp cutoff.
    Rdd(RddArgs),
    /// Equivalent-kernel constants and relative interval lengths.
    Constants(ConstantsArgs),
    /// Monte Carlo coverage and length.
    Simulate(SimulateArgs),
}

impl Command {
    pub const NAMES: [&'static str; 4] = ["ci", "rdd", "constants", "simulate"];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Ci(_) => "ci",
            Command::Rdd(_) => "rdd",
            Command::Constants(_) => "constants",
            Command::Simulate(_) => "simulate",
        }
    }
}

/// Options shared by `ci` and `rdd`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    /// CSV file with header `x,y` or `x,y,d`.
    #[arg(value_name = "INPUT")]
    #[serde(skip)]
    pub input_pos: Option<PathBuf>,

    /// Same as the positional INPUT; handy in config files.
    #[arg(long = "input", value_name = "FILE")]
    #[serde(skip)]
    pub input_flag: Option<PathBuf>,

    #[arg(long, visible_alias = "h")]
    pub bandwidth: f64,

    #[arg(long, default_value = "epanechnikov")]
    pub kernel: Kernel,

    /// Polynomial order p.
    #[arg(long, default_value_t = 1)]
    pub order: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, default_value = "hc3")]
    pub hc: HcType,

    /// Interval methods, comma separated [default: all].
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<CiMethod>,

    #[arg(long, value_enum, default_value = "analytic")]
    pub bootstrap: Bootstrap,

    /// Bootstrap draws for `--bootstrap resampled`.
    #[arg(long, default_value_t = 9999)]
    pub reps: usize,

    #[arg(long, default_value = "gaussian")]
    pub multiplier: Multiplier,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl FitArgs {
    pub fn input(&self) -> Option<&PathBuf> {
        self.input_pos.as_ref().or(self.input_flag.as_ref())
    }

    pub fn methods(&self) -> Vec<CiMethod> {
        if self.method.is_empty() {
            CiMethod::ALL.to_vec()
        } else {
            self.method.clone()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CiArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub point: f64,

    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RddArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub cutoff: f64,

    /// Bandwidth left of the cutoff [default: --bandwidth].
    #[arg(long)]
    pub bandwidth_minus: Option<f64>,

    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, conflicts_with = "all")]
    pub kernel: Option<Kernel>,

    /// Every kernel.
    #[arg(long)]
    pub all: bool,

    #[arg(long, default_value_t = 1)]
    pub order: usize,

    /// [default: both]
    #[arg(long)]
    pub region: Option<Region>,

    /// Write the plotting grid of the bias-corrected kernels as CSV.
    #[arg(long, value_name = "FILE")]
    pub emit_grid: Option<PathBuf>,

    #[arg(long, default_value_t = 201)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Preset: 4 runs npreg at the interior and boundary points, 5 runs
    /// both discontinuity designs.
    #[arg(long, value_parser = clap::value_parser!(u8).range(4..=5))]
    pub table: Option<u8>,

    #[arg(long)]
    pub dgp: Option<DgpSpec>,

    /// Evaluation point for npreg.
    #[arg(long, allow_negative_numbers = true)]
    pub point: Option<f64>,

    /// Sample size [default: 2000 for npreg, 4000 for the discontinuity designs].
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 5000)]
    pub reps: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Infeasible AMSE-optimal bandwidth (the default rule).
    #[arg(long, conflicts_with_all = ["h", "bandwidth"])]
    pub oracle: bool,

    /// Replay bandwidths from FILE, one per line and replication.
    #[arg(long, value_name = "FILE", conflicts_with = "bandwidth")]
    pub h: Option<PathBuf>,

    /// Fixed bandwidth for every replication.
    #[arg(long)]
    pub bandwidth: Option<f64>,

    #[arg(long)]
    pub kernel: Option<Kernel>,

    #[arg(long, default_value_t = 1)]
    pub order: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, default_value = "hc3")]
    pub hc: HcType,

    /// [default: naive_gp,naive_lp,rbc_pgp,mplp]
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<CiMethod>,

    /// Worker threads [default: NPREG_THREADS, then all cores].
    #[arg(long)]
    pub threads: Option<usize>,
}
