//! `chipcarbon`: processor lifecycle carbon reports from the command line.
//!
//! One subcommand per analysis; every run writes its report files plus a
//! `manifest.json` capturing the resolved parameters, seed, and input
//! digests. Identical manifests produce byte-identical outputs, regardless
//! of how many worker threads the Monte Carlo engine uses.
//!
//! Exit codes: 0 on success, 2 for input/user errors (bad flags, missing
//! files, schema violations, unknown processors), 3 for internal invariant
//! failures.

// Same validation idiom as the library: `!(x > 0)` is also true for NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod axis;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use axis::{CountAxis, FloatAxis};

/// Probabilistic lifecycle carbon footprints for processors.
#[derive(Debug, Parser)]
#[command(name = "chipcarbon", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags every subcommand accepts.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Processor catalog CSV.
    #[arg(long, global = true, default_value = "data/processors.csv")]
    pub dataset: PathBuf,

    /// Node parameter pack JSON.
    #[arg(long, global = true, default_value = "data/pack.json")]
    pub pack: PathBuf,

    /// Base seed; every processor's Monte Carlo stream is derived from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Monte Carlo sample count per estimate.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,

    /// Report file format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Directory the reports are written into (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
}

/// Output format for report files. Both carry the same values; CSV splits
/// multi-table reports across several files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo lifecycle estimate for one or more processors; with two
    /// or more, also reports the overlap of their footprint distributions.
    Estimate(EstimateArgs),
    /// Manufacturing + packaging footprint across chiplet counts and total
    /// die areas, marking the optimal split per area.
    SweepChiplets(SweepChipletsArgs),
    /// Embodied-vs-operational ratio over a lifetime × idle grid, with the
    /// break-even contour.
    Amortize(AmortizeArgs),
    /// Fleet-level footprint: units from annual revenue, per-chip footprint
    /// from each year's flagship.
    Shipments(ShipmentsArgs),
    /// Manufacturing cost vs embodied footprint, with rank correlations.
    CostCorr,
    /// Flagship efficiency metrics per vendor/segment/kind over the years.
    Trend,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Processor to estimate; repeat the flag to compare several.
    #[arg(long = "name", value_name = "NAME", required = true)]
    pub names: Vec<String>,

    /// Service lifetime in years.
    #[arg(long, default_value_t = chipcarbon::carbon::REFERENCE_LIFETIME_YEARS)]
    pub lifetime: f64,

    /// Fraction of the lifetime spent idle, in [0, 1].
    #[arg(long, default_value_t = chipcarbon::carbon::REFERENCE_IDLE_FRACTION)]
    pub idle: f64,

    /// Keep the raw per-sample totals in the JSON report.
    #[arg(long)]
    pub retain_samples: bool,
}

#[derive(Debug, Args)]
pub struct SweepChipletsArgs {
    /// Process node in nm; nodes not listed in the pack are extrapolated.
    #[arg(long, default_value_t = 7.0)]
    pub node: f64,

    /// Total-die-area axis in mm² (`start:end:step` or a comma list).
    #[arg(long, default_value = "50:850:50")]
    pub areas: FloatAxis,

    /// Chiplet-count axis; must include 1, the monolithic baseline.
    #[arg(long, default_value = "1,2,4,8")]
    pub counts: CountAxis,
}

#[derive(Debug, Args)]
pub struct AmortizeArgs {
    /// Processor whose embodied footprint is amortized.
    #[arg(long, value_name = "NAME")]
    pub name: String,

    /// Lifetime axis in years (`start:end:step` or a comma list).
    #[arg(long, default_value = "0.5:5:0.5")]
    pub lifetimes: FloatAxis,

    /// Idle-fraction axis (`start:end:step` or a comma list).
    #[arg(long, default_value = "0:0.9:0.1")]
    pub idles: FloatAxis,
}

#[derive(Debug, Args)]
pub struct ShipmentsArgs {
    /// Annual revenue CSV (year, revenue, flagship name, unit price).
    #[arg(long, default_value = "data/revenue.csv")]
    pub revenue: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(if error.is_user_error() { 2u8 } else { 3u8 })
        }
    }
}
