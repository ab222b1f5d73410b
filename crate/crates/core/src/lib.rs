//! Lifecycle carbon-footprint modelling for processors.
//!
//! The crate estimates the embodied (design, manufacturing, packaging) and
//! operational carbon footprint of CPUs and GPUs from a small set of
//! per-process-node parameters. Manufacturing parameters are uncertain, so the
//! core estimator is a seeded Monte Carlo simulation over user-supplied
//! parameter distributions; everything downstream of it (chiplet sweeps,
//! amortization grids, fleet aggregation, efficiency trends) is built from the
//! same deterministic arithmetic.
//!
//! Overview of the modules:
//!
//! * [`carbon`] — deterministic footprint arithmetic: die yield, carbon per
//!   wafer area, and the embodied/operational/total breakdown.
//! * [`stochastic`] — parameter distributions, kernel-density fits, the Monte
//!   Carlo driver, and distribution-overlap measurement.
//! * [`dataset`] — the processor catalog (CSV), the node parameter pack
//!   (JSON), revenue tables, and log-log extrapolation to unlisted nodes.
//! * [`metrics`] — performance-per-carbon ratios and series normalization.
//! * [`scenario`] — glue that turns a catalog record plus a parameter pack
//!   into something the estimator can run.
//! * [`analyses`] — the report-producing studies exposed by the CLI.
//!
//! The numeric kernels in [`carbon`] and [`metrics`] are generic over the
//! floating-point type via the [`Scalar`] trait so they can run in `f32` or
//! `f64`; the aliases below fix the crate-wide default precision.

// Validation uses `!(x > 0)` rather than `x <= 0` throughout: the negated
// form is also true for NaN, so one comparison rejects both.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyses;
pub mod carbon;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod scalar;
pub mod scenario;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type used by the concrete aliases below and by every
/// non-generic module (sampling, datasets, analyses).
pub type Real = f64;

/// [`carbon::DieSpec`] at the default precision.
pub type DieSpec = carbon::DieSpec<Real>;
/// [`carbon::NodeSample`] at the default precision.
pub type NodeSample = carbon::NodeSample<Real>;
/// [`carbon::PackageSpec`] at the default precision.
pub type PackageSpec = carbon::PackageSpec<Real>;
/// [`carbon::DesignParams`] at the default precision.
pub type DesignParams = carbon::DesignParams<Real>;
/// [`carbon::UsageProfile`] at the default precision.
pub type UsageProfile = carbon::UsageProfile<Real>;
/// [`carbon::CarbonBreakdown`] at the default precision.
pub type CarbonBreakdown = carbon::CarbonBreakdown<Real>;
