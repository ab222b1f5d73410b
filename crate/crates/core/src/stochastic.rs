//! Parameter uncertainty: distributions, seeded sampling, and the Monte
//! Carlo driver.
//!
//! Manufacturing parameters (defect density, fab energy per area, process
//! gas per area, fab carbon intensity) are described by [`Distribution`]s.
//! [`run_monte_carlo`] draws joint samples, pushes each through the
//! deterministic arithmetic in [`crate::carbon`], and summarizes the
//! resulting footprint distribution as a [`CarbonEstimate`].
//!
//! # Determinism
//!
//! Sample `i` of parameter `j` is a pure function of `(seed, j, i)`: each
//! draw gets its own counter-derived ChaCha substream instead of advancing a
//! shared generator. Samples are therefore independent of evaluation order,
//! and the summary reduction runs sequentially over the index-ordered sample
//! list — so the same `(inputs, n, seed)` produces bit-identical estimates
//! no matter how many worker threads are used.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carbon::{self, CarbonBreakdown, DesignParams, NodeSample, PackageSpec, UsageProfile};
use crate::error::{Error, Result};
use crate::stats;

/// Default Monte Carlo sample count.
pub const DEFAULT_SAMPLE_COUNT: usize = 10_000;

/// A truncated draw retries this many times before clamping to 0.
const MAX_TRUNCATION_RESAMPLES: u32 = 100;
/// A joint sample rejected by the carbon arithmetic retries this many times
/// before the whole run errors out.
const MAX_JOINT_ATTEMPTS: u32 = 100;
/// Rejection fraction above which the estimate carries a warning flag.
const REJECTION_WARNING_FRACTION: f64 = 0.01;

/// The distribution family of one uncertain parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// Deterministic value.
    PointMass { value: f64 },
    /// Uniform on `[lo, hi)`, `lo < hi`.
    Uniform { lo: f64, hi: f64 },
    /// Normal with `stddev > 0`.
    Gaussian { mean: f64, stddev: f64 },
    /// Gaussian kernel density estimate: a draw picks an observation
    /// uniformly and adds `gaussian(0, bandwidth)` noise.
    Kde {
        observations: Vec<f64>,
        bandwidth: f64,
    },
}

/// A parameter distribution, optionally truncated at zero.
///
/// Truncation applies at sampling time: a negative draw is retried (up to
/// [`MAX_TRUNCATION_RESAMPLES`] times within the same substream) and then
/// clamped to 0. [`Distribution::mean`] and [`Distribution::pdf`] describe
/// the *untruncated* base distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub kind: DistributionKind,
    pub truncate_at_zero: bool,
}

impl Distribution {
    /// A distribution that always yields `value`.
    pub fn point_mass(value: f64) -> Result<Self> {
        let dist = Distribution {
            kind: DistributionKind::PointMass { value },
            truncate_at_zero: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Uniform on `[lo, hi)`; requires `lo < hi`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let dist = Distribution {
            kind: DistributionKind::Uniform { lo, hi },
            truncate_at_zero: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Normal distribution; requires `stddev > 0`.
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        let dist = Distribution {
            kind: DistributionKind::Gaussian { mean, stddev },
            truncate_at_zero: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Kernel density estimate with an explicit bandwidth; requires at
    /// least one observation and `bandwidth > 0`. Use [`fit_kde`] to get a
    /// bandwidth from the data instead.
    pub fn kde(observations: Vec<f64>, bandwidth: f64) -> Result<Self> {
        let dist = Distribution {
            kind: DistributionKind::Kde {
                observations,
                bandwidth,
            },
            truncate_at_zero: false,
        };
        dist.validate()?;
        Ok(dist)
    }

    /// Returns the same distribution with truncation at zero enabled.
    pub fn truncated_at_zero(mut self) -> Self {
        self.truncate_at_zero = true;
        self
    }

    /// Checks the per-family invariants.
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DistributionKind::PointMass { value } => {
                if !value.is_finite() {
                    return Err(Error::domain(format!(
                        "point_mass value must be finite, got {value}"
                    )));
                }
            }
            DistributionKind::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
                    return Err(Error::domain(format!(
                        "uniform requires finite lo < hi, got [{lo}, {hi})"
                    )));
                }
            }
            DistributionKind::Gaussian { mean, stddev } => {
                if !mean.is_finite() || !stddev.is_finite() || !(*stddev > 0.0) {
                    return Err(Error::domain(format!(
                        "gaussian requires finite mean and stddev > 0, got ({mean}, {stddev})"
                    )));
                }
            }
            DistributionKind::Kde {
                observations,
                bandwidth,
            } => {
                if observations.is_empty() {
                    return Err(Error::EmptyInput("kde observations"));
                }
                if observations.iter().any(|x| !x.is_finite()) {
                    return Err(Error::domain(
                        "kde observations must all be finite".to_string(),
                    ));
                }
                if !bandwidth.is_finite() || !(*bandwidth > 0.0) {
                    return Err(Error::domain(format!(
                        "kde bandwidth must be > 0, got {bandwidth}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Mean of the untruncated base distribution.
    pub fn mean(&self) -> f64 {
        match &self.kind {
            DistributionKind::PointMass { value } => *value,
            DistributionKind::Uniform { lo, hi } => (lo + hi) / 2.0,
            DistributionKind::Gaussian { mean, .. } => *mean,
            DistributionKind::Kde { observations, .. } => stats::mean(observations),
        }
    }

    /// Probability density of the untruncated base distribution, or `None`
    /// for a point mass (which has no density).
    pub fn pdf(&self, x: f64) -> Option<f64> {
        match &self.kind {
            DistributionKind::PointMass { .. } => None,
            DistributionKind::Uniform { lo, hi } => Some(if x >= *lo && x < *hi {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            DistributionKind::Gaussian { mean, stddev } => Some(gaussian_pdf(x, *mean, *stddev)),
            DistributionKind::Kde {
                observations,
                bandwidth,
            } => {
                let total: f64 = observations
                    .iter()
                    .map(|&obs| gaussian_pdf(x, obs, *bandwidth))
                    .sum();
                Some(total / observations.len() as f64)
            }
        }
    }

    /// Draws one value, applying truncation if enabled: negative draws are
    /// retried up to [`MAX_TRUNCATION_RESAMPLES`] times, then clamped to 0.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if !self.truncate_at_zero {
            return self.sample_raw(rng);
        }
        for _ in 0..MAX_TRUNCATION_RESAMPLES {
            let x = self.sample_raw(rng);
            if x >= 0.0 {
                return x;
            }
        }
        0.0
    }

    fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            DistributionKind::PointMass { value } => *value,
            DistributionKind::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DistributionKind::Gaussian { mean, stddev } => Normal::new(*mean, *stddev)
                .expect("validated gaussian parameters")
                .sample(rng),
            DistributionKind::Kde {
                observations,
                bandwidth,
            } => {
                let idx = rng.random_range(0..observations.len());
                Normal::new(observations[idx], *bandwidth)
                    .expect("validated kde parameters")
                    .sample(rng)
            }
        }
    }

    /// Rescales the distribution multiplicatively (used when extrapolating
    /// node parameters: the shape is kept, the scale follows the mean).
    /// Requires `factor > 0` so orderings are preserved.
    pub fn scaled_by(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || !(factor > 0.0) {
            return Err(Error::domain(format!(
                "distribution scale factor must be > 0, got {factor}"
            )));
        }
        let kind = match &self.kind {
            DistributionKind::PointMass { value } => DistributionKind::PointMass {
                value: value * factor,
            },
            DistributionKind::Uniform { lo, hi } => DistributionKind::Uniform {
                lo: lo * factor,
                hi: hi * factor,
            },
            DistributionKind::Gaussian { mean, stddev } => DistributionKind::Gaussian {
                mean: mean * factor,
                stddev: stddev * factor,
            },
            DistributionKind::Kde {
                observations,
                bandwidth,
            } => DistributionKind::Kde {
                observations: observations.iter().map(|x| x * factor).collect(),
                bandwidth: bandwidth * factor,
            },
        };
        let dist = Distribution {
            kind,
            truncate_at_zero: self.truncate_at_zero,
        };
        dist.validate()?;
        Ok(dist)
    }
}

fn gaussian_pdf(x: f64, mean: f64, stddev: f64) -> f64 {
    let z = (x - mean) / stddev;
    (-0.5 * z * z).exp() / (stddev * (2.0 * std::f64::consts::PI).sqrt())
}

/// Fits a Gaussian KDE to observations using Silverman's rule of thumb:
/// `0.9 · min(σ, IQR/1.34) · n^(−1/5)`, with σ the population standard
/// deviation and the IQR taken from inverse-CDF quantiles.
///
/// Degenerate inputs are handled explicitly: all-equal observations get the
/// tiny bandwidth `max(|x|, 1) · 1e-6` (a near-point-mass), and a zero IQR
/// with unequal observations falls back to σ alone.
pub fn fit_kde(observations: &[f64]) -> Result<Distribution> {
    if observations.len() < 2 {
        return Err(Error::domain(format!(
            "kde fit needs at least 2 observations, got {}",
            observations.len()
        )));
    }
    if observations.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain(
            "kde observations must all be finite".to_string(),
        ));
    }
    let first = observations[0];
    if observations.iter().all(|&x| x == first) {
        let bandwidth = first.abs().max(1.0) * 1e-6;
        return Distribution::kde(observations.to_vec(), bandwidth);
    }
    let mut sorted = observations.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let sigma = stats::population_stddev(observations);
    let iqr =
        stats::quantile_inverse_cdf(&sorted, 0.75)? - stats::quantile_inverse_cdf(&sorted, 0.25)?;
    let spread = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    let bandwidth = 0.9 * spread * (observations.len() as f64).powf(-0.2);
    Distribution::kde(observations.to_vec(), bandwidth)
}

/// The uncertain manufacturing parameters of one scenario: a distribution
/// for each stochastic field of [`NodeSample`], plus fixed values for the
/// fields treated as known.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticInputs {
    pub defect_density: Distribution,
    pub epa: Distribution,
    pub gpa: Distribution,
    pub fab_carbon_intensity: Distribution,
    pub materials_kg_per_cm2: f64,
    pub clustering_alpha: f64,
}

/// Substream identifiers: each distribution samples from its own stream so
/// draws stay independent across parameters and across sample indices.
const STREAM_DEFECT: u64 = 0;
const STREAM_EPA: u64 = 1;
const STREAM_GPA: u64 = 2;
const STREAM_FAB_CI: u64 = 3;

/// Sample indices must fit in 48 bits of the stream id; the top 16 bits
/// encode the retry attempt and the parameter.
const MAX_SAMPLE_INDEX: u64 = 1 << 48;

impl StochasticInputs {
    /// Checks every distribution and fixed field.
    pub fn validate(&self) -> Result<()> {
        self.defect_density.validate()?;
        self.epa.validate()?;
        self.gpa.validate()?;
        self.fab_carbon_intensity.validate()?;
        if !self.materials_kg_per_cm2.is_finite() || self.materials_kg_per_cm2 < 0.0 {
            return Err(Error::domain(format!(
                "materials_kg_per_cm2 must be non-negative, got {}",
                self.materials_kg_per_cm2
            )));
        }
        if !self.clustering_alpha.is_finite() || !(self.clustering_alpha > 0.0) {
            return Err(Error::domain(format!(
                "clustering_alpha must be > 0, got {}",
                self.clustering_alpha
            )));
        }
        Ok(())
    }

    /// The node sample at the distribution means — the deterministic
    /// counterpart of one Monte Carlo draw.
    pub fn mean_node_sample(&self) -> NodeSample<f64> {
        NodeSample {
            defect_density_per_cm2: self.defect_density.mean(),
            epa_kwh_per_cm2: self.epa.mean(),
            gpa_kg_per_cm2: self.gpa.mean(),
            materials_kg_per_cm2: self.materials_kg_per_cm2,
            fab_carbon_intensity_kg_per_kwh: self.fab_carbon_intensity.mean(),
            clustering_alpha: self.clustering_alpha,
        }
    }

    /// Draws the joint node sample for `(seed, index, attempt)`. Pure:
    /// the same arguments always produce the same sample.
    fn draw(&self, seed: u64, index: u64, attempt: u32) -> NodeSample<f64> {
        let draw_one = |param: u64, dist: &Distribution| {
            let mut rng = substream(seed, param, index, attempt);
            dist.sample(&mut rng)
        };
        NodeSample {
            defect_density_per_cm2: draw_one(STREAM_DEFECT, &self.defect_density),
            epa_kwh_per_cm2: draw_one(STREAM_EPA, &self.epa),
            gpa_kg_per_cm2: draw_one(STREAM_GPA, &self.gpa),
            materials_kg_per_cm2: self.materials_kg_per_cm2,
            fab_carbon_intensity_kg_per_kwh: draw_one(STREAM_FAB_CI, &self.fab_carbon_intensity),
            clustering_alpha: self.clustering_alpha,
        }
    }
}

/// Builds the ChaCha substream for one (parameter, sample index, attempt)
/// triple. The stream id packs attempt (top 8 bits), parameter (next 8),
/// and sample index (low 48).
fn substream(seed: u64, param: u64, index: u64, attempt: u32) -> ChaCha8Rng {
    debug_assert!(index < MAX_SAMPLE_INDEX);
    debug_assert!(param < 256);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 56) | (param << 48) | index);
    rng
}

/// Mixes a textual tag into a base seed (FNV-1a), giving each named
/// sub-analysis its own independent stream family.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for byte in base.to_le_bytes() {
        hash = (hash ^ byte as u64).wrapping_mul(PRIME);
    }
    for byte in tag.as_bytes() {
        hash = (hash ^ *byte as u64).wrapping_mul(PRIME);
    }
    hash
}

/// Quantiles of the estimated footprint distribution, in kg CO₂eq.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

/// Summary of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarbonEstimate {
    /// Number of accepted samples (matches the requested `n`).
    pub sample_count: usize,
    /// Per-sample total footprints in index order. Retained by default so
    /// estimates can be compared with [`overlap`]; drop with
    /// [`CarbonEstimate::without_samples`] for compact serialization.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<Vec<f64>>,
    /// Mean total footprint — the representative scalar for the estimate.
    pub mean_kg: f64,
    /// Sample standard deviation of the total footprint.
    pub stddev_kg: f64,
    /// 5/25/50/75/95% quantiles of the total footprint.
    pub quantiles: QuantileSummary,
    /// Per-stage breakdown at the sample means (stage means are averaged
    /// individually; the embodied/total sums are re-derived so additivity
    /// stays exact).
    pub mean_breakdown: CarbonBreakdown<f64>,
    /// Joint draws rejected by the carbon arithmetic and redrawn.
    pub rejected_draws: u64,
    /// True when more than 1% of draws were rejected — the reported
    /// distribution then noticeably deviates from the configured one.
    pub rejection_warning: bool,
}

impl CarbonEstimate {
    /// Returns the estimate without the per-sample list.
    pub fn without_samples(mut self) -> Self {
        self.samples = None;
        self
    }
}

/// Arithmetic mean that is bit-exact when every value is identical (the
/// all-point-mass case must reproduce the deterministic result exactly).
fn mean_exact_when_constant(values: &[f64]) -> f64 {
    match values.first() {
        None => 0.0,
        Some(&first) if values.iter().all(|&x| x == first) => first,
        _ => stats::mean(values),
    }
}

/// Runs `n` Monte Carlo samples of the total lifecycle footprint.
///
/// Each sample draws the four stochastic parameters from counter-derived
/// substreams of `seed` and evaluates [`carbon::total_cfp`]. Draws the
/// carbon arithmetic rejects (e.g. a negative defect density from an
/// untruncated distribution) are redrawn with a bumped attempt counter, up
/// to 100 times per sample; rejections are counted and more than 1% sets
/// [`CarbonEstimate::rejection_warning`].
///
/// Sample evaluation runs in parallel; results are identical for any worker
/// count (see the module docs).
pub fn run_monte_carlo(
    pkg: &PackageSpec<f64>,
    inputs: &StochasticInputs,
    design: &DesignParams<f64>,
    tdp_w: f64,
    usage: &UsageProfile<f64>,
    n: usize,
    seed: u64,
) -> Result<CarbonEstimate> {
    if n < 1 {
        return Err(Error::domain("sample count must be ≥ 1".to_string()));
    }
    if n as u64 >= MAX_SAMPLE_INDEX {
        return Err(Error::domain(format!(
            "sample count must be < 2^48, got {n}"
        )));
    }
    inputs.validate()?;
    pkg.validate()?;
    design.validate()?;
    usage.validate()?;

    let evaluated: Vec<(CarbonBreakdown<f64>, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|index| evaluate_sample(pkg, inputs, design, tdp_w, usage, seed, index))
        .collect::<Result<_>>()?;

    let rejected_draws: u64 = evaluated.iter().map(|(_, rejected)| rejected).sum();
    let totals: Vec<f64> = evaluated.iter().map(|(b, _)| b.total_kg).collect();

    let mut sorted = totals.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let quantiles = QuantileSummary {
        p5: stats::quantile_linear(&sorted, 0.05)?,
        p25: stats::quantile_linear(&sorted, 0.25)?,
        p50: stats::quantile_linear(&sorted, 0.50)?,
        p75: stats::quantile_linear(&sorted, 0.75)?,
        p95: stats::quantile_linear(&sorted, 0.95)?,
    };

    let stage = |f: fn(&CarbonBreakdown<f64>) -> f64| -> f64 {
        let values: Vec<f64> = evaluated.iter().map(|(b, _)| f(b)).collect();
        mean_exact_when_constant(&values)
    };
    let mean_breakdown = CarbonBreakdown::from_stages(
        stage(|b| b.design_kg),
        stage(|b| b.manufacturing_kg),
        stage(|b| b.packaging_kg),
        stage(|b| b.operational_kg),
    );

    Ok(CarbonEstimate {
        sample_count: n,
        mean_kg: mean_exact_when_constant(&totals),
        stddev_kg: stats::sample_stddev(&totals),
        quantiles,
        mean_breakdown,
        rejected_draws,
        rejection_warning: rejected_draws as f64 > REJECTION_WARNING_FRACTION * n as f64,
        samples: Some(totals),
    })
}

/// Evaluates sample `index`, redrawing on domain rejections. Returns the
/// breakdown and how many draws were rejected along the way.
fn evaluate_sample(
    pkg: &PackageSpec<f64>,
    inputs: &StochasticInputs,
    design: &DesignParams<f64>,
    tdp_w: f64,
    usage: &UsageProfile<f64>,
    seed: u64,
    index: u64,
) -> Result<(CarbonBreakdown<f64>, u64)> {
    for attempt in 0..MAX_JOINT_ATTEMPTS {
        let node = inputs.draw(seed, index, attempt);
        match carbon::total_cfp(pkg, &node, design, tdp_w, usage) {
            Ok(breakdown) => return Ok((breakdown, attempt as u64)),
            Err(Error::Domain(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Err(Error::Stochastic(format!(
        "sample {index}: no accepted draw after {MAX_JOINT_ATTEMPTS} attempts; \
         check the input distributions for physically impossible ranges"
    )))
}

/// Overlap coefficient of two empirical footprint distributions, in [0, 1]:
/// 0 = disjoint, 1 = identical.
///
/// Both sample lists are binned into a shared histogram (Freedman–Diaconis
/// bin width on the pooled samples, Sturges fallback when the pooled IQR is
/// zero) and the per-bin minimum of the two relative frequencies is
/// accumulated. The accumulation is done in cross-multiplied integers so an
/// estimate compared with itself yields exactly 1.0.
pub fn overlap(a: &CarbonEstimate, b: &CarbonEstimate) -> Result<f64> {
    let sa = a
        .samples
        .as_deref()
        .ok_or_else(|| Error::domain("overlap requires retained samples (lhs)".to_string()))?;
    let sb = b
        .samples
        .as_deref()
        .ok_or_else(|| Error::domain("overlap requires retained samples (rhs)".to_string()))?;
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::EmptyInput("overlap samples"));
    }

    let mut pooled: Vec<f64> = sa.iter().chain(sb.iter()).copied().collect();
    pooled.sort_unstable_by(f64::total_cmp);
    let min = pooled[0];
    let max = pooled[pooled.len() - 1];
    if min == max {
        // Every sample of both estimates is the same value: fully identical.
        return Ok(1.0);
    }

    let n_pooled = pooled.len() as f64;
    let iqr = stats::quantile_linear(&pooled, 0.75)? - stats::quantile_linear(&pooled, 0.25)?;
    let fd_width = 2.0 * iqr / n_pooled.cbrt();
    let bin_count = if fd_width > 0.0 {
        (((max - min) / fd_width).ceil() as usize).clamp(1, 65_536)
    } else {
        // Sturges: enough bins to resolve heavily tied data.
        (n_pooled.log2().ceil() as usize + 1).clamp(1, 65_536)
    };
    let width = (max - min) / bin_count as f64;

    let histogram = |samples: &[f64]| -> Vec<u64> {
        let mut counts = vec![0u64; bin_count];
        for &x in samples {
            let idx = (((x - min) / width) as usize).min(bin_count - 1);
            counts[idx] += 1;
        }
        counts
    };
    let ca = histogram(sa);
    let cb = histogram(sb);

    // Σ min(count_a/n_a, count_b/n_b) computed as integers over the common
    // denominator n_a·n_b, converted to float only once at the end.
    let na = sa.len() as u128;
    let nb = sb.len() as u128;
    let shared: u128 = ca
        .iter()
        .zip(&cb)
        .map(|(&x, &y)| (x as u128 * nb).min(y as u128 * na))
        .sum();
    Ok(shared as f64 / (na * nb) as f64)
}
