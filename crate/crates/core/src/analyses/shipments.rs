//! Fleet aggregation: unit shipments estimated from annual revenue, times a
//! per-chip footprint from a seeded Monte Carlo of each year's flagship.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::carbon::UsageProfile;
use crate::dataset::{nearest_name, NodeParameterPack, ProcessorRecord, RevenueRecord};
use crate::error::{Error, Result};
use crate::metrics::{normalize_series, perf_per_cfp};
use crate::scenario::ProcessorScenario;
use crate::stochastic::derive_seed;

use super::finish_csv;

/// Profit margin the revenue figures are read against. Recorded as report
/// metadata only: the unit count conservatively divides the full revenue by
/// the flagship list price, which understates true shipments.
pub const ASSUMED_PROFIT_MARGIN: f64 = 0.75;

/// One revenue year: estimated units shipped and their combined footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipmentYearRow {
    pub year: i32,
    pub flagship: String,
    /// `floor(revenue / unit_price)`.
    pub units: u64,
    /// Monte Carlo mean lifecycle footprint of one flagship unit over the
    /// reference three-year, 60%-idle service profile.
    pub per_chip_cfp_kg: f64,
    pub total_cfp_kg: f64,
    pub peak_tflops_per_cfp: f64,
    /// `total_cfp_kg` relative to the first year's.
    pub normalized_total_cfp: f64,
    /// `peak_tflops_per_cfp` relative to the first year's.
    pub normalized_tflops_per_cfp: f64,
    pub extrapolated: bool,
}

/// Year-by-year shipment footprint, normalized against the first year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipmentReport {
    /// See [`ASSUMED_PROFIT_MARGIN`]; metadata, not used in the unit count.
    pub assumed_profit_margin: f64,
    pub lifetime_years: f64,
    pub idle_fraction: f64,
    pub rows: Vec<ShipmentYearRow>,
}

impl ShipmentReport {
    /// CSV rendering with the frozen column order.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "year",
            "flagship",
            "units",
            "per_chip_cfp_kg",
            "total_cfp_kg",
            "peak_tflops_per_cfp",
            "normalized_total_cfp",
            "normalized_tflops_per_cfp",
            "extrapolated",
        ])?;
        for row in &self.rows {
            writer.write_record([
                row.year.to_string(),
                row.flagship.clone(),
                row.units.to_string(),
                row.per_chip_cfp_kg.to_string(),
                row.total_cfp_kg.to_string(),
                row.peak_tflops_per_cfp.to_string(),
                row.normalized_total_cfp.to_string(),
                row.normalized_tflops_per_cfp.to_string(),
                row.extrapolated.to_string(),
            ])?;
        }
        finish_csv(writer)
    }
}

/// Converts annual revenue into shipped units and aggregate footprint.
///
/// Units per year are `floor(revenue / unit_price)`. Each distinct flagship
/// gets one seeded Monte Carlo estimate (substream derived from `seed` and
/// the flagship name, so adding a year cannot shift another flagship's
/// numbers); its mean lifecycle footprint and peak-TFLOPS efficiency are
/// reused across the years it headlines. Rows are sorted by year and the
/// normalized columns are relative to the earliest year.
pub fn aggregate_shipments(
    revenue: &[RevenueRecord],
    records: &[ProcessorRecord],
    pack: &NodeParameterPack,
    samples: usize,
    seed: u64,
) -> Result<ShipmentReport> {
    if revenue.is_empty() {
        return Err(Error::EmptyInput("revenue records"));
    }
    let mut years: Vec<&RevenueRecord> = revenue.iter().collect();
    years.sort_by_key(|r| r.year);

    let usage = UsageProfile::reference(pack.global.use_carbon_intensity_kg_per_kwh)?;
    let by_name: HashMap<&str, &ProcessorRecord> =
        records.iter().map(|r| (r.name.as_str(), r)).collect();

    // (per-chip kg, TFLOPS per kg, extrapolated), one evaluation per flagship.
    let mut flagship_cache: HashMap<String, (f64, f64, bool)> = HashMap::new();
    let mut rows = Vec::with_capacity(years.len());
    for record in &years {
        if !(record.unit_price_usd > 0.0 && record.unit_price_usd.is_finite()) {
            return Err(Error::domain(format!(
                "unit price for {} must be positive, got {}",
                record.year, record.unit_price_usd
            )));
        }
        if !(record.revenue_usd >= 0.0) || !record.revenue_usd.is_finite() {
            return Err(Error::domain(format!(
                "revenue for {} must be non-negative, got {}",
                record.year, record.revenue_usd
            )));
        }
        let (per_chip, tflops_per_cfp, extrapolated) = match flagship_cache
            .get(&record.flagship_name)
        {
            Some(&cached) => cached,
            None => {
                let flagship = *by_name.get(record.flagship_name.as_str()).ok_or_else(|| {
                    Error::UnknownProcessor {
                        name: record.flagship_name.clone(),
                        suggestion: nearest_name(
                            records.iter().map(|r| r.name.as_str()),
                            &record.flagship_name,
                        ),
                    }
                })?;
                let tflops =
                    flagship
                        .perf_peak_tflops
                        .ok_or_else(|| Error::MissingPerformance {
                            name: flagship.name.clone(),
                            column: crate::dataset::PerfSource::PeakTflops.to_string(),
                        })?;
                let scenario = ProcessorScenario::build(flagship, pack)?;
                let estimate =
                    scenario.estimate(&usage, samples, derive_seed(seed, &flagship.name))?;
                let entry = (
                    estimate.mean_kg,
                    perf_per_cfp(tflops, estimate.mean_kg)?,
                    scenario.extrapolated,
                );
                flagship_cache.insert(record.flagship_name.clone(), entry);
                entry
            }
        };
        let units = (record.revenue_usd / record.unit_price_usd).floor() as u64;
        rows.push(ShipmentYearRow {
            year: record.year,
            flagship: record.flagship_name.clone(),
            units,
            per_chip_cfp_kg: per_chip,
            total_cfp_kg: units as f64 * per_chip,
            peak_tflops_per_cfp: tflops_per_cfp,
            normalized_total_cfp: f64::NAN,
            normalized_tflops_per_cfp: f64::NAN,
            extrapolated,
        });
    }

    let totals: Vec<f64> = rows.iter().map(|r| r.total_cfp_kg).collect();
    let efficiencies: Vec<f64> = rows.iter().map(|r| r.peak_tflops_per_cfp).collect();
    let normalized_totals = normalize_series(&totals, 0)?;
    let normalized_efficiencies = normalize_series(&efficiencies, 0)?;
    for (row, (nt, ne)) in rows
        .iter_mut()
        .zip(normalized_totals.into_iter().zip(normalized_efficiencies))
    {
        row.normalized_total_cfp = nt;
        row.normalized_tflops_per_cfp = ne;
    }

    Ok(ShipmentReport {
        assumed_profit_margin: ASSUMED_PROFIT_MARGIN,
        lifetime_years: usage.lifetime_years,
        idle_fraction: usage.idle_fraction,
        rows,
    })
}
