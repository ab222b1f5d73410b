//! Flagship efficiency trends: pick each (vendor, segment, kind) group's
//! flagship per release year and line up their footprint metrics over time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::carbon::UsageProfile;
use crate::dataset::{MarketSegment, NodeParameterPack, ProcessorKind, ProcessorRecord};
use crate::error::{Error, Result};
use crate::metrics::{metric_row, MetricRow};
use crate::scenario::ProcessorScenario;
use crate::stochastic::derive_seed;

use super::finish_csv;

/// One flagship's metrics, tagged with the group it headlines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub vendor: String,
    pub segment: MarketSegment,
    pub kind: ProcessorKind,
    pub release_year: i32,
    pub node_label: String,
    pub node_nm: f64,
    pub extrapolated: bool,
    #[serde(flatten)]
    pub metrics: MetricRow,
}

/// Flagship-per-year metric series, grouped by (vendor, segment, kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    /// Rows sorted by vendor, segment, kind, then release year.
    pub rows: Vec<TrendRow>,
    /// Names that could never be flagships because they lack their
    /// designated benchmark score.
    pub skipped: Vec<String>,
}

impl TrendReport {
    /// CSV rendering with the frozen column order.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "vendor",
            "segment",
            "kind",
            "release_year",
            "name",
            "node_label",
            "node_nm",
            "performance_score",
            "performance_source",
            "total_cfp_kg",
            "embodied_cfp_kg",
            "operational_cfp_kg",
            "perf_per_cfp",
            "ecfpa_kg_per_cm2",
            "perf_per_ecfpa",
            "extrapolated",
        ])?;
        for row in &self.rows {
            writer.write_record([
                row.vendor.clone(),
                row.segment.to_string(),
                row.kind.to_string(),
                row.release_year.to_string(),
                row.metrics.name.clone(),
                row.node_label.clone(),
                row.node_nm.to_string(),
                row.metrics.performance_score.to_string(),
                row.metrics.performance_source.as_str().to_string(),
                row.metrics.total_cfp_kg.to_string(),
                row.metrics.embodied_cfp_kg.to_string(),
                row.metrics.operational_cfp_kg.to_string(),
                row.metrics.perf_per_cfp.to_string(),
                row.metrics.ecfpa_kg_per_cm2.to_string(),
                row.metrics.perf_per_ecfpa.to_string(),
                row.extrapolated.to_string(),
            ])?;
        }
        finish_csv(writer)
    }
}

/// `a` beats `b` for the flagship slot when it has the larger die, breaking
/// ties by higher TDP, then by lexicographically earlier name.
fn outranks(a: &ProcessorRecord, b: &ProcessorRecord) -> bool {
    a.die_area_mm2
        .total_cmp(&b.die_area_mm2)
        .then(a.tdp_w.total_cmp(&b.tdp_w))
        .then_with(|| b.name.cmp(&a.name))
        .is_gt()
}

/// Selects each group's flagship per release year and computes its metrics
/// from a seeded Monte Carlo estimate over the reference usage profile.
///
/// Groups are (vendor, segment, kind); the flagship of a group-year is the
/// record with the largest die area (ties: higher TDP, then earlier name).
/// Records without their designated benchmark score can't produce metrics,
/// so they are excluded up front and reported in `skipped`.
pub fn flagship_trend(
    records: &[ProcessorRecord],
    pack: &NodeParameterPack,
    samples: usize,
    seed: u64,
) -> Result<TrendReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("processor records"));
    }
    let mut skipped: Vec<String> = Vec::new();
    // Key: ((vendor, segment, kind), release_year).
    let mut flagships: BTreeMap<((&str, MarketSegment, ProcessorKind), i32), &ProcessorRecord> =
        BTreeMap::new();
    for record in records {
        if record.designated_performance().is_none() {
            skipped.push(record.name.clone());
            continue;
        }
        let key = (
            (record.vendor.as_str(), record.segment, record.kind),
            record.release_year,
        );
        match flagships.entry(key) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(record);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                if outranks(record, slot.get()) {
                    slot.insert(record);
                }
            }
        }
    }

    let usage = UsageProfile::reference(pack.global.use_carbon_intensity_kg_per_kwh)?;
    let mut rows = Vec::with_capacity(flagships.len());
    for record in flagships.into_values() {
        let scenario = ProcessorScenario::build(record, pack)?;
        let estimate = scenario.estimate(&usage, samples, derive_seed(seed, &record.name))?;
        rows.push(TrendRow {
            vendor: record.vendor.clone(),
            segment: record.segment,
            kind: record.kind,
            release_year: record.release_year,
            node_label: scenario.node_label,
            node_nm: scenario.node_nm,
            extrapolated: scenario.extrapolated,
            metrics: metric_row(record, &estimate.mean_breakdown)?,
        });
    }
    Ok(TrendReport { rows, skipped })
}
