//! Manufacturing cost vs. embodied footprint: is the price of silicon a
//! usable proxy for its carbon? (Per node it is not — the two series
//! diverge, which is what the correlation rows quantify.)

use serde::{Deserialize, Serialize};

use crate::carbon::{self, UsageProfile};
use crate::dataset::{NodeParameterPack, ProcessorRecord};
use crate::error::{Error, Result};
use crate::metrics::normalize_series;
use crate::scenario::ProcessorScenario;
use crate::stats;
use crate::stochastic::derive_seed;

use super::finish_csv;

/// One costable processor: estimated manufacturing cost next to its
/// embodied footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecordRow {
    pub name: String,
    pub node_label: String,
    pub node_nm: f64,
    /// `Σ over dies of die_area_cm2 × wafer_cost / yield(mean D₀)`.
    pub manufacturing_cost_usd: f64,
    /// Monte Carlo mean embodied footprint.
    pub embodied_cfp_kg: f64,
    pub extrapolated: bool,
}

/// One pack node's cost-per-area next to its carbon-per-area, normalized
/// against the coarsest costed node to expose how the two trends diverge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostNodeRow {
    pub node_label: String,
    pub node_nm: f64,
    pub wafer_cost_usd_per_cm2: f64,
    /// Yield-free manufacturing carbon per cm² at the distribution means:
    /// `fab_CI·EPA + GPA + materials`.
    pub manufacturing_carbon_kg_per_cm2: f64,
    pub normalized_cost: f64,
    pub normalized_carbon: f64,
}

/// Cost-vs-carbon comparison across the costable catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostCarbonReport {
    /// Per-record cost/footprint pairs, in catalog order.
    pub rows: Vec<CostRecordRow>,
    /// Rank correlation between cost and embodied footprint (headline:
    /// robust to the nonlinear divergence between the series).
    pub spearman: f64,
    /// Linear correlation, reported alongside.
    pub pearson: f64,
    /// Per-node divergence series, coarsest node first.
    pub node_series: Vec<CostNodeRow>,
    /// Records skipped because their node has no wafer cost in the pack.
    pub skipped: Vec<String>,
}

impl CostCarbonReport {
    /// Per-record CSV with the frozen column order.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "name",
            "node_label",
            "node_nm",
            "manufacturing_cost_usd",
            "embodied_cfp_kg",
            "extrapolated",
        ])?;
        for row in &self.rows {
            writer.write_record([
                row.name.clone(),
                row.node_label.clone(),
                row.node_nm.to_string(),
                row.manufacturing_cost_usd.to_string(),
                row.embodied_cfp_kg.to_string(),
                row.extrapolated.to_string(),
            ])?;
        }
        finish_csv(writer)
    }

    /// Per-node divergence CSV with the frozen column order.
    pub fn nodes_to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "node_label",
            "node_nm",
            "wafer_cost_usd_per_cm2",
            "manufacturing_carbon_kg_per_cm2",
            "normalized_cost",
            "normalized_carbon",
        ])?;
        for row in &self.node_series {
            writer.write_record([
                row.node_label.clone(),
                row.node_nm.to_string(),
                row.wafer_cost_usd_per_cm2.to_string(),
                row.manufacturing_carbon_kg_per_cm2.to_string(),
                row.normalized_cost.to_string(),
                row.normalized_carbon.to_string(),
            ])?;
        }
        finish_csv(writer)
    }

    /// Correlation summary CSV (`statistic,value`).
    pub fn correlations_to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["statistic", "value"])?;
        writer.write_record(["spearman", &self.spearman.to_string()])?;
        writer.write_record(["pearson", &self.pearson.to_string()])?;
        finish_csv(writer)
    }
}

/// Pairs every costable record's manufacturing cost with its Monte Carlo
/// mean embodied footprint and correlates the two series.
///
/// A record is costable when its (possibly extrapolated) node entry has a
/// wafer cost; others are listed in `skipped`. Cost divides each die's
/// wafer cost by the yield at the mean defect density — scrapped dies are
/// paid for too — mirroring the yield treatment on the carbon side.
pub fn cost_ecfp_series(
    records: &[ProcessorRecord],
    pack: &NodeParameterPack,
    samples: usize,
    seed: u64,
) -> Result<CostCarbonReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("processor records"));
    }
    let usage = UsageProfile::reference(pack.global.use_carbon_intensity_kg_per_kwh)?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for record in records {
        let resolved = pack.resolve_node(record.node_nm)?;
        let Some(cost_per_cm2) = resolved.entry.wafer_cost_usd_per_cm2 else {
            skipped.push(record.name.clone());
            continue;
        };
        let scenario = ProcessorScenario::from_parts(
            record.name.clone(),
            record.die_area_mm2,
            record.chiplet_count,
            record.transistor_millions,
            record.tdp_w,
            &resolved.entry,
            &pack.global,
        )?;
        let mean_d0 = resolved.entry.defect_density_per_cm2.mean();
        let mut cost = 0.0;
        for die in &scenario.package.dies {
            let y = carbon::yield_rate(die.area_cm2(), mean_d0, resolved.entry.clustering_alpha)?;
            cost += die.area_cm2() * cost_per_cm2 / y;
        }
        let estimate = scenario.estimate(&usage, samples, derive_seed(seed, &record.name))?;
        rows.push(CostRecordRow {
            name: record.name.clone(),
            node_label: scenario.node_label,
            node_nm: scenario.node_nm,
            manufacturing_cost_usd: cost,
            embodied_cfp_kg: estimate.mean_breakdown.embodied_kg,
            extrapolated: resolved.extrapolated,
        });
    }
    if rows.is_empty() {
        return Err(Error::domain(
            "no processor resolves to a node with a wafer cost; \
             add wafer_cost_usd_per_cm2 to the pack"
                .to_string(),
        ));
    }

    let costs: Vec<f64> = rows.iter().map(|r| r.manufacturing_cost_usd).collect();
    let embodied: Vec<f64> = rows.iter().map(|r| r.embodied_cfp_kg).collect();
    let spearman = stats::spearman(&costs, &embodied)?;
    let pearson = stats::pearson(&costs, &embodied)?;

    let costed_nodes: Vec<_> = pack
        .nodes
        .iter()
        .filter_map(|entry| entry.wafer_cost_usd_per_cm2.map(|cost| (entry, cost)))
        .collect();
    let node_costs: Vec<f64> = costed_nodes.iter().map(|&(_, cost)| cost).collect();
    let node_carbons: Vec<f64> = costed_nodes
        .iter()
        .map(|(entry, _)| {
            let sample = carbon::NodeSample {
                defect_density_per_cm2: entry.defect_density_per_cm2.mean(),
                epa_kwh_per_cm2: entry.epa_kwh_per_cm2.mean(),
                gpa_kg_per_cm2: entry.gpa_kg_per_cm2.mean(),
                materials_kg_per_cm2: entry.materials_kg_per_cm2,
                fab_carbon_intensity_kg_per_kwh: pack.global.fab_carbon_intensity_kg_per_kwh.mean(),
                clustering_alpha: entry.clustering_alpha,
            };
            carbon::carbon_per_area(&sample, 1.0)
        })
        .collect::<Result<_>>()?;
    let node_series = if costed_nodes.is_empty() {
        Vec::new()
    } else {
        let normalized_cost = normalize_series(&node_costs, 0)?;
        let normalized_carbon = normalize_series(&node_carbons, 0)?;
        costed_nodes
            .iter()
            .enumerate()
            .map(|(i, (entry, cost))| CostNodeRow {
                node_label: entry.node_label.clone(),
                node_nm: entry.node_nm,
                wafer_cost_usd_per_cm2: *cost,
                manufacturing_carbon_kg_per_cm2: node_carbons[i],
                normalized_cost: normalized_cost[i],
                normalized_carbon: normalized_carbon[i],
            })
            .collect()
    };

    Ok(CostCarbonReport {
        rows,
        spearman,
        pearson,
        node_series,
        skipped,
    })
}
