//! Chiplet-count sweep: for each total die area, how does splitting the
//! design into n equal chiplets trade manufacturing yield against packaging
//! overhead?

use serde::{Deserialize, Serialize};

use crate::carbon::{self, DieSpec, PackageSpec};
use crate::dataset::{GlobalParams, ResolvedNode};
use crate::error::{Error, Result};

use super::finish_csv;

/// One evaluated (area, chiplet count) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipletSweepRow {
    pub total_area_mm2: f64,
    pub chiplet_count: u32,
    /// Manufacturing + packaging carbon at the distribution means; the
    /// design and operational stages don't depend on the split and are
    /// excluded so the crossover is visible.
    pub manufacturing_plus_packaging_cfp_kg: f64,
    /// True for the cheapest configuration of this area (ties go to the
    /// smallest chiplet count).
    pub is_optimal: bool,
    pub extrapolated: bool,
}

/// The sweep over all (area, count) combinations for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipletSweepReport {
    pub node_label: String,
    pub node_nm: f64,
    pub extrapolated: bool,
    pub rows: Vec<ChipletSweepRow>,
}

impl ChipletSweepReport {
    /// The optimal chiplet count for each area, in ascending area order.
    pub fn optimal_counts(&self) -> Vec<(f64, u32)> {
        self.rows
            .iter()
            .filter(|row| row.is_optimal)
            .map(|row| (row.total_area_mm2, row.chiplet_count))
            .collect()
    }

    /// CSV serialization with the frozen column order.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "total_area_mm2",
            "chiplet_count",
            "manufacturing_plus_packaging_cfp_kg",
            "is_optimal",
            "extrapolated",
        ])?;
        for row in &self.rows {
            writer.write_record([
                row.total_area_mm2.to_string(),
                row.chiplet_count.to_string(),
                row.manufacturing_plus_packaging_cfp_kg.to_string(),
                row.is_optimal.to_string(),
                row.extrapolated.to_string(),
            ])?;
        }
        finish_csv(writer)
    }
}

/// Sweeps chiplet counts over total areas for one resolved node, evaluating
/// manufacturing + packaging carbon at the distribution means.
///
/// Each configuration splits the total area into `n` equal dies; every die
/// gets its own yield (the chiplet advantage) while the packaging term uses
/// the overhead factor listed for `n` dies. `counts` must include 1 so the
/// monolithic baseline is always present.
pub fn chiplet_sweep(
    areas: &[f64],
    counts: &[u32],
    node: &ResolvedNode,
    global: &GlobalParams,
) -> Result<ChipletSweepReport> {
    if areas.is_empty() {
        return Err(Error::EmptyInput("sweep areas"));
    }
    if counts.is_empty() {
        return Err(Error::EmptyInput("sweep counts"));
    }
    if !counts.contains(&1) {
        return Err(Error::domain(
            "sweep counts must include 1 (the monolithic baseline)".to_string(),
        ));
    }
    if let Some(bad) = areas.iter().find(|a| !a.is_finite() || !(**a > 0.0)) {
        return Err(Error::domain(format!(
            "sweep areas must be positive, got {bad}"
        )));
    }
    if counts.contains(&0) {
        return Err(Error::domain("sweep counts must be ≥ 1".to_string()));
    }

    let mut areas: Vec<f64> = areas.to_vec();
    areas.sort_unstable_by(f64::total_cmp);
    areas.dedup();
    let mut counts: Vec<u32> = counts.to_vec();
    counts.sort_unstable();
    counts.dedup();

    let entry = &node.entry;
    let sample = crate::carbon::NodeSample {
        defect_density_per_cm2: entry.defect_density_per_cm2.mean(),
        epa_kwh_per_cm2: entry.epa_kwh_per_cm2.mean(),
        gpa_kg_per_cm2: entry.gpa_kg_per_cm2.mean(),
        materials_kg_per_cm2: entry.materials_kg_per_cm2,
        fab_carbon_intensity_kg_per_kwh: global.fab_carbon_intensity_kg_per_kwh.mean(),
        clustering_alpha: entry.clustering_alpha,
    };

    let mut rows = Vec::with_capacity(areas.len() * counts.len());
    for &area in &areas {
        let mut values = Vec::with_capacity(counts.len());
        for &count in &counts {
            let die = DieSpec::new(area / count as f64, entry.node_nm)?;
            let package = PackageSpec {
                dies: vec![die; count as usize],
                packaging_overhead_factor: entry.packaging_overhead_by_die_count.factor(count),
                packaging_carbon_kg_per_cm2: entry.packaging_carbon_kg_per_cm2,
                packaging_yield: entry.packaging_yield,
            };
            let mut cfp = 0.0;
            for die in &package.dies {
                cfp += carbon::manufacturing_cfp(die, &sample)?;
            }
            cfp += carbon::packaging_cfp(&package)?;
            values.push(cfp);
        }
        let best = values
            .iter()
            .copied()
            .min_by(f64::total_cmp)
            .expect("counts is non-empty");
        // First index at the minimum: ties resolve toward fewer chiplets
        // because counts are in ascending order.
        let best_index = values
            .iter()
            .position(|&v| v == best)
            .expect("minimum exists");
        for (i, (&count, &value)) in counts.iter().zip(&values).enumerate() {
            rows.push(ChipletSweepRow {
                total_area_mm2: area,
                chiplet_count: count,
                manufacturing_plus_packaging_cfp_kg: value,
                is_optimal: i == best_index,
                extrapolated: node.extrapolated,
            });
        }
    }

    Ok(ChipletSweepReport {
        node_label: entry.node_label.clone(),
        node_nm: entry.node_nm,
        extrapolated: node.extrapolated,
        rows,
    })
}
