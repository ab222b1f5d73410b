//! Glue between the catalog and the estimator: resolves a processor record
//! against a parameter pack into everything [`crate::stochastic`] and
//! [`crate::carbon`] need.
//!
//! A record with `chiplet_count = n` becomes a package of `n` equal dies of
//! `die_area_mm2 / n` each, with the packaging overhead factor looked up
//! for that die count. If the record's node is not listed in the pack, the
//! entry is extrapolated and the scenario is flagged so every downstream
//! report row can carry the flag.

use crate::carbon::{
    self, CarbonBreakdown, DesignParams, DieSpec, NodeSample, PackageSpec, UsageProfile,
};
use crate::dataset::{GlobalParams, NodeEntry, NodeParameterPack, ProcessorRecord};
use crate::error::Result;
use crate::stochastic::{run_monte_carlo, CarbonEstimate, StochasticInputs};

/// A processor record resolved against a parameter pack, ready to estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessorScenario {
    /// Catalog name of the processor.
    pub name: String,
    /// Process node in nm.
    pub node_nm: f64,
    /// Pack label of the resolved node (the extrapolation target as written
    /// for unlisted nodes).
    pub node_label: String,
    /// True when the node entry was extrapolated rather than listed.
    pub extrapolated: bool,
    pub package: PackageSpec<f64>,
    pub inputs: StochasticInputs,
    pub design: DesignParams<f64>,
    pub tdp_w: f64,
}

impl ProcessorScenario {
    /// Resolves `record` against `pack`.
    pub fn build(record: &ProcessorRecord, pack: &NodeParameterPack) -> Result<Self> {
        let resolved = pack.resolve_node(record.node_nm)?;
        let scenario = Self::from_parts(
            record.name.clone(),
            record.die_area_mm2,
            record.chiplet_count,
            record.transistor_millions,
            record.tdp_w,
            &resolved.entry,
            &pack.global,
        )?;
        Ok(ProcessorScenario {
            extrapolated: resolved.extrapolated,
            ..scenario
        })
    }

    /// Builds a scenario directly from a node entry (callers that already
    /// resolved or synthesized the entry, e.g. the chiplet sweep).
    pub fn from_parts(
        name: String,
        total_area_mm2: f64,
        chiplet_count: u32,
        transistor_millions: Option<f64>,
        tdp_w: f64,
        entry: &NodeEntry,
        global: &GlobalParams,
    ) -> Result<Self> {
        let count = chiplet_count.max(1);
        let per_die_area = total_area_mm2 / count as f64;
        let mut die = DieSpec::new(per_die_area, entry.node_nm)?;
        die.transistor_count_millions = transistor_millions.map(|t| t / count as f64);
        let package = PackageSpec {
            dies: vec![die; count as usize],
            packaging_overhead_factor: entry.packaging_overhead_by_die_count.factor(count),
            packaging_carbon_kg_per_cm2: entry.packaging_carbon_kg_per_cm2,
            packaging_yield: entry.packaging_yield,
        };
        package.validate()?;
        let inputs = StochasticInputs {
            defect_density: entry.defect_density_per_cm2.clone(),
            epa: entry.epa_kwh_per_cm2.clone(),
            gpa: entry.gpa_kg_per_cm2.clone(),
            fab_carbon_intensity: global.fab_carbon_intensity_kg_per_kwh.clone(),
            materials_kg_per_cm2: entry.materials_kg_per_cm2,
            clustering_alpha: entry.clustering_alpha,
        };
        inputs.validate()?;
        let design = DesignParams {
            design_energy_kwh_per_mm2: global.design_energy_kwh_per_mm2,
            design_carbon_intensity_kg_per_kwh: global.design_carbon_intensity_kg_per_kwh,
            amortization_volume_units: global.design_amortization_volume_units,
        };
        design.validate()?;
        Ok(ProcessorScenario {
            name,
            node_nm: entry.node_nm,
            node_label: entry.node_label.clone(),
            extrapolated: false,
            package,
            inputs,
            design,
            tdp_w,
        })
    }

    /// The node sample at the distribution means.
    pub fn mean_node_sample(&self) -> NodeSample<f64> {
        self.inputs.mean_node_sample()
    }

    /// Deterministic embodied footprint at the distribution means.
    pub fn embodied_at_means(&self) -> Result<CarbonBreakdown<f64>> {
        carbon::embodied_cfp(&self.package, &self.mean_node_sample(), &self.design)
    }

    /// Seeded Monte Carlo estimate of the total lifecycle footprint.
    pub fn estimate(
        &self,
        usage: &UsageProfile<f64>,
        samples: usize,
        seed: u64,
    ) -> Result<CarbonEstimate> {
        run_monte_carlo(
            &self.package,
            &self.inputs,
            &self.design,
            self.tdp_w,
            usage,
            samples,
            seed,
        )
    }
}
