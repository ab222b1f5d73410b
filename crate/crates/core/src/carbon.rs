//! Deterministic lifecycle carbon arithmetic.
//!
//! Everything in this module is a pure function of its arguments: given one
//! concrete draw of every manufacturing parameter, it computes die yield,
//! carbon per wafer area, and the per-stage footprint breakdown. Uncertainty
//! handling lives one level up in [`crate::stochastic`], which calls into
//! this module once per Monte Carlo sample.
//!
//! Unit conventions, chosen to match the usual dataset shapes:
//!
//! * die areas are stored in mm² and converted to cm² inside the operations,
//!   because per-area coefficients (energy, gas, materials) are per cm²;
//! * carbon is always kg CO₂eq, energy is kWh, power is W;
//! * a year is exactly 8760 hours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Hours in a modelled year (365 × 24, no leap handling — determinism wins).
pub const HOURS_PER_YEAR: f64 = 8760.0;
/// Service lifetime assumed by [`UsageProfile::reference`], in years.
pub const REFERENCE_LIFETIME_YEARS: f64 = 3.0;
/// Idle fraction assumed by [`UsageProfile::reference`].
pub const REFERENCE_IDLE_FRACTION: f64 = 0.6;
/// Die areas are stored in mm²; per-area coefficients are per cm².
const MM2_PER_CM2: f64 = 100.0;
/// TDP is in watts; energy coefficients are per kWh.
const W_PER_KW: f64 = 1000.0;

/// One silicon die: the yield model only cares about its area and node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DieSpec<F> {
    /// Die area in mm².
    pub area_mm2: F,
    /// Process node in nm (7.0 for "7 nm").
    pub node_nm: F,
    /// Transistor budget in millions, when known. Informational only.
    pub transistor_count_millions: Option<F>,
}

impl<F: Scalar> DieSpec<F> {
    /// Builds a die spec, rejecting non-positive area or node.
    pub fn new(area_mm2: F, node_nm: F) -> Result<Self> {
        let die = DieSpec {
            area_mm2,
            node_nm,
            transistor_count_millions: None,
        };
        if !(area_mm2 > F::zero()) {
            return Err(Error::domain(format!(
                "die area_mm2 must be > 0, got {area_mm2}"
            )));
        }
        die.validate()?;
        Ok(die)
    }

    /// Checks the field ranges used by the operations below. Area zero is
    /// tolerated here (a zero-area die simply contributes nothing) even
    /// though [`DieSpec::new`] rejects it for catalog data.
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("die area_mm2", self.area_mm2)?;
        ensure_finite("die node_nm", self.node_nm)?;
        if !(self.node_nm > F::zero()) {
            return Err(Error::domain(format!(
                "die node_nm must be > 0, got {}",
                self.node_nm
            )));
        }
        if let Some(t) = self.transistor_count_millions {
            ensure_nonneg("die transistor_count_millions", t)?;
        }
        Ok(())
    }

    /// Die area converted to cm².
    pub fn area_cm2(&self) -> F {
        self.area_mm2 / F::cast(MM2_PER_CM2)
    }
}

/// One concrete draw of the per-node manufacturing parameters.
///
/// In Monte Carlo runs each field comes from its own distribution; for
/// deterministic evaluation the distribution means are used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSample<F> {
    /// Defect density D₀ in defects/cm².
    pub defect_density_per_cm2: F,
    /// Fab energy per wafer area (EPA) in kWh/cm².
    pub epa_kwh_per_cm2: F,
    /// Direct fab gas emissions per wafer area (GPA) in kg CO₂eq/cm².
    pub gpa_kg_per_cm2: F,
    /// Upstream material footprint per wafer area in kg CO₂eq/cm².
    pub materials_kg_per_cm2: F,
    /// Carbon intensity of the fab's energy source in kg CO₂eq/kWh.
    pub fab_carbon_intensity_kg_per_kwh: F,
    /// Negative-binomial clustering parameter α of the yield model.
    pub clustering_alpha: F,
}

impl<F: Scalar> NodeSample<F> {
    /// Checks field ranges: everything finite and non-negative, α > 0.
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("defect_density_per_cm2", self.defect_density_per_cm2)?;
        ensure_nonneg("epa_kwh_per_cm2", self.epa_kwh_per_cm2)?;
        ensure_nonneg("gpa_kg_per_cm2", self.gpa_kg_per_cm2)?;
        ensure_nonneg("materials_kg_per_cm2", self.materials_kg_per_cm2)?;
        ensure_nonneg(
            "fab_carbon_intensity_kg_per_kwh",
            self.fab_carbon_intensity_kg_per_kwh,
        )?;
        ensure_finite("clustering_alpha", self.clustering_alpha)?;
        if !(self.clustering_alpha > F::zero()) {
            return Err(Error::domain(format!(
                "clustering_alpha must be > 0, got {}",
                self.clustering_alpha
            )));
        }
        Ok(())
    }
}

/// A packaged processor: one or more dies plus the packaging cost model.
///
/// Chiplet designs split the total area over several dies; each die then
/// gets its own (better) yield, while the packaging term grows with the
/// overhead factor looked up for that die count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageSpec<F> {
    /// The dies inside the package. Must be non-empty.
    pub dies: Vec<DieSpec<F>>,
    /// Substrate/interposer area multiplier for this die count
    /// (1.0 ≈ bare monolithic baseline).
    pub packaging_overhead_factor: F,
    /// Packaging carbon per cm² of (overhead-scaled) die area.
    pub packaging_carbon_kg_per_cm2: F,
    /// Packaging/assembly yield in (0, 1].
    pub packaging_yield: F,
}

impl<F: Scalar> PackageSpec<F> {
    /// Checks the package invariants: non-empty dies, valid per-die fields,
    /// non-negative packaging coefficients, packaging yield in (0, 1].
    pub fn validate(&self) -> Result<()> {
        if self.dies.is_empty() {
            return Err(Error::EmptyInput("PackageSpec.dies"));
        }
        for die in &self.dies {
            die.validate()?;
        }
        ensure_nonneg("packaging_overhead_factor", self.packaging_overhead_factor)?;
        ensure_nonneg(
            "packaging_carbon_kg_per_cm2",
            self.packaging_carbon_kg_per_cm2,
        )?;
        ensure_finite("packaging_yield", self.packaging_yield)?;
        if !(self.packaging_yield > F::zero() && self.packaging_yield <= F::one()) {
            return Err(Error::domain(format!(
                "packaging_yield must be in (0, 1], got {}",
                self.packaging_yield
            )));
        }
        Ok(())
    }

    /// Total silicon area across all dies, in cm².
    pub fn total_area_cm2(&self) -> F {
        self.dies.iter().map(DieSpec::area_cm2).sum()
    }

    /// Total silicon area across all dies, in mm².
    pub fn total_area_mm2(&self) -> F {
        self.dies.iter().map(|d| d.area_mm2).sum()
    }
}

/// Design-stage carbon model: one-off design energy amortized over the
/// number of units expected to ship.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams<F> {
    /// Design/verification energy per mm² of die area, in kWh/mm².
    pub design_energy_kwh_per_mm2: F,
    /// Carbon intensity of the design-phase energy, in kg CO₂eq/kWh.
    pub design_carbon_intensity_kg_per_kwh: F,
    /// Production volume the design effort is amortized over. Must be ≥ 1.
    pub amortization_volume_units: u64,
}

impl<F: Scalar> DesignParams<F> {
    /// Checks coefficient ranges and the volume ≥ 1 invariant.
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("design_energy_kwh_per_mm2", self.design_energy_kwh_per_mm2)?;
        ensure_nonneg(
            "design_carbon_intensity_kg_per_kwh",
            self.design_carbon_intensity_kg_per_kwh,
        )?;
        if self.amortization_volume_units < 1 {
            return Err(Error::domain(
                "amortization_volume_units must be ≥ 1".to_string(),
            ));
        }
        Ok(())
    }
}

/// How the deployed processor is used over its life.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsageProfile<F> {
    /// Deployment lifetime in years.
    pub lifetime_years: F,
    /// Fraction of the lifetime spent idle, in [0, 1]. Idle hours are
    /// modelled as drawing zero power.
    pub idle_fraction: F,
    /// Carbon intensity of the electricity at the deployment site,
    /// in kg CO₂eq/kWh.
    pub use_carbon_intensity_kg_per_kwh: F,
}

impl<F: Scalar> UsageProfile<F> {
    /// Builds a usage profile, rejecting out-of-range fields.
    pub fn new(
        lifetime_years: F,
        idle_fraction: F,
        use_carbon_intensity_kg_per_kwh: F,
    ) -> Result<Self> {
        let usage = UsageProfile {
            lifetime_years,
            idle_fraction,
            use_carbon_intensity_kg_per_kwh,
        };
        usage.validate()?;
        Ok(usage)
    }

    /// The fixed three-year, 60%-idle service profile that fleet-level
    /// reports (shipments, flagship trends) assume for every processor.
    pub fn reference(use_carbon_intensity_kg_per_kwh: F) -> Result<Self> {
        UsageProfile::new(
            F::cast(REFERENCE_LIFETIME_YEARS),
            F::cast(REFERENCE_IDLE_FRACTION),
            use_carbon_intensity_kg_per_kwh,
        )
    }

    /// Checks field ranges: lifetime ≥ 0, idle fraction in [0, 1], CI ≥ 0.
    pub fn validate(&self) -> Result<()> {
        ensure_nonneg("lifetime_years", self.lifetime_years)?;
        ensure_finite("idle_fraction", self.idle_fraction)?;
        if !(self.idle_fraction >= F::zero() && self.idle_fraction <= F::one()) {
            return Err(Error::domain(format!(
                "idle_fraction must be in [0, 1], got {}",
                self.idle_fraction
            )));
        }
        ensure_nonneg(
            "use_carbon_intensity_kg_per_kwh",
            self.use_carbon_intensity_kg_per_kwh,
        )?;
        Ok(())
    }
}

/// Per-stage footprint of one evaluation, in kg CO₂eq.
///
/// The derived sums are computed once in [`CarbonBreakdown::from_stages`],
/// so `embodied_kg == design_kg + manufacturing_kg + packaging_kg` and
/// `total_kg == embodied_kg + operational_kg` hold bit-exactly by
/// construction, not merely to within rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonBreakdown<F> {
    pub design_kg: F,
    pub manufacturing_kg: F,
    pub packaging_kg: F,
    pub embodied_kg: F,
    pub operational_kg: F,
    pub total_kg: F,
}

impl<F: Scalar> CarbonBreakdown<F> {
    /// Assembles a breakdown from the four primitive stages, deriving the
    /// embodied and total sums.
    pub fn from_stages(
        design_kg: F,
        manufacturing_kg: F,
        packaging_kg: F,
        operational_kg: F,
    ) -> Self {
        let embodied_kg = design_kg + manufacturing_kg + packaging_kg;
        let total_kg = embodied_kg + operational_kg;
        CarbonBreakdown {
            design_kg,
            manufacturing_kg,
            packaging_kg,
            embodied_kg,
            operational_kg,
            total_kg,
        }
    }

    /// The all-zero breakdown.
    pub fn zero() -> Self {
        CarbonBreakdown::from_stages(F::zero(), F::zero(), F::zero(), F::zero())
    }
}

/// Die yield under the negative-binomial defect model:
/// `Y = (1 + area·D₀/α)^(−α)`.
///
/// Yield is 1 exactly when `area·D₀ = 0` and strictly decreasing in both
/// area and defect density otherwise. As α → ∞ the model approaches the
/// Poisson yield `e^(−area·D₀)`.
pub fn yield_rate<F: Scalar>(
    area_cm2: F,
    defect_density_per_cm2: F,
    clustering_alpha: F,
) -> Result<F> {
    ensure_nonneg("area_cm2", area_cm2)?;
    ensure_nonneg("defect_density_per_cm2", defect_density_per_cm2)?;
    ensure_finite("clustering_alpha", clustering_alpha)?;
    if !(clustering_alpha > F::zero()) {
        return Err(Error::domain(format!(
            "clustering_alpha must be > 0, got {clustering_alpha}"
        )));
    }
    let expected_defects = area_cm2 * defect_density_per_cm2;
    if expected_defects == F::zero() {
        return Ok(F::one());
    }
    Ok((F::one() + expected_defects / clustering_alpha).powf(-clustering_alpha))
}

/// Manufacturing carbon per cm² of good silicon:
/// `(fab_CI·EPA + GPA + materials) / yield`.
///
/// The whole numerator — including the materials term — is divided by
/// yield: scrapped dies waste their upstream materials too.
pub fn carbon_per_area<F: Scalar>(sample: &NodeSample<F>, yield_fraction: F) -> Result<F> {
    sample.validate()?;
    ensure_finite("yield", yield_fraction)?;
    if !(yield_fraction > F::zero() && yield_fraction <= F::one()) {
        return Err(Error::domain(format!(
            "yield must be in (0, 1], got {yield_fraction}"
        )));
    }
    let numerator = sample.fab_carbon_intensity_kg_per_kwh * sample.epa_kwh_per_cm2
        + sample.gpa_kg_per_cm2
        + sample.materials_kg_per_cm2;
    Ok(numerator / yield_fraction)
}

/// Manufacturing carbon of one die: its own yield (computed on its own
/// area — this is where splitting a design into chiplets pays off) times
/// carbon per area times area.
pub fn manufacturing_cfp<F: Scalar>(die: &DieSpec<F>, sample: &NodeSample<F>) -> Result<F> {
    die.validate()?;
    let area_cm2 = die.area_cm2();
    let y = yield_rate(
        area_cm2,
        sample.defect_density_per_cm2,
        sample.clustering_alpha,
    )?;
    let cfpa = carbon_per_area(sample, y)?;
    Ok(area_cm2 * cfpa)
}

/// Design-stage carbon amortized per shipped unit:
/// `total area · energy/mm² · design CI / volume`.
pub fn design_cfp<F: Scalar>(dies: &[DieSpec<F>], params: &DesignParams<F>) -> Result<F> {
    params.validate()?;
    let mut total_area_mm2 = F::zero();
    for die in dies {
        die.validate()?;
        total_area_mm2 = total_area_mm2 + die.area_mm2;
    }
    let volume = F::cast(params.amortization_volume_units as f64);
    Ok(total_area_mm2
        * params.design_energy_kwh_per_mm2
        * params.design_carbon_intensity_kg_per_kwh
        / volume)
}

/// Packaging carbon of the whole package:
/// `total die area · overhead factor · packaging carbon/cm² / packaging yield`.
pub fn packaging_cfp<F: Scalar>(pkg: &PackageSpec<F>) -> Result<F> {
    pkg.validate()?;
    Ok(
        pkg.total_area_cm2() * pkg.packaging_overhead_factor * pkg.packaging_carbon_kg_per_cm2
            / pkg.packaging_yield,
    )
}

/// Embodied carbon of a package: design + per-die manufacturing + packaging,
/// returned as a full breakdown with `operational_kg = 0`.
pub fn embodied_cfp<F: Scalar>(
    pkg: &PackageSpec<F>,
    sample: &NodeSample<F>,
    design: &DesignParams<F>,
) -> Result<CarbonBreakdown<F>> {
    pkg.validate()?;
    let design_kg = design_cfp(&pkg.dies, design)?;
    let mut manufacturing_kg = F::zero();
    for die in &pkg.dies {
        manufacturing_kg = manufacturing_kg + manufacturing_cfp(die, sample)?;
    }
    let packaging_kg = packaging_cfp(pkg)?;
    Ok(CarbonBreakdown::from_stages(
        design_kg,
        manufacturing_kg,
        packaging_kg,
        F::zero(),
    ))
}

/// Operational carbon over the deployment life:
/// `TDP · lifetime · 8760 h · (1 − idle) / 1000 · use-phase CI`.
///
/// Idle hours draw zero power; active hours draw full TDP.
pub fn operational_cfp<F: Scalar>(tdp_w: F, usage: &UsageProfile<F>) -> Result<F> {
    ensure_finite("tdp_w", tdp_w)?;
    if !(tdp_w > F::zero()) {
        return Err(Error::domain(format!("tdp_w must be > 0, got {tdp_w}")));
    }
    usage.validate()?;
    let active_hours =
        usage.lifetime_years * F::cast(HOURS_PER_YEAR) * (F::one() - usage.idle_fraction);
    Ok(tdp_w * active_hours / F::cast(W_PER_KW) * usage.use_carbon_intensity_kg_per_kwh)
}

/// Total lifecycle carbon: embodied plus operational, as one breakdown.
pub fn total_cfp<F: Scalar>(
    pkg: &PackageSpec<F>,
    sample: &NodeSample<F>,
    design: &DesignParams<F>,
    tdp_w: F,
    usage: &UsageProfile<F>,
) -> Result<CarbonBreakdown<F>> {
    let embodied = embodied_cfp(pkg, sample, design)?;
    let operational_kg = operational_cfp(tdp_w, usage)?;
    Ok(CarbonBreakdown::from_stages(
        embodied.design_kg,
        embodied.manufacturing_kg,
        embodied.packaging_kg,
        operational_kg,
    ))
}

fn ensure_finite<F: Scalar>(name: &str, value: F) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {value}")))
    }
}

fn ensure_nonneg<F: Scalar>(name: &str, value: F) -> Result<()> {
    ensure_finite(name, value)?;
    if value < F::zero() {
        return Err(Error::domain(format!(
            "{name} must be non-negative, got {value}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(d0: f64, epa: f64, gpa: f64, materials: f64, ci: f64, alpha: f64) -> NodeSample<f64> {
        NodeSample {
            defect_density_per_cm2: d0,
            epa_kwh_per_cm2: epa,
            gpa_kg_per_cm2: gpa,
            materials_kg_per_cm2: materials,
            fab_carbon_intensity_kg_per_kwh: ci,
            clustering_alpha: alpha,
        }
    }

    #[test]
    fn yield_is_one_when_defect_exposure_is_zero() {
        assert_eq!(yield_rate(0.0, 0.1, 2.0).unwrap(), 1.0);
        assert_eq!(yield_rate(1.0, 0.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    #[allow(clippy::excessive_precision)] // full oracle value documented
    fn yield_matches_high_precision_reference_point() {
        // (1 + 1.0·0.1/2)^(−2) evaluated at 60-digit precision.
        let expected = 0.90702947845804988662_f64;
        let got = yield_rate(1.0, 0.1, 2.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-15, "got {got}");
    }

    #[test]
    #[allow(clippy::excessive_precision)] // full oracle value documented
    fn yield_approaches_poisson_limit_for_large_alpha() {
        // e^(−0.1) at 60-digit precision.
        let poisson = 0.90483741803595957316_f64;
        let got = yield_rate(1.0, 0.1, 1e6).unwrap();
        assert!((got - poisson).abs() < 1e-4, "got {got}");
    }

    #[test]
    fn yield_is_strictly_decreasing_in_area_and_defect_density() {
        let base = yield_rate(1.0, 0.2, 2.0).unwrap();
        assert!(yield_rate(1.5, 0.2, 2.0).unwrap() < base);
        assert!(yield_rate(1.0, 0.3, 2.0).unwrap() < base);
        assert!(base > 0.0 && base < 1.0);
    }

    #[test]
    fn yield_rejects_bad_arguments() {
        assert!(yield_rate(-1.0, 0.1, 2.0).is_err());
        assert!(yield_rate(1.0, -0.1, 2.0).is_err());
        assert!(yield_rate(1.0, 0.1, 0.0).is_err());
        assert!(yield_rate(f64::NAN, 0.1, 2.0).is_err());
        assert!(yield_rate(1.0, 0.1, f64::INFINITY).is_err());
    }

    #[test]
    fn carbon_per_area_matches_hand_evaluation() {
        // (0.5·2.0 + 0.3 + 0.2) / 0.75 = 2.0
        let s = sample(0.0, 2.0, 0.3, 0.2, 0.5, 2.0);
        assert_relative_eq!(
            carbon_per_area(&s, 0.75).unwrap(),
            2.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn carbon_per_area_is_zero_for_zero_numerator() {
        let s = sample(0.0, 0.0, 0.0, 0.0, 0.5, 2.0);
        assert_eq!(carbon_per_area(&s, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn halving_yield_doubles_carbon_per_area() {
        let s = sample(0.0, 3.0, 0.7, 0.4, 0.6, 2.0);
        let full = carbon_per_area(&s, 1.0).unwrap();
        let half = carbon_per_area(&s, 0.5).unwrap();
        assert_relative_eq!(half, 2.0 * full, max_relative = 1e-15);
    }

    #[test]
    fn carbon_per_area_rejects_bad_yield() {
        let s = sample(0.0, 1.0, 0.0, 0.0, 1.0, 2.0);
        assert!(carbon_per_area(&s, 0.0).is_err());
        assert!(carbon_per_area(&s, 1.5).is_err());
        assert!(carbon_per_area(&s, -0.1).is_err());
    }

    #[test]
    fn manufacturing_cfp_composes_yield_and_carbon_per_area() {
        // Pick D₀ so Eq. 1 gives exactly 0.75 for a 1 cm² die at α = 2:
        // (1 + d/2)^(−2) = 0.75  ⇒  d = 2(1/√0.75 − 1).
        let d0 = 2.0 * (1.0 / 0.75f64.sqrt() - 1.0);
        let s = sample(d0, 2.0, 0.3, 0.2, 0.5, 2.0);
        let die = DieSpec::new(100.0, 7.0).unwrap();
        // 1 cm² × (0.5·2 + 0.3 + 0.2)/0.75 = 2.0 kg
        assert_relative_eq!(
            manufacturing_cfp(&die, &s).unwrap(),
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_area_die_manufactures_for_free() {
        let die = DieSpec {
            area_mm2: 0.0,
            node_nm: 7.0,
            transistor_count_millions: None,
        };
        let s = sample(0.1, 2.0, 0.3, 0.2, 0.5, 2.0);
        assert_eq!(manufacturing_cfp(&die, &s).unwrap(), 0.0);
    }

    #[test]
    fn doubling_area_more_than_doubles_manufacturing_when_defective() {
        let s = sample(0.2, 2.0, 0.3, 0.2, 0.5, 2.0);
        let small = manufacturing_cfp(&DieSpec::new(100.0, 7.0).unwrap(), &s).unwrap();
        let large = manufacturing_cfp(&DieSpec::new(200.0, 7.0).unwrap(), &s).unwrap();
        assert!(large > 2.0 * small);
    }

    #[test]
    fn design_cfp_matches_hand_arithmetic() {
        let dies = [DieSpec::new(100.0, 7.0).unwrap()];
        let params = DesignParams {
            design_energy_kwh_per_mm2: 0.1,
            design_carbon_intensity_kg_per_kwh: 0.5,
            amortization_volume_units: 1000,
        };
        assert_relative_eq!(
            design_cfp(&dies, &params).unwrap(),
            0.005,
            max_relative = 1e-15
        );

        let zero_energy = DesignParams {
            design_energy_kwh_per_mm2: 0.0,
            ..params
        };
        assert_eq!(design_cfp(&dies, &zero_energy).unwrap(), 0.0);
    }

    #[test]
    fn design_cfp_scales_inversely_with_volume() {
        let dies = [DieSpec::new(250.0, 7.0).unwrap()];
        let at = |volume| {
            design_cfp(
                &dies,
                &DesignParams {
                    design_energy_kwh_per_mm2: 0.3,
                    design_carbon_intensity_kg_per_kwh: 0.5,
                    amortization_volume_units: volume,
                },
            )
            .unwrap()
        };
        assert_relative_eq!(at(1), 10.0 * at(10), max_relative = 1e-15);
    }

    #[test]
    fn packaging_cfp_matches_hand_arithmetic() {
        let pkg = PackageSpec {
            dies: vec![DieSpec::new(100.0, 7.0).unwrap()],
            packaging_overhead_factor: 1.1,
            packaging_carbon_kg_per_cm2: 0.05,
            packaging_yield: 1.0,
        };
        assert_relative_eq!(packaging_cfp(&pkg).unwrap(), 0.055, max_relative = 1e-15);

        let free = PackageSpec {
            packaging_carbon_kg_per_cm2: 0.0,
            ..pkg
        };
        assert_eq!(packaging_cfp(&free).unwrap(), 0.0);
    }

    #[test]
    fn splitting_dies_with_higher_overhead_costs_more_packaging() {
        let mono = PackageSpec {
            dies: vec![DieSpec::new(400.0, 7.0).unwrap()],
            packaging_overhead_factor: 1.0,
            packaging_carbon_kg_per_cm2: 0.05,
            packaging_yield: 0.98,
        };
        let split = PackageSpec {
            dies: vec![DieSpec::new(200.0, 7.0).unwrap(); 2],
            packaging_overhead_factor: 1.8,
            ..mono.clone()
        };
        assert!(packaging_cfp(&split).unwrap() > packaging_cfp(&mono).unwrap());
    }

    #[test]
    fn embodied_breakdown_adds_up_exactly() {
        let pkg = PackageSpec {
            dies: vec![
                DieSpec::new(300.0, 7.0).unwrap(),
                DieSpec::new(150.0, 7.0).unwrap(),
            ],
            packaging_overhead_factor: 1.9,
            packaging_carbon_kg_per_cm2: 0.7,
            packaging_yield: 0.98,
        };
        let s = sample(0.09, 1.7, 0.4, 0.3, 0.48, 2.0);
        let design = DesignParams {
            design_energy_kwh_per_mm2: 0.2,
            design_carbon_intensity_kg_per_kwh: 0.5,
            amortization_volume_units: 500_000,
        };
        let b = embodied_cfp(&pkg, &s, &design).unwrap();
        assert_eq!(
            b.embodied_kg,
            b.design_kg + b.manufacturing_kg + b.packaging_kg
        );
        assert_eq!(b.operational_kg, 0.0);
        assert_eq!(b.total_kg, b.embodied_kg);
        assert!(b.manufacturing_kg > 0.0 && b.packaging_kg > 0.0 && b.design_kg > 0.0);
    }

    #[test]
    fn chiplets_beat_monolithic_when_packaging_is_free() {
        // Yield convexity: two half-size dies waste less silicon than one
        // big die, so with zero packaging carbon the split is strictly
        // cheaper.
        let s = sample(0.2, 1.7, 0.4, 0.3, 0.48, 2.0);
        let design = DesignParams {
            design_energy_kwh_per_mm2: 0.0,
            design_carbon_intensity_kg_per_kwh: 0.0,
            amortization_volume_units: 1,
        };
        let mono = PackageSpec {
            dies: vec![DieSpec::new(600.0, 7.0).unwrap()],
            packaging_overhead_factor: 1.0,
            packaging_carbon_kg_per_cm2: 0.0,
            packaging_yield: 1.0,
        };
        let split = PackageSpec {
            dies: vec![DieSpec::new(300.0, 7.0).unwrap(); 2],
            ..mono.clone()
        };
        let mono_kg = embodied_cfp(&mono, &s, &design).unwrap().embodied_kg;
        let split_kg = embodied_cfp(&split, &s, &design).unwrap().embodied_kg;
        assert!(split_kg < mono_kg);
    }

    #[test]
    fn all_zero_coefficients_give_all_zero_breakdown() {
        let pkg = PackageSpec {
            dies: vec![DieSpec::new(100.0, 7.0).unwrap()],
            packaging_overhead_factor: 0.0,
            packaging_carbon_kg_per_cm2: 0.0,
            packaging_yield: 1.0,
        };
        let s = sample(0.0, 0.0, 0.0, 0.0, 0.0, 2.0);
        let design = DesignParams {
            design_energy_kwh_per_mm2: 0.0,
            design_carbon_intensity_kg_per_kwh: 0.0,
            amortization_volume_units: 1,
        };
        let b = embodied_cfp(&pkg, &s, &design).unwrap();
        assert_eq!(b, CarbonBreakdown::zero());
    }

    #[test]
    fn operational_cfp_matches_hand_arithmetic() {
        // 400 W × 3 y × 8760 h × (1 − 0.6) / 1000 × 0.5 kg/kWh = 2102.4 kg
        let usage = UsageProfile::new(3.0, 0.6, 0.5).unwrap();
        assert_relative_eq!(
            operational_cfp(400.0, &usage).unwrap(),
            2102.4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn operational_cfp_is_zero_for_zero_lifetime_or_full_idle() {
        let zero_life = UsageProfile::new(0.0, 0.3, 0.5).unwrap();
        assert_eq!(operational_cfp(400.0, &zero_life).unwrap(), 0.0);
        let all_idle = UsageProfile::new(3.0, 1.0, 0.5).unwrap();
        assert_eq!(operational_cfp(400.0, &all_idle).unwrap(), 0.0);
    }

    #[test]
    fn operational_cfp_is_bilinear_in_lifetime_and_active_fraction() {
        let base = operational_cfp(300.0, &UsageProfile::new(2.0, 0.5, 0.4).unwrap()).unwrap();
        let double_life =
            operational_cfp(300.0, &UsageProfile::new(4.0, 0.5, 0.4).unwrap()).unwrap();
        let double_active =
            operational_cfp(300.0, &UsageProfile::new(2.0, 0.0, 0.4).unwrap()).unwrap();
        assert_relative_eq!(double_life, 2.0 * base, max_relative = 1e-15);
        assert_relative_eq!(double_active, 2.0 * base, max_relative = 1e-15);
    }

    #[test]
    fn usage_profile_rejects_out_of_range_idle() {
        assert!(UsageProfile::new(3.0, -0.1, 0.5).is_err());
        assert!(UsageProfile::new(3.0, 1.1, 0.5).is_err());
        assert!(UsageProfile::new(-1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn total_cfp_adds_operational_on_top_of_embodied_bit_exactly() {
        let pkg = PackageSpec {
            dies: vec![DieSpec::new(826.0, 7.0).unwrap()],
            packaging_overhead_factor: 1.0,
            packaging_carbon_kg_per_cm2: 5.0,
            packaging_yield: 0.98,
        };
        let s = sample(0.09, 120.0, 2.0, 2.0, 0.475, 2.0);
        let design = DesignParams {
            design_energy_kwh_per_mm2: 300.0,
            design_carbon_intensity_kg_per_kwh: 0.475,
            amortization_volume_units: 1_000_000,
        };
        let usage = UsageProfile::new(3.0, 0.6, 0.475).unwrap();
        let b = total_cfp(&pkg, &s, &design, 400.0, &usage).unwrap();
        let e = embodied_cfp(&pkg, &s, &design).unwrap();
        let o = operational_cfp(400.0, &usage).unwrap();
        assert_eq!(b.embodied_kg, e.embodied_kg);
        assert_eq!(b.operational_kg, o);
        assert_eq!(b.total_kg, b.embodied_kg + b.operational_kg);
    }

    #[test]
    fn total_cfp_increases_with_tdp_when_active() {
        let pkg = PackageSpec {
            dies: vec![DieSpec::new(100.0, 7.0).unwrap()],
            packaging_overhead_factor: 1.0,
            packaging_carbon_kg_per_cm2: 1.0,
            packaging_yield: 1.0,
        };
        let s = sample(0.05, 10.0, 1.0, 1.0, 0.5, 2.0);
        let design = DesignParams {
            design_energy_kwh_per_mm2: 0.0,
            design_carbon_intensity_kg_per_kwh: 0.0,
            amortization_volume_units: 1,
        };
        let usage = UsageProfile::new(3.0, 0.6, 0.5).unwrap();
        let low = total_cfp(&pkg, &s, &design, 100.0, &usage).unwrap();
        let high = total_cfp(&pkg, &s, &design, 200.0, &usage).unwrap();
        assert!(high.total_kg > low.total_kg);
    }

    #[test]
    fn kernels_also_run_in_single_precision() {
        let y: f32 = yield_rate(1.0f32, 0.1, 2.0).unwrap();
        assert!((y - 0.907_029_5).abs() < 1e-6);
        let usage = UsageProfile::<f32>::new(3.0, 0.6, 0.5).unwrap();
        let o = operational_cfp(400.0f32, &usage).unwrap();
        assert!((o - 2102.4).abs() < 0.01);
    }
}
