//! Composite sustainability metrics: performance per unit of carbon,
//! carbon density per die area, and series normalization.
//!
//! The ratio kernels are generic over the scalar type like the carbon
//! arithmetic; [`MetricRow`] is the concrete bundle the trend analysis
//! serializes.

use serde::{Deserialize, Serialize};

use crate::carbon::CarbonBreakdown;
use crate::dataset::{PerfSource, ProcessorRecord};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Performance per kg CO₂eq of total lifecycle footprint.
pub fn perf_per_cfp<F: Scalar>(performance: F, total_cfp_kg: F) -> Result<F> {
    check_nonneg("performance", performance)?;
    check_positive("total_cfp_kg", total_cfp_kg)?;
    Ok(performance / total_cfp_kg)
}

/// Embodied carbon density in kg CO₂eq per cm² of silicon. `area_mm2` is
/// the total die area of the package (sum over dies for chiplet designs).
pub fn ecfpa<F: Scalar>(embodied_kg: F, area_mm2: F) -> Result<F> {
    check_nonneg("embodied_kg", embodied_kg)?;
    check_positive("area_mm2", area_mm2)?;
    Ok(embodied_kg / (area_mm2 / F::cast(100.0)))
}

/// Performance per unit of embodied carbon density.
pub fn perf_per_ecfpa<F: Scalar>(performance: F, ecfpa_value: F) -> Result<F> {
    check_nonneg("performance", performance)?;
    check_positive("ecfpa_value", ecfpa_value)?;
    Ok(performance / ecfpa_value)
}

/// Divides every value by the value at `baseline_index`, mapping the
/// baseline to exactly 1.0 (the "NX of the baseline year" convention).
pub fn normalize_series<F: Scalar>(values: &[F], baseline_index: usize) -> Result<Vec<F>> {
    let baseline = *values.get(baseline_index).ok_or_else(|| {
        Error::domain(format!(
            "baseline index {baseline_index} out of bounds for {} values",
            values.len()
        ))
    })?;
    if baseline == F::zero() {
        return Err(Error::domain(
            "cannot normalize against a zero baseline".to_string(),
        ));
    }
    if !baseline.is_finite() {
        return Err(Error::domain(
            "cannot normalize against a non-finite baseline".to_string(),
        ));
    }
    Ok(values.iter().map(|&v| v / baseline).collect())
}

/// One record's metrics, computed from its record and footprint breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub name: String,
    pub performance_score: f64,
    /// Which benchmark column the score came from.
    pub performance_source: PerfSource,
    pub total_cfp_kg: f64,
    pub embodied_cfp_kg: f64,
    pub operational_cfp_kg: f64,
    pub perf_per_cfp: f64,
    pub ecfpa_kg_per_cm2: f64,
    pub perf_per_ecfpa: f64,
}

/// Assembles a [`MetricRow`] from a catalog record and the (typically Monte
/// Carlo mean) footprint breakdown of its scenario.
///
/// Fails with [`Error::MissingPerformance`] when the record lacks its
/// designated benchmark score — callers skip such records with a diagnostic.
pub fn metric_row(record: &ProcessorRecord, breakdown: &CarbonBreakdown<f64>) -> Result<MetricRow> {
    let (performance_score, performance_source) =
        record
            .designated_performance()
            .ok_or_else(|| Error::MissingPerformance {
                name: record.name.clone(),
                column: record.designated_perf_source().to_string(),
            })?;
    let ecfpa_kg_per_cm2 = ecfpa(breakdown.embodied_kg, record.die_area_mm2)?;
    Ok(MetricRow {
        name: record.name.clone(),
        performance_score,
        performance_source,
        total_cfp_kg: breakdown.total_kg,
        embodied_cfp_kg: breakdown.embodied_kg,
        operational_cfp_kg: breakdown.operational_kg,
        perf_per_cfp: perf_per_cfp(performance_score, breakdown.total_kg)?,
        ecfpa_kg_per_cm2,
        perf_per_ecfpa: perf_per_ecfpa(performance_score, ecfpa_kg_per_cm2)?,
    })
}

fn check_nonneg<F: Scalar>(name: &str, value: F) -> Result<()> {
    if !value.is_finite() || value < F::zero() {
        return Err(Error::domain(format!(
            "{name} must be non-negative and finite, got {value}"
        )));
    }
    Ok(())
}

fn check_positive<F: Scalar>(name: &str, value: F) -> Result<()> {
    if !value.is_finite() || !(value > F::zero()) {
        return Err(Error::domain(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{MarketSegment, ProcessorKind};
    use approx::assert_relative_eq;

    #[test]
    fn ratio_metrics_compute_the_obvious_arithmetic() {
        assert_eq!(perf_per_cfp(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(perf_per_cfp(1000.0, 500.0).unwrap(), 2.0);
        assert_eq!(ecfpa(0.0, 100.0).unwrap(), 0.0);
        assert_eq!(ecfpa(2.0, 100.0).unwrap(), 2.0);
        assert_eq!(perf_per_ecfpa(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(perf_per_ecfpa(1200.0, 3.0).unwrap(), 400.0);
    }

    #[test]
    fn ratio_metrics_reject_degenerate_denominators() {
        assert!(perf_per_cfp(1.0, 0.0).is_err());
        assert!(ecfpa(1.0, 0.0).is_err());
        assert!(perf_per_ecfpa(1.0, 0.0).is_err());
        assert!(perf_per_cfp(-1.0, 1.0).is_err());
    }

    #[test]
    fn scaling_the_denominator_scales_the_metric_inversely() {
        let base = perf_per_cfp(1200.0, 30.0).unwrap();
        let scaled = perf_per_cfp(1200.0, 90.0).unwrap();
        assert_relative_eq!(scaled, base / 3.0, max_relative = 1e-15);
        // ecfpa is invariant under splitting the same total area.
        assert_eq!(ecfpa(5.0, 600.0).unwrap(), ecfpa(5.0, 2.0 * 300.0).unwrap());
    }

    #[test]
    fn normalize_series_maps_baseline_to_one() {
        let normalized = normalize_series(&[2.0, 4.0, 10.0], 0).unwrap();
        assert_eq!(normalized, vec![1.0, 2.0, 5.0]);
        // Identity series.
        assert_eq!(normalize_series(&[7.0, 7.0], 0).unwrap(), vec![1.0, 1.0]);
        // Idempotent: re-normalizing a normalized series changes nothing.
        assert_eq!(normalize_series(&normalized, 0).unwrap(), normalized);
        assert!(normalize_series(&[0.0, 1.0], 0).is_err());
        assert!(normalize_series::<f64>(&[], 0).is_err());
    }

    fn record(kind: ProcessorKind, segment: MarketSegment) -> ProcessorRecord {
        ProcessorRecord {
            name: "X".to_string(),
            vendor: "ACME".to_string(),
            kind,
            segment,
            release_year: 2020,
            node_nm: 7.0,
            die_area_mm2: 500.0,
            transistor_millions: None,
            tdp_w: 300.0,
            chiplet_count: 1,
            price_usd: None,
            perf_opencl: Some(1000.0),
            perf_passmark: Some(2000.0),
            perf_peak_tflops: Some(30.0),
        }
    }

    #[test]
    fn performance_source_follows_kind_and_segment() {
        use MarketSegment::*;
        use ProcessorKind::*;
        assert_eq!(
            record(Cpu, Desktop).designated_performance(),
            Some((1000.0, PerfSource::Opencl))
        );
        assert_eq!(
            record(Cpu, Datacenter).designated_performance(),
            Some((2000.0, PerfSource::Passmark))
        );
        assert_eq!(
            record(Gpu, Datacenter).designated_performance(),
            Some((1000.0, PerfSource::Opencl))
        );
    }

    #[test]
    fn metric_row_is_recomputable_from_its_inputs() {
        let record = record(ProcessorKind::Gpu, MarketSegment::Datacenter);
        let breakdown = CarbonBreakdown::from_stages(1.0, 120.0, 4.0, 875.0);
        let row = metric_row(&record, &breakdown).unwrap();
        assert_eq!(row.total_cfp_kg, breakdown.total_kg);
        assert_eq!(row.perf_per_cfp, 1000.0 / breakdown.total_kg);
        assert_eq!(row.ecfpa_kg_per_cm2, 125.0 / 5.0);
        assert_eq!(row.perf_per_ecfpa, 1000.0 / 25.0);
    }

    #[test]
    fn metric_row_reports_the_missing_score_by_name() {
        let mut record = record(ProcessorKind::Cpu, MarketSegment::Datacenter);
        record.perf_passmark = None;
        let breakdown = CarbonBreakdown::from_stages(1.0, 120.0, 4.0, 875.0);
        let err = metric_row(&record, &breakdown).unwrap_err();
        assert!(matches!(err, Error::MissingPerformance { .. }));
        assert!(err.to_string().contains("perf_passmark"), "{err}");
    }

    #[test]
    fn metrics_also_run_in_single_precision() {
        assert_eq!(perf_per_cfp(1000.0f32, 500.0).unwrap(), 2.0f32);
        assert_eq!(ecfpa(2.0f32, 100.0).unwrap(), 2.0f32);
        assert_eq!(
            normalize_series(&[2.0f32, 4.0], 0).unwrap(),
            vec![1.0f32, 2.0]
        );
    }
}
