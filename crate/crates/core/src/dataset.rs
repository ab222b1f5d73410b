//! Dataset ingestion: the processor catalog (CSV), node parameter packs
//! (JSON), revenue tables (CSV), and extrapolation to unlisted nodes.
//!
//! Parsing never coerces silently. Catalog rows that violate an invariant
//! are rejected with a row-numbered diagnostic; packs are schema-checked in
//! strict mode (unknown keys are errors, so typos surface immediately) and
//! every error names the offending node and field.
//!
//! # File formats
//!
//! `processors.csv` columns (frozen by golden tests):
//!
//! ```text
//! name,vendor,kind,segment,release_year,node_nm,die_area_mm2,transistor_millions,
//! tdp_w,chiplet_count,price_usd,perf_opencl,perf_passmark,perf_peak_tflops
//! ```
//!
//! `pack.json` top-level keys: `nodes` (object keyed by the node string,
//! e.g. `"7"`), `global`, and an optional `description`. Distribution specs
//! are objects like `{"type": "gaussian", "mean": 2.0, "stddev": 0.2}` with
//! `type` one of `point|uniform|gaussian|kde`; the optional
//! `truncate_at_zero` flag defaults to `true` because pack parameters are
//! physical quantities.
//!
//! `revenue.csv` columns: `year,revenue_usd,flagship_name,unit_price_usd`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::stochastic::{fit_kde, Distribution, DistributionKind};

/// The frozen column order of `processors.csv`.
pub const PROCESSOR_COLUMNS: [&str; 14] = [
    "name",
    "vendor",
    "kind",
    "segment",
    "release_year",
    "node_nm",
    "die_area_mm2",
    "transistor_millions",
    "tdp_w",
    "chiplet_count",
    "price_usd",
    "perf_opencl",
    "perf_passmark",
    "perf_peak_tflops",
];

/// The frozen column order of `revenue.csv`.
pub const REVENUE_COLUMNS: [&str; 4] = ["year", "revenue_usd", "flagship_name", "unit_price_usd"];

/// Processor family: CPU or GPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessorKind {
    Cpu,
    Gpu,
}

impl fmt::Display for ProcessorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcessorKind::Cpu => "cpu",
            ProcessorKind::Gpu => "gpu",
        })
    }
}

/// Market segment a processor was sold into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarketSegment {
    Desktop,
    Datacenter,
}

impl fmt::Display for MarketSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarketSegment::Desktop => "desktop",
            MarketSegment::Datacenter => "datacenter",
        })
    }
}

/// Which benchmark column a record's performance score comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerfSource {
    Opencl,
    Passmark,
    PeakTflops,
}

impl PerfSource {
    /// Short identifier used in serialized reports (matches the JSON form).
    pub fn as_str(&self) -> &'static str {
        match self {
            PerfSource::Opencl => "opencl",
            PerfSource::Passmark => "passmark",
            PerfSource::PeakTflops => "peak_tflops",
        }
    }
}

impl fmt::Display for PerfSource {
    /// Displays as the catalog column name — used in diagnostics that point
    /// the user at the column to fill in.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerfSource::Opencl => "perf_opencl",
            PerfSource::Passmark => "perf_passmark",
            PerfSource::PeakTflops => "perf_peak_tflops",
        })
    }
}

/// One catalog row: a shipping processor and the observable facts about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessorRecord {
    pub name: String,
    pub vendor: String,
    pub kind: ProcessorKind,
    pub segment: MarketSegment,
    pub release_year: i32,
    pub node_nm: f64,
    pub die_area_mm2: f64,
    pub transistor_millions: Option<f64>,
    pub tdp_w: f64,
    /// Number of equal-area dies sharing the package (1 = monolithic).
    pub chiplet_count: u32,
    pub price_usd: Option<f64>,
    pub perf_opencl: Option<f64>,
    pub perf_passmark: Option<f64>,
    pub perf_peak_tflops: Option<f64>,
}

impl ProcessorRecord {
    /// The benchmark column this record's headline score must come from:
    /// desktop CPUs use OpenCL (Geekbench), datacenter CPUs use PassMark,
    /// and GPUs use OpenCL.
    pub fn designated_perf_source(&self) -> PerfSource {
        match (self.kind, self.segment) {
            (ProcessorKind::Cpu, MarketSegment::Desktop) => PerfSource::Opencl,
            (ProcessorKind::Cpu, MarketSegment::Datacenter) => PerfSource::Passmark,
            (ProcessorKind::Gpu, _) => PerfSource::Opencl,
        }
    }

    /// The designated performance score, if present.
    pub fn designated_performance(&self) -> Option<(f64, PerfSource)> {
        let source = self.designated_perf_source();
        let value = match source {
            PerfSource::Opencl => self.perf_opencl,
            PerfSource::Passmark => self.perf_passmark,
            PerfSource::PeakTflops => self.perf_peak_tflops,
        };
        value.map(|v| (v, source))
    }
}

/// How severe a per-row parsing diagnostic is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSeverity {
    /// The row was kept; something is worth knowing about it.
    Warning,
    /// The row was rejected.
    Error,
}

/// A per-row parsing diagnostic, naming the row (1-based, excluding the
/// header) and field it concerns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub row: usize,
    pub field: String,
    pub severity: DiagnosticSeverity,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            DiagnosticSeverity::Warning => "warning",
            DiagnosticSeverity::Error => "error",
        };
        write!(
            f,
            "{severity}: row {}, field {}: {}",
            self.row, self.field, self.message
        )
    }
}

/// Parses `processors.csv` content.
///
/// Rows violating an invariant are rejected with [`DiagnosticSeverity::Error`]
/// diagnostics (one per bad field); rows missing their designated
/// performance score are kept with a warning. Columns must match
/// [`PROCESSOR_COLUMNS`] exactly — missing or unknown columns are hard
/// errors, since ignoring unknown columns would make serialization lossy.
pub fn parse_processors(text: &str) -> Result<(Vec<ProcessorRecord>, Vec<RowDiagnostic>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    check_columns(&headers, &PROCESSOR_COLUMNS)?;
    let column = |name: &str| headers.iter().position(|h| h == name).unwrap();

    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_number = i + 1;
        let mut errors: Vec<RowDiagnostic> = Vec::new();
        let field = |name: &str| row.get(column(name)).unwrap_or("").trim().to_string();
        let fail = |errors: &mut Vec<RowDiagnostic>, name: &str, message: String| {
            errors.push(RowDiagnostic {
                row: row_number,
                field: name.to_string(),
                severity: DiagnosticSeverity::Error,
                message,
            });
        };

        let name = field("name");
        if name.is_empty() {
            fail(&mut errors, "name", "must not be empty".to_string());
        }
        let vendor = field("vendor");
        if vendor.is_empty() {
            fail(&mut errors, "vendor", "must not be empty".to_string());
        }
        let kind = match field("kind").as_str() {
            "cpu" => Some(ProcessorKind::Cpu),
            "gpu" => Some(ProcessorKind::Gpu),
            other => {
                fail(
                    &mut errors,
                    "kind",
                    format!("must be cpu or gpu, got '{other}'"),
                );
                None
            }
        };
        let segment = match field("segment").as_str() {
            "desktop" => Some(MarketSegment::Desktop),
            "datacenter" => Some(MarketSegment::Datacenter),
            other => {
                fail(
                    &mut errors,
                    "segment",
                    format!("must be desktop or datacenter, got '{other}'"),
                );
                None
            }
        };
        let release_year = parse_int(&field("release_year")).filter(|y| (1990..=2100).contains(y));
        if release_year.is_none() {
            fail(
                &mut errors,
                "release_year",
                format!(
                    "must be an integer in [1990, 2100], got '{}'",
                    field("release_year")
                ),
            );
        }
        let node_nm = parse_positive(&field("node_nm"));
        if node_nm.is_none() {
            fail(
                &mut errors,
                "node_nm",
                format!("must be a positive number, got '{}'", field("node_nm")),
            );
        }
        let die_area_mm2 = parse_positive(&field("die_area_mm2"));
        if die_area_mm2.is_none() {
            fail(
                &mut errors,
                "die_area_mm2",
                format!("must be a positive number, got '{}'", field("die_area_mm2")),
            );
        }
        let tdp_w = parse_positive(&field("tdp_w"));
        if tdp_w.is_none() {
            fail(
                &mut errors,
                "tdp_w",
                format!("must be a positive number, got '{}'", field("tdp_w")),
            );
        }
        let chiplet_count = parse_int(&field("chiplet_count")).and_then(|c| {
            if (1..=u32::MAX as i64).contains(&(c as i64)) {
                Some(c as u32)
            } else {
                None
            }
        });
        if chiplet_count.is_none() {
            fail(
                &mut errors,
                "chiplet_count",
                format!("must be an integer ≥ 1, got '{}'", field("chiplet_count")),
            );
        }
        let optional = |name: &str, errors: &mut Vec<RowDiagnostic>| -> Option<f64> {
            let raw = field(name);
            if raw.is_empty() {
                return None;
            }
            match parse_nonneg(&raw) {
                Some(v) => Some(v),
                None => {
                    errors.push(RowDiagnostic {
                        row: row_number,
                        field: name.to_string(),
                        severity: DiagnosticSeverity::Error,
                        message: format!("must be a non-negative number, got '{raw}'"),
                    });
                    None
                }
            }
        };
        let transistor_millions = optional("transistor_millions", &mut errors);
        let price_usd = optional("price_usd", &mut errors);
        let perf_opencl = optional("perf_opencl", &mut errors);
        let perf_passmark = optional("perf_passmark", &mut errors);
        let perf_peak_tflops = optional("perf_peak_tflops", &mut errors);

        if !errors.is_empty() {
            diagnostics.extend(errors);
            continue;
        }
        let record = ProcessorRecord {
            name,
            vendor,
            kind: kind.unwrap(),
            segment: segment.unwrap(),
            release_year: release_year.unwrap(),
            node_nm: node_nm.unwrap(),
            die_area_mm2: die_area_mm2.unwrap(),
            transistor_millions,
            tdp_w: tdp_w.unwrap(),
            chiplet_count: chiplet_count.unwrap(),
            price_usd,
            perf_opencl,
            perf_passmark,
            perf_peak_tflops,
        };
        if record.designated_performance().is_none() {
            diagnostics.push(RowDiagnostic {
                row: row_number,
                field: record.designated_perf_source().to_string(),
                severity: DiagnosticSeverity::Warning,
                message: format!(
                    "'{}' lacks its designated performance score; performance analyses will skip it",
                    record.name
                ),
            });
        }
        records.push(record);
    }
    Ok((records, diagnostics))
}

/// Serializes records back to `processors.csv` form. Floats are written in
/// shortest round-trip form, so `parse_processors ∘ serialize_processors`
/// is the identity on valid records.
pub fn serialize_processors(records: &[ProcessorRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(PROCESSOR_COLUMNS)?;
    for r in records {
        writer.write_record([
            r.name.as_str(),
            r.vendor.as_str(),
            &r.kind.to_string(),
            &r.segment.to_string(),
            &r.release_year.to_string(),
            &r.node_nm.to_string(),
            &r.die_area_mm2.to_string(),
            &opt_to_string(r.transistor_millions),
            &r.tdp_w.to_string(),
            &r.chiplet_count.to_string(),
            &opt_to_string(r.price_usd),
            &opt_to_string(r.perf_opencl),
            &opt_to_string(r.perf_passmark),
            &opt_to_string(r.perf_peak_tflops),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv writer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(format!("csv utf-8: {e}")))
}

fn opt_to_string(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_int(raw: &str) -> Option<i32> {
    raw.parse::<i32>().ok()
}

fn parse_f64(raw: &str) -> Option<f64> {
    // `f64::from_str` only accepts the dot decimal separator, which is
    // exactly the locale-independence we need; reject non-finite spellings.
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_positive(raw: &str) -> Option<f64> {
    parse_f64(raw).filter(|v| *v > 0.0)
}

fn parse_nonneg(raw: &str) -> Option<f64> {
    parse_f64(raw).filter(|v| *v >= 0.0)
}

fn check_columns(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let present: Vec<&str> = headers.iter().collect();
    let missing: Vec<String> = expected
        .iter()
        .filter(|c| !present.contains(c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let unknown: Vec<String> = present
        .iter()
        .filter(|c| !expected.contains(c))
        .map(|c| c.to_string())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownColumns(unknown));
    }
    Ok(())
}

/// One fiscal-year row of the shipment model: segment revenue plus the
/// flagship that represents the year's shipments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueRecord {
    pub year: i32,
    pub revenue_usd: f64,
    pub flagship_name: String,
    pub unit_price_usd: f64,
}

/// Parses `revenue.csv` content. Revenue tables are small and
/// hand-maintained, so any invalid row is a hard error naming row and field.
pub fn parse_revenue(text: &str) -> Result<Vec<RevenueRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    check_columns(&headers, &REVENUE_COLUMNS)?;
    let column = |name: &str| headers.iter().position(|h| h == name).unwrap();

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_number = i + 1;
        let field = |name: &str| row.get(column(name)).unwrap_or("").trim().to_string();
        let bad = |name: &str, what: &str| {
            Error::domain(format!(
                "revenue row {row_number}, field {name}: {what}, got '{}'",
                field(name)
            ))
        };
        let year = parse_int(&field("year"))
            .filter(|y| (1990..=2100).contains(y))
            .ok_or_else(|| bad("year", "must be an integer in [1990, 2100]"))?;
        let revenue_usd = parse_nonneg(&field("revenue_usd"))
            .ok_or_else(|| bad("revenue_usd", "must be a non-negative number"))?;
        let flagship_name = field("flagship_name");
        if flagship_name.is_empty() {
            return Err(bad("flagship_name", "must not be empty"));
        }
        let unit_price_usd = parse_positive(&field("unit_price_usd"))
            .ok_or_else(|| bad("unit_price_usd", "must be a positive number"))?;
        records.push(RevenueRecord {
            year,
            revenue_usd,
            flagship_name,
            unit_price_usd,
        });
    }
    Ok(records)
}

/// Packaging overhead factors keyed by die count, with linear interpolation
/// between listed counts and clamping outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadTable {
    /// Strictly increasing die counts with their overhead factors.
    entries: Vec<(u32, f64)>,
}

impl OverheadTable {
    /// Builds a table; counts must be ≥ 1 and unique, factors non-negative
    /// and finite. Entries are sorted by count.
    pub fn new(mut entries: Vec<(u32, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput("overhead table"));
        }
        entries.sort_by_key(|(count, _)| *count);
        for window in entries.windows(2) {
            if window[0].0 == window[1].0 {
                return Err(Error::domain(format!(
                    "overhead table lists die count {} twice",
                    window[0].0
                )));
            }
        }
        for &(count, factor) in &entries {
            if count < 1 {
                return Err(Error::domain(
                    "overhead table counts must be ≥ 1".to_string(),
                ));
            }
            if !factor.is_finite() || factor < 0.0 {
                return Err(Error::domain(format!(
                    "overhead factor for {count} dies must be non-negative, got {factor}"
                )));
            }
        }
        Ok(OverheadTable { entries })
    }

    /// The listed (count, factor) pairs in ascending count order.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    /// Overhead factor for a die count: exact when listed, linearly
    /// interpolated between neighbors, clamped beyond the listed range.
    pub fn factor(&self, die_count: u32) -> f64 {
        let first = self.entries[0];
        let last = self.entries[self.entries.len() - 1];
        if die_count <= first.0 {
            return first.1;
        }
        if die_count >= last.0 {
            return last.1;
        }
        for window in self.entries.windows(2) {
            let (c0, f0) = window[0];
            let (c1, f1) = window[1];
            if die_count == c0 {
                return f0;
            }
            if die_count < c1 {
                let t = (die_count - c0) as f64 / (c1 - c0) as f64;
                return f0 + t * (f1 - f0);
            }
        }
        unreachable!("bracketing pair exists for interior die counts")
    }
}

/// Everything the pack knows about one process node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEntry {
    /// The node key as written in the pack (e.g. `"7"`).
    pub node_label: String,
    /// The node in nm, parsed from the key.
    pub node_nm: f64,
    pub defect_density_per_cm2: Distribution,
    pub epa_kwh_per_cm2: Distribution,
    pub gpa_kg_per_cm2: Distribution,
    pub materials_kg_per_cm2: f64,
    /// Wafer manufacturing cost in $/cm²; optional because it only feeds
    /// the cost-vs-carbon analysis.
    pub wafer_cost_usd_per_cm2: Option<f64>,
    pub packaging_carbon_kg_per_cm2: f64,
    pub packaging_yield: f64,
    pub packaging_overhead_by_die_count: OverheadTable,
    pub clustering_alpha: f64,
}

/// Parameters that do not vary by node.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalParams {
    pub fab_carbon_intensity_kg_per_kwh: Distribution,
    pub design_energy_kwh_per_mm2: f64,
    pub design_carbon_intensity_kg_per_kwh: f64,
    pub design_amortization_volume_units: u64,
    pub use_carbon_intensity_kg_per_kwh: f64,
}

/// A loaded parameter pack: per-node entries (sorted by node, coarse to
/// fine) plus global parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParameterPack {
    pub description: Option<String>,
    pub nodes: Vec<NodeEntry>,
    pub global: GlobalParams,
}

/// A node entry resolved for a concrete target: either a listed entry or an
/// extrapolated one. The flag must reach every downstream report row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedNode {
    pub entry: NodeEntry,
    pub extrapolated: bool,
}

impl NodeParameterPack {
    /// The listed entry for a node, if present (exact match in nm).
    pub fn find_node(&self, node_nm: f64) -> Option<&NodeEntry> {
        self.nodes.iter().find(|n| n.node_nm == node_nm)
    }

    /// Resolves a node: the listed entry when present, otherwise an
    /// extrapolated entry flagged as such.
    pub fn resolve_node(&self, node_nm: f64) -> Result<ResolvedNode> {
        if let Some(entry) = self.find_node(node_nm) {
            return Ok(ResolvedNode {
                entry: entry.clone(),
                extrapolated: false,
            });
        }
        Ok(ResolvedNode {
            entry: extrapolate_node(self, node_nm)?,
            extrapolated: true,
        })
    }
}

/// Extrapolates a node entry for `target_nm` from the two listed nodes
/// nearest in log-space.
///
/// Every scalar parameter follows a power law fitted through the two
/// neighbors (straight line in log(node)–log(parameter) space, clamped
/// where physics demands: packaging yield never exceeds 1). Distributions
/// keep the nearest node's shape, rescaled multiplicatively so their mean
/// lands on the extrapolated value. Parameters equal at both neighbors stay
/// constant; optional parameters survive only when both neighbors have them.
pub fn extrapolate_node(pack: &NodeParameterPack, target_nm: f64) -> Result<NodeEntry> {
    if !target_nm.is_finite() || !(target_nm > 0.0) {
        return Err(Error::domain(format!(
            "extrapolation target node must be > 0 nm, got {target_nm}"
        )));
    }
    if pack.nodes.len() < 2 {
        return Err(Error::domain(format!(
            "extrapolating to {target_nm} nm needs at least two listed nodes, pack has {}",
            pack.nodes.len()
        )));
    }
    let mut by_distance: Vec<&NodeEntry> = pack.nodes.iter().collect();
    by_distance.sort_by(|a, b| {
        let da = (target_nm / a.node_nm).ln().abs();
        let db = (target_nm / b.node_nm).ln().abs();
        da.total_cmp(&db).then(a.node_nm.total_cmp(&b.node_nm))
    });
    let near = by_distance[0];
    let far = by_distance[1];

    let scalar = |name: &str, near_v: f64, far_v: f64| -> Result<f64> {
        geometric_extrapolate(name, target_nm, near.node_nm, far.node_nm, near_v, far_v)
    };
    let distribution =
        |name: &str, near_d: &Distribution, far_d: &Distribution| -> Result<Distribution> {
            let near_mean = near_d.mean();
            let far_mean = far_d.mean();
            if near_mean == far_mean {
                return Ok(near_d.clone());
            }
            let target_mean = scalar(name, near_mean, far_mean)?;
            near_d.scaled_by(target_mean / near_mean)
        };

    let wafer_cost_usd_per_cm2 = match (near.wafer_cost_usd_per_cm2, far.wafer_cost_usd_per_cm2) {
        (Some(a), Some(b)) => Some(scalar("wafer_cost_usd_per_cm2", a, b)?),
        _ => None,
    };
    let mut overhead = Vec::new();
    for &(count, near_factor) in near.packaging_overhead_by_die_count.entries() {
        let far_factor = far
            .packaging_overhead_by_die_count
            .entries()
            .iter()
            .find(|(c, _)| *c == count)
            .map(|(_, f)| *f);
        let factor = match far_factor {
            Some(f) => scalar("packaging_overhead", near_factor, f)?,
            None => near_factor,
        };
        overhead.push((count, factor));
    }

    Ok(NodeEntry {
        node_label: target_nm.to_string(),
        node_nm: target_nm,
        defect_density_per_cm2: distribution(
            "defect_density_per_cm2",
            &near.defect_density_per_cm2,
            &far.defect_density_per_cm2,
        )?,
        epa_kwh_per_cm2: distribution(
            "epa_kwh_per_cm2",
            &near.epa_kwh_per_cm2,
            &far.epa_kwh_per_cm2,
        )?,
        gpa_kg_per_cm2: distribution("gpa_kg_per_cm2", &near.gpa_kg_per_cm2, &far.gpa_kg_per_cm2)?,
        materials_kg_per_cm2: scalar(
            "materials_kg_per_cm2",
            near.materials_kg_per_cm2,
            far.materials_kg_per_cm2,
        )?,
        wafer_cost_usd_per_cm2,
        packaging_carbon_kg_per_cm2: scalar(
            "packaging_carbon_kg_per_cm2",
            near.packaging_carbon_kg_per_cm2,
            far.packaging_carbon_kg_per_cm2,
        )?,
        packaging_yield: scalar("packaging_yield", near.packaging_yield, far.packaging_yield)?
            .min(1.0),
        packaging_overhead_by_die_count: OverheadTable::new(overhead)?,
        clustering_alpha: scalar(
            "clustering_alpha",
            near.clustering_alpha,
            far.clustering_alpha,
        )?,
    })
}

/// Power-law continuation through (near_nm, near_v) and (far_nm, far_v),
/// evaluated at `target`. Equal values short-circuit to a constant so
/// zero-valued parameters survive.
fn geometric_extrapolate(
    name: &str,
    target: f64,
    near_nm: f64,
    far_nm: f64,
    near_v: f64,
    far_v: f64,
) -> Result<f64> {
    if near_v == far_v {
        return Ok(near_v);
    }
    if !(near_v > 0.0) || !(far_v > 0.0) {
        return Err(Error::domain(format!(
            "cannot extrapolate {name}: values must be positive to fit a power law \
             (got {near_v} @ {near_nm} nm, {far_v} @ {far_nm} nm)"
        )));
    }
    let exponent = (target / near_nm).ln() / (near_nm / far_nm).ln();
    Ok(near_v * (near_v / far_v).powf(exponent))
}

/// Finds the catalog name closest to `query` by case-insensitive edit
/// distance — used for "did you mean" suggestions.
pub fn nearest_name<'a, I: IntoIterator<Item = &'a str>>(names: I, query: &str) -> Option<String> {
    let query_lower = query.to_lowercase();
    names
        .into_iter()
        .map(|name| {
            (
                strsim::levenshtein(&name.to_lowercase(), &query_lower),
                name,
            )
        })
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, name)| name.to_string())
}

// ---------------------------------------------------------------------------
// Parameter pack JSON (strict schema)
// ---------------------------------------------------------------------------

const DISTRIBUTION_TYPES: [&str; 4] = ["point", "uniform", "gaussian", "kde"];

/// Loads a parameter pack from JSON in strict mode: every unknown key and
/// every malformed field is an error naming its JSON path.
pub fn load_parameter_pack(text: &str) -> Result<NodeParameterPack> {
    let root: Value = serde_json::from_str(text)?;
    let root = as_object(&root, "pack")?;
    check_known_keys(root, &["description", "nodes", "global"], "pack")?;

    let description = match root.get("description") {
        None => None,
        Some(v) => Some(
            v.as_str()
                .ok_or_else(|| Error::pack("description", "expected a string"))?
                .to_string(),
        ),
    };

    let nodes_value = root
        .get("nodes")
        .ok_or_else(|| Error::pack("pack", "missing field 'nodes'"))?;
    let nodes_map = as_object(nodes_value, "nodes")?;
    if nodes_map.is_empty() {
        return Err(Error::pack("nodes", "at least one node is required"));
    }
    let mut nodes = Vec::new();
    for (label, entry) in nodes_map {
        nodes.push(parse_node_entry(label, entry)?);
    }
    // Coarse-to-fine order, independent of the JSON key order.
    nodes.sort_by(|a, b| b.node_nm.total_cmp(&a.node_nm));
    for window in nodes.windows(2) {
        if window[0].node_nm == window[1].node_nm {
            return Err(Error::pack(
                format!("nodes.{}", window[1].node_label),
                format!("duplicate node: same nm as '{}'", window[0].node_label),
            ));
        }
    }

    let global_value = root
        .get("global")
        .ok_or_else(|| Error::pack("pack", "missing field 'global'"))?;
    let global = parse_global(global_value)?;

    Ok(NodeParameterPack {
        description,
        nodes,
        global,
    })
}

fn parse_node_entry(label: &str, value: &Value) -> Result<NodeEntry> {
    let ctx = format!("nodes.{label}");
    let node_nm = label
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v > 0.0)
        .ok_or_else(|| Error::pack(&ctx, "node key must be a positive number of nm"))?;
    let map = as_object(value, &ctx)?;
    check_known_keys(
        map,
        &[
            "defect_density_per_cm2",
            "epa_kwh_per_cm2",
            "gpa_kg_per_cm2",
            "materials_kg_per_cm2",
            "wafer_cost_usd_per_cm2",
            "packaging_carbon_kg_per_cm2",
            "packaging_yield",
            "packaging_overhead_by_die_count",
            "clustering_alpha",
        ],
        &ctx,
    )?;

    let dist = |key: &str| -> Result<Distribution> {
        let field_ctx = format!("{ctx}.{key}");
        let v = map
            .get(key)
            .ok_or_else(|| Error::pack(&ctx, format!("missing field '{key}'")))?;
        parse_distribution(v, &field_ctx)
    };
    let number = |key: &str| -> Result<f64> {
        let field_ctx = format!("{ctx}.{key}");
        let v = map
            .get(key)
            .ok_or_else(|| Error::pack(&ctx, format!("missing field '{key}'")))?;
        as_number(v, &field_ctx)
    };

    let materials_kg_per_cm2 = number("materials_kg_per_cm2")?;
    require_nonneg(&ctx, "materials_kg_per_cm2", materials_kg_per_cm2)?;
    let packaging_carbon_kg_per_cm2 = number("packaging_carbon_kg_per_cm2")?;
    require_nonneg(
        &ctx,
        "packaging_carbon_kg_per_cm2",
        packaging_carbon_kg_per_cm2,
    )?;

    let wafer_cost_usd_per_cm2 = match map.get("wafer_cost_usd_per_cm2") {
        None => None,
        Some(v) => {
            let field_ctx = format!("{ctx}.wafer_cost_usd_per_cm2");
            let cost = as_number(v, &field_ctx)?;
            require_nonneg(&ctx, "wafer_cost_usd_per_cm2", cost)?;
            Some(cost)
        }
    };
    let packaging_yield = match map.get("packaging_yield") {
        None => 1.0,
        Some(v) => as_number(v, &format!("{ctx}.packaging_yield"))?,
    };
    if !(packaging_yield > 0.0 && packaging_yield <= 1.0) {
        return Err(Error::pack(
            format!("{ctx}.packaging_yield"),
            format!("must be in (0, 1], got {packaging_yield}"),
        ));
    }
    let clustering_alpha = match map.get("clustering_alpha") {
        None => 2.0,
        Some(v) => as_number(v, &format!("{ctx}.clustering_alpha"))?,
    };
    if !(clustering_alpha > 0.0) {
        return Err(Error::pack(
            format!("{ctx}.clustering_alpha"),
            format!("must be > 0, got {clustering_alpha}"),
        ));
    }

    let overhead_ctx = format!("{ctx}.packaging_overhead_by_die_count");
    let overhead_value = map
        .get("packaging_overhead_by_die_count")
        .ok_or_else(|| Error::pack(&ctx, "missing field 'packaging_overhead_by_die_count'"))?;
    let overhead_map = as_object(overhead_value, &overhead_ctx)?;
    if overhead_map.is_empty() {
        return Err(Error::pack(
            &overhead_ctx,
            "must list at least one die count",
        ));
    }
    let mut overhead = Vec::new();
    for (count_key, factor_value) in overhead_map {
        let count = count_key
            .parse::<u32>()
            .ok()
            .filter(|c| *c >= 1)
            .ok_or_else(|| {
                Error::pack(
                    &overhead_ctx,
                    format!("die count key '{count_key}' must be an integer ≥ 1"),
                )
            })?;
        let factor = as_number(factor_value, &format!("{overhead_ctx}.{count_key}"))?;
        overhead.push((count, factor));
    }
    let packaging_overhead_by_die_count =
        OverheadTable::new(overhead).map_err(|e| Error::pack(&overhead_ctx, e.to_string()))?;

    Ok(NodeEntry {
        node_label: label.to_string(),
        node_nm,
        defect_density_per_cm2: dist("defect_density_per_cm2")?,
        epa_kwh_per_cm2: dist("epa_kwh_per_cm2")?,
        gpa_kg_per_cm2: dist("gpa_kg_per_cm2")?,
        materials_kg_per_cm2,
        wafer_cost_usd_per_cm2,
        packaging_carbon_kg_per_cm2,
        packaging_yield,
        packaging_overhead_by_die_count,
        clustering_alpha,
    })
}

fn parse_global(value: &Value) -> Result<GlobalParams> {
    let ctx = "global";
    let map = as_object(value, ctx)?;
    check_known_keys(
        map,
        &[
            "fab_carbon_intensity_kg_per_kwh",
            "design_energy_kwh_per_mm2",
            "design_carbon_intensity_kg_per_kwh",
            "design_amortization_volume_units",
            "use_carbon_intensity_kg_per_kwh",
        ],
        ctx,
    )?;
    let number = |key: &str| -> Result<f64> {
        let v = map
            .get(key)
            .ok_or_else(|| Error::pack(ctx, format!("missing field '{key}'")))?;
        as_number(v, &format!("{ctx}.{key}"))
    };

    let fab_ci_value = map
        .get("fab_carbon_intensity_kg_per_kwh")
        .ok_or_else(|| Error::pack(ctx, "missing field 'fab_carbon_intensity_kg_per_kwh'"))?;
    let fab_carbon_intensity_kg_per_kwh =
        parse_distribution(fab_ci_value, "global.fab_carbon_intensity_kg_per_kwh")?;

    let design_energy_kwh_per_mm2 = number("design_energy_kwh_per_mm2")?;
    require_nonneg(ctx, "design_energy_kwh_per_mm2", design_energy_kwh_per_mm2)?;
    let design_carbon_intensity_kg_per_kwh = number("design_carbon_intensity_kg_per_kwh")?;
    require_nonneg(
        ctx,
        "design_carbon_intensity_kg_per_kwh",
        design_carbon_intensity_kg_per_kwh,
    )?;
    let use_carbon_intensity_kg_per_kwh = number("use_carbon_intensity_kg_per_kwh")?;
    require_nonneg(
        ctx,
        "use_carbon_intensity_kg_per_kwh",
        use_carbon_intensity_kg_per_kwh,
    )?;

    let volume_value = map
        .get("design_amortization_volume_units")
        .ok_or_else(|| Error::pack(ctx, "missing field 'design_amortization_volume_units'"))?;
    let design_amortization_volume_units =
        volume_value.as_u64().filter(|v| *v >= 1).ok_or_else(|| {
            Error::pack(
                "global.design_amortization_volume_units",
                "must be an integer ≥ 1",
            )
        })?;

    Ok(GlobalParams {
        fab_carbon_intensity_kg_per_kwh,
        design_energy_kwh_per_mm2,
        design_carbon_intensity_kg_per_kwh,
        design_amortization_volume_units,
        use_carbon_intensity_kg_per_kwh,
    })
}

/// Parses a distribution spec object. `truncate_at_zero` defaults to `true`
/// here (pack parameters are physical quantities); in-code constructors
/// default to `false`.
fn parse_distribution(value: &Value, ctx: &str) -> Result<Distribution> {
    let map = as_object(value, ctx)?;
    let kind_tag = map.get("type").and_then(Value::as_str).ok_or_else(|| {
        Error::pack(
            ctx,
            format!("missing or non-string 'type' (expected one of {DISTRIBUTION_TYPES:?})"),
        )
    })?;
    let number = |key: &str| -> Result<f64> {
        let v = map
            .get(key)
            .ok_or_else(|| Error::pack(ctx, format!("missing field '{key}'")))?;
        as_number(v, &format!("{ctx}.{key}"))
    };

    let kind = match kind_tag {
        "point" => {
            check_known_keys(map, &["type", "value", "truncate_at_zero"], ctx)?;
            DistributionKind::PointMass {
                value: number("value")?,
            }
        }
        "uniform" => {
            check_known_keys(map, &["type", "lo", "hi", "truncate_at_zero"], ctx)?;
            DistributionKind::Uniform {
                lo: number("lo")?,
                hi: number("hi")?,
            }
        }
        "gaussian" => {
            check_known_keys(map, &["type", "mean", "stddev", "truncate_at_zero"], ctx)?;
            DistributionKind::Gaussian {
                mean: number("mean")?,
                stddev: number("stddev")?,
            }
        }
        "kde" => {
            check_known_keys(
                map,
                &["type", "observations", "bandwidth", "truncate_at_zero"],
                ctx,
            )?;
            let obs_value = map
                .get("observations")
                .ok_or_else(|| Error::pack(ctx, "missing field 'observations'"))?;
            let obs_array = obs_value
                .as_array()
                .ok_or_else(|| Error::pack(format!("{ctx}.observations"), "expected an array"))?;
            let mut observations = Vec::with_capacity(obs_array.len());
            for (i, v) in obs_array.iter().enumerate() {
                observations.push(as_number(v, &format!("{ctx}.observations[{i}]"))?);
            }
            match map.get("bandwidth") {
                Some(v) => DistributionKind::Kde {
                    observations,
                    bandwidth: as_number(v, &format!("{ctx}.bandwidth"))?,
                },
                // No bandwidth given: fit one from the observations.
                None => {
                    let fitted =
                        fit_kde(&observations).map_err(|e| Error::pack(ctx, e.to_string()))?;
                    fitted.kind
                }
            }
        }
        other => {
            return Err(Error::pack(
                ctx,
                format!(
                    "unknown distribution type '{other}' (expected one of {DISTRIBUTION_TYPES:?})"
                ),
            ));
        }
    };
    let truncate_at_zero = match map.get("truncate_at_zero") {
        None => true,
        Some(v) => v
            .as_bool()
            .ok_or_else(|| Error::pack(format!("{ctx}.truncate_at_zero"), "expected a boolean"))?,
    };
    let dist = Distribution {
        kind,
        truncate_at_zero,
    };
    dist.validate()
        .map_err(|e| Error::pack(ctx, e.to_string()))?;
    Ok(dist)
}

/// Serializes a pack back to pretty JSON in canonical layout (nodes coarse
/// to fine, every default written out). `load ∘ save` is the identity.
pub fn save_parameter_pack(pack: &NodeParameterPack) -> Result<String> {
    let mut root = Map::new();
    if let Some(description) = &pack.description {
        root.insert(
            "description".to_string(),
            Value::String(description.clone()),
        );
    }
    let mut nodes = Map::new();
    for entry in &pack.nodes {
        nodes.insert(entry.node_label.clone(), node_entry_to_value(entry)?);
    }
    root.insert("nodes".to_string(), Value::Object(nodes));

    let mut global = Map::new();
    global.insert(
        "fab_carbon_intensity_kg_per_kwh".to_string(),
        distribution_to_value(&pack.global.fab_carbon_intensity_kg_per_kwh)?,
    );
    global.insert(
        "design_energy_kwh_per_mm2".to_string(),
        json_number(pack.global.design_energy_kwh_per_mm2)?,
    );
    global.insert(
        "design_carbon_intensity_kg_per_kwh".to_string(),
        json_number(pack.global.design_carbon_intensity_kg_per_kwh)?,
    );
    global.insert(
        "design_amortization_volume_units".to_string(),
        Value::from(pack.global.design_amortization_volume_units),
    );
    global.insert(
        "use_carbon_intensity_kg_per_kwh".to_string(),
        json_number(pack.global.use_carbon_intensity_kg_per_kwh)?,
    );
    root.insert("global".to_string(), Value::Object(global));

    let mut text = serde_json::to_string_pretty(&Value::Object(root))?;
    text.push('\n');
    Ok(text)
}

fn node_entry_to_value(entry: &NodeEntry) -> Result<Value> {
    let mut map = Map::new();
    map.insert(
        "defect_density_per_cm2".to_string(),
        distribution_to_value(&entry.defect_density_per_cm2)?,
    );
    map.insert(
        "epa_kwh_per_cm2".to_string(),
        distribution_to_value(&entry.epa_kwh_per_cm2)?,
    );
    map.insert(
        "gpa_kg_per_cm2".to_string(),
        distribution_to_value(&entry.gpa_kg_per_cm2)?,
    );
    map.insert(
        "materials_kg_per_cm2".to_string(),
        json_number(entry.materials_kg_per_cm2)?,
    );
    if let Some(cost) = entry.wafer_cost_usd_per_cm2 {
        map.insert("wafer_cost_usd_per_cm2".to_string(), json_number(cost)?);
    }
    map.insert(
        "packaging_carbon_kg_per_cm2".to_string(),
        json_number(entry.packaging_carbon_kg_per_cm2)?,
    );
    map.insert(
        "packaging_yield".to_string(),
        json_number(entry.packaging_yield)?,
    );
    let mut overhead = Map::new();
    for &(count, factor) in entry.packaging_overhead_by_die_count.entries() {
        overhead.insert(count.to_string(), json_number(factor)?);
    }
    map.insert(
        "packaging_overhead_by_die_count".to_string(),
        Value::Object(overhead),
    );
    map.insert(
        "clustering_alpha".to_string(),
        json_number(entry.clustering_alpha)?,
    );
    Ok(Value::Object(map))
}

fn distribution_to_value(dist: &Distribution) -> Result<Value> {
    let mut map = Map::new();
    match &dist.kind {
        DistributionKind::PointMass { value } => {
            map.insert("type".to_string(), Value::String("point".to_string()));
            map.insert("value".to_string(), json_number(*value)?);
        }
        DistributionKind::Uniform { lo, hi } => {
            map.insert("type".to_string(), Value::String("uniform".to_string()));
            map.insert("lo".to_string(), json_number(*lo)?);
            map.insert("hi".to_string(), json_number(*hi)?);
        }
        DistributionKind::Gaussian { mean, stddev } => {
            map.insert("type".to_string(), Value::String("gaussian".to_string()));
            map.insert("mean".to_string(), json_number(*mean)?);
            map.insert("stddev".to_string(), json_number(*stddev)?);
        }
        DistributionKind::Kde {
            observations,
            bandwidth,
        } => {
            map.insert("type".to_string(), Value::String("kde".to_string()));
            let obs: Result<Vec<Value>> = observations.iter().map(|&x| json_number(x)).collect();
            map.insert("observations".to_string(), Value::Array(obs?));
            map.insert("bandwidth".to_string(), json_number(*bandwidth)?);
        }
    }
    map.insert(
        "truncate_at_zero".to_string(),
        Value::Bool(dist.truncate_at_zero),
    );
    Ok(Value::Object(map))
}

fn json_number(x: f64) -> Result<Value> {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| Error::Internal(format!("non-finite value {x} cannot be serialized")))
}

fn as_object<'a>(value: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::pack(ctx, "expected an object"))
}

fn as_number(value: &Value, ctx: &str) -> Result<f64> {
    value
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::pack(ctx, "expected a finite number"))
}

fn require_nonneg(ctx: &str, field: &str, value: f64) -> Result<()> {
    if value < 0.0 {
        return Err(Error::pack(
            format!("{ctx}.{field}"),
            format!("must be non-negative, got {value}"),
        ));
    }
    Ok(())
}

fn check_known_keys(map: &Map<String, Value>, allowed: &[&str], ctx: &str) -> Result<()> {
    let unknown: BTreeSet<&String> = map
        .keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .collect();
    if let Some(first) = unknown.iter().next() {
        return Err(Error::pack(
            ctx,
            format!("unknown key '{first}' (allowed: {})", allowed.join(", ")),
        ));
    }
    Ok(())
}
