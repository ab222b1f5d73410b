//! Command implementations: load and digest the input files, run the
//! analysis, and write the report files plus `manifest.json` under `--out`.
//!
//! Row-level dataset diagnostics and sampling warnings go to stderr; the
//! report files and the one-line summary on stdout stay deterministic.

use std::fs;
use std::path::Path;

use serde::Serialize;

use chipcarbon::analyses::{
    aggregate_shipments, amortization_grid, chiplet_sweep, cost_ecfp_series, flagship_trend,
};
use chipcarbon::carbon::UsageProfile;
use chipcarbon::dataset::{
    load_parameter_pack, nearest_name, parse_processors, parse_revenue, NodeParameterPack,
    ProcessorRecord,
};
use chipcarbon::scenario::ProcessorScenario;
use chipcarbon::stochastic::{derive_seed, overlap, CarbonEstimate};
use chipcarbon::{Error, Result};

use crate::manifest::{InputDigest, RunManifest};
use crate::{AmortizeArgs, Cli, Command, EstimateArgs, Format, ShipmentsArgs, SweepChipletsArgs};

/// What a command produced: manifest ingredients plus named report files.
struct Outputs {
    command: &'static str,
    parameters: serde_json::Value,
    inputs: Vec<InputDigest>,
    files: Vec<(&'static str, String)>,
}

/// Runs the parsed invocation and returns the stdout summary line.
pub fn run(cli: &Cli) -> Result<String> {
    let outputs = match &cli.command {
        Command::Estimate(args) => cmd_estimate(cli, args),
        Command::SweepChiplets(args) => cmd_sweep_chiplets(cli, args),
        Command::Amortize(args) => cmd_amortize(cli, args),
        Command::Shipments(args) => cmd_shipments(cli, args),
        Command::CostCorr => cmd_cost_corr(cli),
        Command::Trend => cmd_trend(cli),
    }?;

    let manifest = RunManifest {
        tool: "chipcarbon",
        version: env!("CARGO_PKG_VERSION"),
        command: outputs.command,
        format: cli.common.format.as_str(),
        seed: cli.common.seed,
        samples: cli.common.samples,
        parameters: outputs.parameters,
        inputs: outputs.inputs,
    };

    let out_dir = &cli.common.out;
    fs::create_dir_all(out_dir).map_err(|e| {
        Error::domain(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    let mut written = Vec::with_capacity(outputs.files.len() + 1);
    for (name, text) in &outputs.files {
        write_file(out_dir, name, text)?;
        written.push(*name);
    }
    write_file(out_dir, "manifest.json", &manifest.to_json()?)?;
    written.push("manifest.json");
    Ok(format!(
        "{}: wrote {} to {}",
        outputs.command,
        written.join(", "),
        out_dir.display()
    ))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| Error::domain(format!("cannot write {}: {e}", path.display())))
}

/// Reads an input file, recording its digest for the manifest.
fn read_input(path: &Path) -> Result<(String, InputDigest)> {
    let bytes = fs::read(path)
        .map_err(|e| Error::domain(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::new(path, &bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::domain(format!("{} is not valid UTF-8: {e}", path.display())))?;
    Ok((text, digest))
}

fn load_dataset(path: &Path) -> Result<(Vec<ProcessorRecord>, InputDigest)> {
    let (text, digest) = read_input(path)?;
    let (records, diagnostics) = parse_processors(&text)?;
    for diagnostic in &diagnostics {
        eprintln!("{diagnostic}");
    }
    Ok((records, digest))
}

fn load_pack(path: &Path) -> Result<(NodeParameterPack, InputDigest)> {
    let (text, digest) = read_input(path)?;
    Ok((load_parameter_pack(&text)?, digest))
}

fn find_record<'a>(records: &'a [ProcessorRecord], name: &str) -> Result<&'a ProcessorRecord> {
    records
        .iter()
        .find(|record| record.name == name)
        .ok_or_else(|| Error::UnknownProcessor {
            name: name.to_string(),
            suggestion: nearest_name(records.iter().map(|r| r.name.as_str()), name),
        })
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv writer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(format!("csv utf-8: {e}")))
}

/// One processor's Monte Carlo estimate with the context it was run under.
#[derive(Debug, Serialize)]
struct EstimateReport {
    name: String,
    node_label: String,
    node_nm: f64,
    extrapolated: bool,
    lifetime_years: f64,
    idle_fraction: f64,
    use_carbon_intensity_kg_per_kwh: f64,
    estimate: CarbonEstimate,
}

/// Overlap coefficient of one pair of footprint distributions.
#[derive(Debug, Serialize)]
struct OverlapRow {
    processor_a: String,
    processor_b: String,
    overlap: f64,
}

/// The `estimate.json` document.
#[derive(Debug, Serialize)]
struct EstimateDocument {
    reports: Vec<EstimateReport>,
    overlaps: Vec<OverlapRow>,
}

fn cmd_estimate(cli: &Cli, args: &EstimateArgs) -> Result<Outputs> {
    let (records, dataset_digest) = load_dataset(&cli.common.dataset)?;
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let use_ci = pack.global.use_carbon_intensity_kg_per_kwh;
    let usage = UsageProfile::new(args.lifetime, args.idle, use_ci)?;

    // Each processor's stream is derived from the base seed and its name, so
    // the estimate for a given name is identical however many are requested.
    let mut estimates = Vec::with_capacity(args.names.len());
    for name in &args.names {
        let record = find_record(&records, name)?;
        let scenario = ProcessorScenario::build(record, &pack)?;
        let estimate = scenario.estimate(
            &usage,
            cli.common.samples,
            derive_seed(cli.common.seed, &record.name),
        )?;
        if estimate.rejection_warning {
            eprintln!(
                "warning: {name}: over 1% of draws were rejected and redrawn; \
                 the sampled distribution deviates from the configured one"
            );
        }
        estimates.push((scenario, estimate));
    }

    let mut overlaps = Vec::new();
    for i in 0..estimates.len() {
        for j in (i + 1)..estimates.len() {
            overlaps.push(OverlapRow {
                processor_a: estimates[i].0.name.clone(),
                processor_b: estimates[j].0.name.clone(),
                overlap: overlap(&estimates[i].1, &estimates[j].1)?,
            });
        }
    }

    let reports: Vec<EstimateReport> = estimates
        .into_iter()
        .map(|(scenario, estimate)| EstimateReport {
            name: scenario.name,
            node_label: scenario.node_label,
            node_nm: scenario.node_nm,
            extrapolated: scenario.extrapolated,
            lifetime_years: args.lifetime,
            idle_fraction: args.idle,
            use_carbon_intensity_kg_per_kwh: use_ci,
            estimate: if args.retain_samples {
                estimate
            } else {
                estimate.without_samples()
            },
        })
        .collect();

    let mut files = Vec::new();
    match cli.common.format {
        Format::Json => {
            let document = EstimateDocument { reports, overlaps };
            files.push(("estimate.json", to_pretty_json(&document)?));
        }
        Format::Csv => {
            files.push(("estimate.csv", estimate_csv(&reports)?));
            if reports.len() >= 2 {
                files.push(("estimate_overlap.csv", overlap_csv(&overlaps)?));
            }
        }
    }
    Ok(Outputs {
        command: "estimate",
        parameters: serde_json::json!({
            "names": args.names,
            "lifetime_years": args.lifetime,
            "idle_fraction": args.idle,
            "retain_samples": args.retain_samples,
        }),
        inputs: vec![dataset_digest, pack_digest],
        files,
    })
}

fn estimate_csv(reports: &[EstimateReport]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "name",
        "node_label",
        "node_nm",
        "extrapolated",
        "lifetime_years",
        "idle_fraction",
        "use_carbon_intensity_kg_per_kwh",
        "sample_count",
        "mean_kg",
        "stddev_kg",
        "p5_kg",
        "p25_kg",
        "p50_kg",
        "p75_kg",
        "p95_kg",
        "design_kg",
        "manufacturing_kg",
        "packaging_kg",
        "embodied_kg",
        "operational_kg",
        "total_kg",
        "rejected_draws",
        "rejection_warning",
    ])?;
    for report in reports {
        let estimate = &report.estimate;
        writer.write_record([
            report.name.clone(),
            report.node_label.clone(),
            report.node_nm.to_string(),
            report.extrapolated.to_string(),
            report.lifetime_years.to_string(),
            report.idle_fraction.to_string(),
            report.use_carbon_intensity_kg_per_kwh.to_string(),
            estimate.sample_count.to_string(),
            estimate.mean_kg.to_string(),
            estimate.stddev_kg.to_string(),
            estimate.quantiles.p5.to_string(),
            estimate.quantiles.p25.to_string(),
            estimate.quantiles.p50.to_string(),
            estimate.quantiles.p75.to_string(),
            estimate.quantiles.p95.to_string(),
            estimate.mean_breakdown.design_kg.to_string(),
            estimate.mean_breakdown.manufacturing_kg.to_string(),
            estimate.mean_breakdown.packaging_kg.to_string(),
            estimate.mean_breakdown.embodied_kg.to_string(),
            estimate.mean_breakdown.operational_kg.to_string(),
            estimate.mean_breakdown.total_kg.to_string(),
            estimate.rejected_draws.to_string(),
            estimate.rejection_warning.to_string(),
        ])?;
    }
    finish_csv(writer)
}

fn overlap_csv(overlaps: &[OverlapRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["processor_a", "processor_b", "overlap"])?;
    for row in overlaps {
        writer.write_record([
            row.processor_a.clone(),
            row.processor_b.clone(),
            row.overlap.to_string(),
        ])?;
    }
    finish_csv(writer)
}

fn cmd_sweep_chiplets(cli: &Cli, args: &SweepChipletsArgs) -> Result<Outputs> {
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let resolved = pack.resolve_node(args.node)?;
    let report = chiplet_sweep(&args.areas.0, &args.counts.0, &resolved, &pack.global)?;
    let files = vec![match cli.common.format {
        Format::Json => ("chiplet_sweep.json", to_pretty_json(&report)?),
        Format::Csv => ("chiplet_sweep.csv", report.to_csv()?),
    }];
    Ok(Outputs {
        command: "sweep-chiplets",
        parameters: serde_json::json!({
            "node_nm": args.node,
            "areas_mm2": args.areas.0,
            "chiplet_counts": args.counts.0,
        }),
        inputs: vec![pack_digest],
        files,
    })
}

fn cmd_amortize(cli: &Cli, args: &AmortizeArgs) -> Result<Outputs> {
    let (records, dataset_digest) = load_dataset(&cli.common.dataset)?;
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let record = find_record(&records, &args.name)?;
    let scenario = ProcessorScenario::build(record, &pack)?;
    let use_ci = pack.global.use_carbon_intensity_kg_per_kwh;

    // The grid amortizes the Monte Carlo mean embodied footprint; the usage
    // profile of the estimate is irrelevant to that mean, so the fixed
    // reference profile is used.
    let usage = UsageProfile::reference(use_ci)?;
    let estimate = scenario.estimate(
        &usage,
        cli.common.samples,
        derive_seed(cli.common.seed, &record.name),
    )?;
    let grid = amortization_grid(
        &scenario.name,
        estimate.mean_breakdown.embodied_kg,
        scenario.tdp_w,
        &args.lifetimes.0,
        &args.idles.0,
        use_ci,
        scenario.extrapolated,
    )?;
    let files = match cli.common.format {
        Format::Json => vec![("amortization.json", to_pretty_json(&grid)?)],
        Format::Csv => vec![
            ("amortization.csv", grid.to_csv()?),
            ("amortization_breakeven.csv", grid.breakeven_to_csv()?),
        ],
    };
    Ok(Outputs {
        command: "amortize",
        parameters: serde_json::json!({
            "name": args.name,
            "lifetimes_years": args.lifetimes.0,
            "idle_fractions": args.idles.0,
        }),
        inputs: vec![dataset_digest, pack_digest],
        files,
    })
}

fn cmd_shipments(cli: &Cli, args: &ShipmentsArgs) -> Result<Outputs> {
    let (records, dataset_digest) = load_dataset(&cli.common.dataset)?;
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let (revenue_text, revenue_digest) = read_input(&args.revenue)?;
    let revenue = parse_revenue(&revenue_text)?;
    let report = aggregate_shipments(
        &revenue,
        &records,
        &pack,
        cli.common.samples,
        cli.common.seed,
    )?;
    let files = vec![match cli.common.format {
        Format::Json => ("shipments.json", to_pretty_json(&report)?),
        Format::Csv => ("shipments.csv", report.to_csv()?),
    }];
    Ok(Outputs {
        command: "shipments",
        parameters: serde_json::json!({}),
        inputs: vec![dataset_digest, pack_digest, revenue_digest],
        files,
    })
}

fn cmd_cost_corr(cli: &Cli) -> Result<Outputs> {
    let (records, dataset_digest) = load_dataset(&cli.common.dataset)?;
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let report = cost_ecfp_series(&records, &pack, cli.common.samples, cli.common.seed)?;
    if !report.skipped.is_empty() {
        eprintln!(
            "note: no wafer cost for the node of {} record(s), skipped: {}",
            report.skipped.len(),
            report.skipped.join(", ")
        );
    }
    let files = match cli.common.format {
        Format::Json => vec![("cost_ecfp.json", to_pretty_json(&report)?)],
        Format::Csv => vec![
            ("cost_ecfp.csv", report.to_csv()?),
            ("cost_ecfp_nodes.csv", report.nodes_to_csv()?),
            ("cost_ecfp_correlations.csv", report.correlations_to_csv()?),
        ],
    };
    Ok(Outputs {
        command: "cost-corr",
        parameters: serde_json::json!({}),
        inputs: vec![dataset_digest, pack_digest],
        files,
    })
}

fn cmd_trend(cli: &Cli) -> Result<Outputs> {
    let (records, dataset_digest) = load_dataset(&cli.common.dataset)?;
    let (pack, pack_digest) = load_pack(&cli.common.pack)?;
    let report = flagship_trend(&records, &pack, cli.common.samples, cli.common.seed)?;
    if !report.skipped.is_empty() {
        eprintln!(
            "note: no designated benchmark score for {} record(s), skipped: {}",
            report.skipped.len(),
            report.skipped.join(", ")
        );
    }
    let files = vec![match cli.common.format {
        Format::Json => ("trend.json", to_pretty_json(&report)?),
        Format::Csv => ("trend.csv", report.to_csv()?),
    }];
    Ok(Outputs {
        command: "trend",
        parameters: serde_json::json!({}),
        inputs: vec![dataset_digest, pack_digest],
        files,
    })
}
