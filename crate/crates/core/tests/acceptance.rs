//! The acceptance gate: one test per shipped guarantee, each asserting its
//! stated tolerance and printing a `PASS:` line with the measured numbers
//! (visible under `--nocapture`). The CLI determinism guarantee lives in
//! the CLI crate's own acceptance tests, next to the binary it exercises.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chipcarbon::analyses::{
    aggregate_shipments, amortization_grid, chiplet_sweep, cost_ecfp_series, flagship_trend,
};
use chipcarbon::carbon::{self, CarbonBreakdown, DesignParams, DieSpec, PackageSpec, UsageProfile};
use chipcarbon::dataset::{
    load_parameter_pack, parse_processors, parse_revenue, save_parameter_pack,
    serialize_processors, NodeParameterPack, ProcessorRecord,
};
use chipcarbon::scenario::ProcessorScenario;
use chipcarbon::stochastic::{
    derive_seed, fit_kde, overlap, run_monte_carlo, CarbonEstimate, Distribution, DistributionKind,
    QuantileSummary, StochasticInputs,
};

fn workspace_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join(rel)
}

fn fixture_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(rel)
}

fn reference_pack() -> NodeParameterPack {
    let text = fs::read_to_string(workspace_path("data/pack.json")).expect("read reference pack");
    load_parameter_pack(&text).expect("parse reference pack")
}

fn reference_records() -> Vec<ProcessorRecord> {
    let text =
        fs::read_to_string(workspace_path("data/processors.csv")).expect("read reference catalog");
    parse_processors(&text).expect("parse reference catalog").0
}

/// Yield matches a 1,000-point arbitrary-precision oracle to a relative
/// error below 1e-12, and the large-α limit lands within 1e-4 of the
/// Poisson yield. Both checks together run in under a second.
#[test]
fn yield_rate_matches_arbitrary_precision_oracle() {
    let started = Instant::now();
    let text = fs::read_to_string(fixture_path("yield_oracle.csv")).expect("read yield oracle");
    let mut rows = 0usize;
    let mut worst_rel = 0.0f64;
    for line in text.lines().skip(1) {
        let mut fields = line.split(',');
        let area: f64 = fields.next().unwrap().parse().unwrap();
        let d0: f64 = fields.next().unwrap().parse().unwrap();
        let alpha: f64 = fields.next().unwrap().parse().unwrap();
        let expected: f64 = fields.next().unwrap().parse().unwrap();
        let got = carbon::yield_rate(area, d0, alpha).expect("oracle inputs are valid");
        let rel = ((got - expected) / expected).abs();
        worst_rel = worst_rel.max(rel);
        assert!(
            rel < 1e-12,
            "yield({area}, {d0}, {alpha}) = {got}, oracle {expected}, relative error {rel:e}"
        );
        rows += 1;
    }
    assert_eq!(rows, 1000, "the oracle grid must have 1,000 points");

    // α → ∞ limit: within 1e-4 of the Poisson yield e^(−A·D₀).
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_abs = 0.0f64;
    for _ in 0..200 {
        let area = rng.random::<f64>() * 20.0;
        let d0 = rng.random::<f64>() * 0.6;
        let got = carbon::yield_rate(area, d0, 1e6).unwrap();
        let poisson = (-area * d0).exp();
        let abs = (got - poisson).abs();
        worst_abs = worst_abs.max(abs);
        assert!(
            abs <= 1e-4,
            "yield({area}, {d0}, 1e6) = {got}, Poisson limit {poisson}, |Δ| = {abs:e}"
        );
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "yield oracle checks took {elapsed:?}, budget is 1 s"
    );
    println!(
        "PASS: yield oracle — 1,000 points within 1e-12 (worst {worst_rel:.2e}), \
         Poisson limit within 1e-4 (worst {worst_abs:.2e}), in {elapsed:?}"
    );
}

/// With only the process-gas term random (gaussian) and everything else a
/// point mass, the footprint is affine in the one random draw, so the Monte
/// Carlo mean must land within 4σ/√n of the closed-form mean. Three seeds,
/// n = 10⁴ each, in under five seconds.
#[test]
fn monte_carlo_mean_matches_affine_closed_form() {
    let started = Instant::now();
    let die = DieSpec::new(600.0, 7.0).unwrap();
    let package = PackageSpec {
        dies: vec![die],
        packaging_overhead_factor: 1.0,
        packaging_carbon_kg_per_cm2: 3.0,
        packaging_yield: 0.98,
    };
    let gpa_mean = 2.0;
    let gpa_stddev = 0.25;
    let inputs = StochasticInputs {
        defect_density: Distribution::point_mass(0.08).unwrap(),
        epa: Distribution::point_mass(100.0).unwrap(),
        gpa: Distribution::gaussian(gpa_mean, gpa_stddev).unwrap(),
        fab_carbon_intensity: Distribution::point_mass(0.5).unwrap(),
        materials_kg_per_cm2: 1.5,
        clustering_alpha: 2.0,
    };
    let design = DesignParams {
        design_energy_kwh_per_mm2: 300.0,
        design_carbon_intensity_kg_per_kwh: 0.475,
        amortization_volume_units: 1_000_000,
    };
    let usage = UsageProfile::new(3.0, 0.6, 0.475).unwrap();
    let tdp_w = 300.0;
    let n = 10_000usize;

    // Affine in the gas draw g: total = c + (area/yield)·g, so the exact
    // mean is the total evaluated at E[g] and σ_total = (area/yield)·σ_g.
    let expected = carbon::total_cfp(&package, &inputs.mean_node_sample(), &design, tdp_w, &usage)
        .unwrap()
        .total_kg;
    let area_cm2 = 6.0;
    let yield_rate = carbon::yield_rate(area_cm2, 0.08, 2.0).unwrap();
    let sigma_total = area_cm2 / yield_rate * gpa_stddev;
    let tolerance = 4.0 * sigma_total / (n as f64).sqrt();

    for seed in [1u64, 42, 20_240_817] {
        let estimate = run_monte_carlo(&package, &inputs, &design, tdp_w, &usage, n, seed).unwrap();
        let delta = (estimate.mean_kg - expected).abs();
        assert!(
            delta <= tolerance,
            "seed {seed}: Monte Carlo mean {} vs closed form {expected}, |Δ| = {delta} > 4σ/√n = {tolerance}",
            estimate.mean_kg
        );
        assert_eq!(estimate.rejected_draws, 0, "no draw should be rejected");
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "affine-propagation checks took {elapsed:?}, budget is 5 s"
    );
    println!(
        "PASS: affine propagation — 3 seeds within 4σ/√n = {tolerance:.4} kg of {expected:.4} kg, in {elapsed:?}"
    );
}

/// On the reference 7 nm node, a monolithic die is the cheapest split at
/// 100 mm², some split beats monolithic at 850 mm², and the optimal count
/// never decreases as the total area grows. Runs in under a second.
#[test]
fn chiplet_crossover_structure_on_reference_pack() {
    let started = Instant::now();
    let pack = reference_pack();
    let resolved = pack.resolve_node(7.0).unwrap();
    let areas: Vec<f64> = (1..=17).map(|i| i as f64 * 50.0).collect();
    let report = chiplet_sweep(&areas, &[1, 2, 4, 8], &resolved, &pack.global).unwrap();

    let optima = report.optimal_counts();
    assert_eq!(optima.len(), areas.len(), "one optimum per area");
    let at = |area: f64| {
        optima
            .iter()
            .find(|(a, _)| *a == area)
            .map(|(_, n)| *n)
            .unwrap()
    };
    assert_eq!(at(100.0), 1, "monolithic must win at 100 mm²");
    assert!(at(850.0) > 1, "some split must win at 850 mm²");
    for pair in optima.windows(2) {
        assert!(
            pair[1].1 >= pair[0].1,
            "optimal count fell from {} to {} between {} and {} mm²",
            pair[0].1,
            pair[1].1,
            pair[0].0,
            pair[1].0
        );
    }

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "chiplet sweep took {elapsed:?}, budget is 1 s"
    );
    println!(
        "PASS: chiplet crossover — optimal counts {:?} over 50–850 mm², in {elapsed:?}",
        optima.iter().map(|(_, n)| *n).collect::<Vec<_>>()
    );
}

/// On the reference A100-SXM entry, the idle-70% break-even lifetime falls
/// in (1.5, 2.5] years, and every idle row of the grid is an exact
/// hyperbola: ratio × lifetime constant to a relative 1e-9.
#[test]
fn amortization_breakeven_and_hyperbola_rows() {
    let pack = reference_pack();
    let records = reference_records();
    let record = records
        .iter()
        .find(|r| r.name == "A100-SXM")
        .expect("A100-SXM is in the reference catalog");
    let scenario = ProcessorScenario::build(record, &pack).unwrap();
    let use_ci = pack.global.use_carbon_intensity_kg_per_kwh;
    let usage = UsageProfile::reference(use_ci).unwrap();
    let estimate = scenario
        .estimate(&usage, 10_000, derive_seed(42, &record.name))
        .unwrap();

    let lifetimes: Vec<f64> = (1..=10).map(|i| i as f64 * 0.5).collect();
    let idles: Vec<f64> = (0..=9).map(|i| i as f64 * 0.1).collect();
    let grid = amortization_grid(
        &record.name,
        estimate.mean_breakdown.embodied_kg,
        scenario.tdp_w,
        &lifetimes,
        &idles,
        use_ci,
        scenario.extrapolated,
    )
    .unwrap();

    let idle_index = grid
        .idle_fractions
        .iter()
        .position(|&idle| (idle - 0.7).abs() < 1e-12)
        .expect("idle 0.7 is on the grid");
    let breakeven = grid.breakeven_lifetime_years[idle_index]
        .expect("the A100-SXM footprint amortizes within the sweep");
    assert!(
        breakeven > 1.5 && breakeven <= 2.5,
        "idle-0.7 break-even {breakeven} years is outside (1.5, 2.5]"
    );

    for (row, ratios) in grid.ratios.iter().enumerate() {
        let mut constant: Option<f64> = None;
        for (col, ratio) in ratios.iter().enumerate() {
            let Some(ratio) = ratio else { continue };
            let product = ratio * grid.lifetimes_years[col];
            match constant {
                None => constant = Some(product),
                Some(c) => assert!(
                    (product - c).abs() <= 1e-9 * c.abs().max(1.0),
                    "idle row {row}: ratio×lifetime drifted from {c} to {product}"
                ),
            }
        }
    }

    println!(
        "PASS: amortization — idle-0.7 break-even {breakeven} years ∈ (1.5, 2.5], \
         all {} idle rows hyperbolic to 1e-9",
        grid.idle_fractions.len()
    );
}

/// On the reference revenue series, the final year's normalized fleet
/// footprint exceeds 50× the first year's and its normalized efficiency
/// (peak TFLOPS per kg) exceeds 100×.
#[test]
fn shipment_aggregation_reproduces_reference_growth() {
    let pack = reference_pack();
    let records = reference_records();
    let revenue_text =
        fs::read_to_string(workspace_path("data/revenue.csv")).expect("read reference revenue");
    let revenue = parse_revenue(&revenue_text).unwrap();
    let report = aggregate_shipments(&revenue, &records, &pack, 10_000, 42).unwrap();

    let last = report.rows.last().expect("revenue series is non-empty");
    assert!(
        last.normalized_total_cfp > 50.0,
        "final-year normalized total footprint {} must exceed 50",
        last.normalized_total_cfp
    );
    assert!(
        last.normalized_tflops_per_cfp > 100.0,
        "final-year normalized TFLOPS/CFP {} must exceed 100",
        last.normalized_tflops_per_cfp
    );
    println!(
        "PASS: shipments — {}: normalized total {:.1}× (> 50), normalized TFLOPS/CFP {:.1}× (> 100)",
        last.year, last.normalized_total_cfp, last.normalized_tflops_per_cfp
    );
}

/// Every fitted KDE is a proper density: its pdf integrates to 1 within
/// 1e-3 (trapezoid rule over ±6 bandwidths around the observations) for 20
/// randomized observation sets.
#[test]
fn fitted_kde_pdf_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(5..=40);
        let scale = 10f64.powf(rng.random_range(-2.0..3.0));
        let offset = rng.random_range(-1.0..1.0) * scale;
        let observations: Vec<f64> = (0..n)
            .map(|_| offset + rng.random::<f64>() * scale)
            .collect();
        let kde = fit_kde(&observations).unwrap();
        let DistributionKind::Kde { bandwidth, .. } = &kde.kind else {
            panic!("fit_kde must return a KDE");
        };

        let lo = observations.iter().copied().fold(f64::INFINITY, f64::min) - 6.0 * bandwidth;
        let hi = observations
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            + 6.0 * bandwidth;
        let steps = (((hi - lo) / (bandwidth / 16.0)).ceil() as usize).clamp(64, 500_000);
        let width = (hi - lo) / steps as f64;
        let mut integral = 0.0;
        let mut previous = kde.pdf(lo).unwrap();
        for i in 1..=steps {
            let current = kde.pdf(lo + i as f64 * width).unwrap();
            integral += 0.5 * (previous + current) * width;
            previous = current;
        }

        let error = (integral - 1.0).abs();
        worst = worst.max(error);
        assert!(
            error <= 1e-3,
            "case {case}: ∫pdf = {integral}, |Δ| = {error:e} with n = {n}, bandwidth = {bandwidth}"
        );
    }
    println!(
        "PASS: KDE validity — 20 randomized fits integrate to 1 within 1e-3 (worst {worst:.2e})"
    );
}

/// The empirical overlap of gaussian(0,1) vs gaussian(3,1) samples at
/// n = 10⁴ lands within 0.02 of the analytic overlap 2Φ(−3/2).
#[test]
fn overlap_matches_gaussian_oracle() {
    // 2Φ(−3/2) to 20 digits, frozen from an arbitrary-precision evaluation.
    #[allow(clippy::excessive_precision)]
    const EXPECTED: f64 = 0.13361440253771613201;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let standard = Distribution::gaussian(0.0, 1.0).unwrap();
    let shifted = Distribution::gaussian(3.0, 1.0).unwrap();
    let n = 10_000usize;
    let wrap = |samples: Vec<f64>| CarbonEstimate {
        sample_count: samples.len(),
        samples: Some(samples),
        mean_kg: 0.0,
        stddev_kg: 0.0,
        quantiles: QuantileSummary {
            p5: 0.0,
            p25: 0.0,
            p50: 0.0,
            p75: 0.0,
            p95: 0.0,
        },
        mean_breakdown: CarbonBreakdown::zero(),
        rejected_draws: 0,
        rejection_warning: false,
    };
    let a = wrap((0..n).map(|_| standard.sample(&mut rng)).collect());
    let b = wrap((0..n).map(|_| shifted.sample(&mut rng)).collect());

    let got = overlap(&a, &b).unwrap();
    let delta = (got - EXPECTED).abs();
    assert!(
        delta <= 0.02,
        "overlap {got} vs analytic {EXPECTED}, |Δ| = {delta} > 0.02"
    );
    assert_eq!(
        overlap(&a, &a).unwrap(),
        1.0,
        "self-overlap must be exactly 1"
    );
    println!("PASS: overlap oracle — empirical {got:.4} within 0.02 of 2Φ(−3/2) ≈ {EXPECTED:.4}");
}

/// Breakdown additivity is bit-exact on 1,000 randomized stage values, the
/// catalog and pack serializations are round-trip fixpoints, and every
/// report's CSV column order matches its golden header.
#[test]
fn additivity_roundtrips_and_schema_goldens() {
    // Additivity: the derived sums must equal the stage sums bit-for-bit.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let magnitude = |rng: &mut ChaCha8Rng| {
            let exponent = rng.random_range(-3.0..6.0);
            rng.random::<f64>() * 10f64.powf(exponent)
        };
        let design = magnitude(&mut rng);
        let manufacturing = magnitude(&mut rng);
        let packaging = magnitude(&mut rng);
        let operational = magnitude(&mut rng);
        let breakdown = CarbonBreakdown::from_stages(design, manufacturing, packaging, operational);
        assert_eq!(breakdown.embodied_kg, design + manufacturing + packaging);
        assert_eq!(breakdown.total_kg, breakdown.embodied_kg + operational);
    }

    // Round-trip fixpoints: parse ∘ serialize is the identity on the
    // canonical form of the shipped reference files.
    let catalog_text =
        fs::read_to_string(workspace_path("data/processors.csv")).expect("read reference catalog");
    let (records, _) = parse_processors(&catalog_text).unwrap();
    let serialized = serialize_processors(&records).unwrap();
    let (reparsed, _) = parse_processors(&serialized).unwrap();
    assert_eq!(records, reparsed, "catalog must round-trip losslessly");
    assert_eq!(
        serialized,
        serialize_processors(&reparsed).unwrap(),
        "catalog serialization must be a fixpoint"
    );

    let pack_text =
        fs::read_to_string(workspace_path("data/pack.json")).expect("read reference pack");
    let pack = load_parameter_pack(&pack_text).unwrap();
    let saved = save_parameter_pack(&pack).unwrap();
    let reloaded = load_parameter_pack(&saved).unwrap();
    assert_eq!(pack, reloaded, "pack must round-trip losslessly");
    assert_eq!(
        saved,
        save_parameter_pack(&reloaded).unwrap(),
        "pack serialization must be a fixpoint"
    );

    // Golden headers: the CSV column orders are frozen contracts.
    let records = reference_records();
    let revenue =
        parse_revenue(&fs::read_to_string(workspace_path("data/revenue.csv")).unwrap()).unwrap();
    let resolved = pack.resolve_node(7.0).unwrap();
    let sweep = chiplet_sweep(&[100.0, 400.0], &[1, 2], &resolved, &pack.global).unwrap();
    let grid =
        amortization_grid("x", 100.0, 300.0, &[1.0, 2.0], &[0.0, 0.5], 0.475, false).unwrap();
    let shipments = aggregate_shipments(&revenue, &records, &pack, 50, 42).unwrap();
    let cost = cost_ecfp_series(&records, &pack, 50, 42).unwrap();
    let trend = flagship_trend(&records, &pack, 50, 42).unwrap();
    let goldens: [(&str, String); 8] = [
        ("golden/chiplet_sweep.header", sweep.to_csv().unwrap()),
        ("golden/amortization.header", grid.to_csv().unwrap()),
        (
            "golden/amortization_breakeven.header",
            grid.breakeven_to_csv().unwrap(),
        ),
        ("golden/shipments.header", shipments.to_csv().unwrap()),
        ("golden/cost_ecfp.header", cost.to_csv().unwrap()),
        (
            "golden/cost_ecfp_nodes.header",
            cost.nodes_to_csv().unwrap(),
        ),
        (
            "golden/cost_ecfp_correlations.header",
            cost.correlations_to_csv().unwrap(),
        ),
        ("golden/trend.header", trend.to_csv().unwrap()),
    ];
    for (golden, csv_text) in goldens {
        let expected = fs::read_to_string(fixture_path(golden)).expect("read golden header");
        let header = csv_text.lines().next().unwrap_or_default();
        assert_eq!(
            header,
            expected.trim_end(),
            "column order of {golden} changed"
        );
    }

    println!(
        "PASS: additivity bit-exact on 1,000 random stage sets; catalog and pack are \
         round-trip fixpoints; 8 CSV headers match their goldens"
    );
}
