//! Amortization grid: how many years of use does it take for the
//! operational footprint to outweigh the embodied footprint?

use serde::{Deserialize, Serialize};

use crate::carbon::{self, UsageProfile};
use crate::error::{Error, Result};

use super::{finish_csv, opt_cell};

/// Ratio of embodied to operational footprint over a lifetime × idle grid.
///
/// Cells where the operational footprint is zero (full idle, or a zero
/// use-phase carbon intensity) have no finite ratio and are `None`
/// ("unbounded"): the embodied footprint is never amortized there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmortizationGrid {
    pub processor: String,
    pub embodied_kg: f64,
    pub tdp_w: f64,
    pub use_carbon_intensity_kg_per_kwh: f64,
    pub extrapolated: bool,
    /// Ascending lifetime axis in years.
    pub lifetimes_years: Vec<f64>,
    /// Ascending idle-fraction axis.
    pub idle_fractions: Vec<f64>,
    /// `ratios[i][j]` = embodied / operational at `idle_fractions[i]`,
    /// `lifetimes_years[j]`; `None` = unbounded.
    pub ratios: Vec<Vec<Option<f64>>>,
    /// Per idle fraction: the smallest listed lifetime with ratio ≤ 1, if
    /// any — the break-even contour.
    pub breakeven_lifetime_years: Vec<Option<f64>>,
}

impl AmortizationGrid {
    /// Long-format CSV (one row per grid cell) with the frozen column order.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "processor",
            "lifetime_years",
            "idle_fraction",
            "ecfp_ocfp_ratio",
            "unbounded",
            "extrapolated",
        ])?;
        for (i, &idle) in self.idle_fractions.iter().enumerate() {
            for (j, &lifetime) in self.lifetimes_years.iter().enumerate() {
                let ratio = self.ratios[i][j];
                writer.write_record([
                    self.processor.clone(),
                    lifetime.to_string(),
                    idle.to_string(),
                    opt_cell(ratio),
                    ratio.is_none().to_string(),
                    self.extrapolated.to_string(),
                ])?;
            }
        }
        finish_csv(writer)
    }

    /// Break-even contour CSV with the frozen column order.
    pub fn breakeven_to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "processor",
            "idle_fraction",
            "breakeven_lifetime_years",
            "extrapolated",
        ])?;
        for (i, &idle) in self.idle_fractions.iter().enumerate() {
            writer.write_record([
                self.processor.clone(),
                idle.to_string(),
                opt_cell(self.breakeven_lifetime_years[i]),
                self.extrapolated.to_string(),
            ])?;
        }
        finish_csv(writer)
    }

    /// The ratio at an exact (idle, lifetime) grid point, if both are listed.
    pub fn ratio_at(&self, idle_fraction: f64, lifetime_years: f64) -> Option<Option<f64>> {
        let i = self
            .idle_fractions
            .iter()
            .position(|&x| x == idle_fraction)?;
        let j = self
            .lifetimes_years
            .iter()
            .position(|&x| x == lifetime_years)?;
        Some(self.ratios[i][j])
    }
}

/// Computes the embodied/operational ratio grid for one processor.
///
/// `embodied_kg` is the (estimate mean) embodied footprint; each cell
/// divides it by the operational footprint of the cell's usage profile.
/// Axes are sorted ascending and deduplicated; lifetimes must be positive
/// so each row is an exact hyperbola (`ratio × lifetime` constant).
pub fn amortization_grid(
    processor: &str,
    embodied_kg: f64,
    tdp_w: f64,
    lifetimes_years: &[f64],
    idle_fractions: &[f64],
    use_carbon_intensity_kg_per_kwh: f64,
    extrapolated: bool,
) -> Result<AmortizationGrid> {
    if lifetimes_years.is_empty() {
        return Err(Error::EmptyInput("lifetime axis"));
    }
    if idle_fractions.is_empty() {
        return Err(Error::EmptyInput("idle axis"));
    }
    if let Some(bad) = lifetimes_years
        .iter()
        .find(|l| !l.is_finite() || !(**l > 0.0))
    {
        return Err(Error::domain(format!(
            "lifetimes must be positive, got {bad}"
        )));
    }
    if !embodied_kg.is_finite() || embodied_kg < 0.0 {
        return Err(Error::domain(format!(
            "embodied_kg must be non-negative, got {embodied_kg}"
        )));
    }

    let mut lifetimes: Vec<f64> = lifetimes_years.to_vec();
    lifetimes.sort_unstable_by(f64::total_cmp);
    lifetimes.dedup();
    let mut idles: Vec<f64> = idle_fractions.to_vec();
    idles.sort_unstable_by(f64::total_cmp);
    idles.dedup();

    let mut ratios = Vec::with_capacity(idles.len());
    let mut breakeven = Vec::with_capacity(idles.len());
    for &idle in &idles {
        let mut row = Vec::with_capacity(lifetimes.len());
        let mut first_breakeven = None;
        for &lifetime in &lifetimes {
            let usage = UsageProfile::new(lifetime, idle, use_carbon_intensity_kg_per_kwh)?;
            let ocfp = carbon::operational_cfp(tdp_w, &usage)?;
            let ratio = if ocfp == 0.0 {
                None
            } else {
                Some(embodied_kg / ocfp)
            };
            if first_breakeven.is_none() {
                if let Some(r) = ratio {
                    if r <= 1.0 {
                        first_breakeven = Some(lifetime);
                    }
                }
            }
            row.push(ratio);
        }
        ratios.push(row);
        breakeven.push(first_breakeven);
    }

    Ok(AmortizationGrid {
        processor: processor.to_string(),
        embodied_kg,
        tdp_w,
        use_carbon_intensity_kg_per_kwh,
        extrapolated,
        lifetimes_years: lifetimes,
        idle_fractions: idles,
        ratios,
        breakeven_lifetime_years: breakeven,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(embodied: f64, idles: &[f64]) -> AmortizationGrid {
        amortization_grid(
            "A100-SXM",
            embodied,
            400.0,
            &[0.5, 1.0, 2.0, 3.0, 4.0, 5.0],
            idles,
            0.475,
            false,
        )
        .unwrap()
    }

    #[test]
    fn full_idle_cells_are_unbounded() {
        let grid = grid(1000.0, &[0.0, 0.9, 1.0]);
        // idle = 1.0 burns no energy: never amortized.
        for j in 0..grid.lifetimes_years.len() {
            assert_eq!(grid.ratios[2][j], None);
        }
        assert_eq!(grid.breakeven_lifetime_years[2], None);
        // idle = 0.9 still amortizes eventually.
        assert!(grid.ratios[1].iter().all(|r| r.is_some()));
    }

    #[test]
    fn doubling_lifetime_exactly_halves_the_ratio() {
        let grid = grid(990.0, &[0.0, 0.3, 0.7]);
        for (i, _) in grid.idle_fractions.iter().enumerate() {
            let at_1 = grid.ratios[i][1].unwrap();
            let at_2 = grid.ratios[i][2].unwrap();
            let at_4 = grid.ratios[i][4].unwrap();
            assert_eq!(at_2, at_1 / 2.0);
            assert_eq!(at_4, at_2 / 2.0);
        }
    }

    #[test]
    fn ratio_times_lifetime_is_constant_along_each_idle_row() {
        let grid = grid(1234.5, &[0.0, 0.5, 0.9]);
        for (i, _) in grid.idle_fractions.iter().enumerate() {
            let products: Vec<f64> = grid
                .lifetimes_years
                .iter()
                .zip(&grid.ratios[i])
                .map(|(&l, r)| r.unwrap() * l)
                .collect();
            for pair in products.windows(2) {
                assert!(((pair[0] - pair[1]) / pair[0]).abs() < 1e-12, "{pair:?}");
            }
        }
    }

    #[test]
    fn ratio_is_strictly_decreasing_in_lifetime_when_active() {
        let grid = grid(990.0, &[0.0, 0.6]);
        for row in &grid.ratios {
            let values: Vec<f64> = row.iter().map(|r| r.unwrap()).collect();
            assert!(values.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn breakeven_is_the_smallest_lifetime_at_or_below_ratio_one() {
        // OCFP(l, idle=0) = 400·8760·l/1000·0.475 ≈ 1664.4·l kg, so one
        // year's worth of embodied carbon breaks even exactly at l = 1.
        let one_year_ocfp =
            carbon::operational_cfp(400.0, &UsageProfile::new(1.0, 0.0, 0.475).unwrap()).unwrap();
        let exact = grid(one_year_ocfp, &[0.0]);
        assert_eq!(exact.breakeven_lifetime_years[0], Some(1.0));
        // A tiny bit more embodied carbon pushes break-even to the next
        // listed lifetime.
        let pushed = grid(one_year_ocfp * 1.01, &[0.0]);
        assert_eq!(pushed.breakeven_lifetime_years[0], Some(2.0));
    }

    #[test]
    fn axes_are_validated() {
        assert!(amortization_grid("X", 1.0, 400.0, &[], &[0.5], 0.475, false).is_err());
        assert!(amortization_grid("X", 1.0, 400.0, &[1.0], &[], 0.475, false).is_err());
        assert!(amortization_grid("X", 1.0, 400.0, &[0.0], &[0.5], 0.475, false).is_err());
        assert!(amortization_grid("X", -1.0, 400.0, &[1.0], &[0.5], 0.475, false).is_err());
        assert!(amortization_grid("X", 1.0, 400.0, &[1.0], &[1.5], 0.475, false).is_err());
    }

    #[test]
    fn csv_has_one_row_per_cell_in_axis_order() {
        let grid =
            amortization_grid("X", 100.0, 300.0, &[2.0, 1.0], &[0.5, 0.0], 0.5, true).unwrap();
        let csv = grid.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "processor,lifetime_years,idle_fraction,ecfp_ocfp_ratio,unbounded,extrapolated"
        );
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("X,1,0,"));
        assert!(lines[2].starts_with("X,2,0,"));
        assert!(lines[3].starts_with("X,1,0.5,"));
        assert!(lines[1].ends_with(",false,true"));
    }
}
