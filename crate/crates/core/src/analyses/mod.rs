//! The report-producing studies: chiplet-count sweeps, amortization grids,
//! fleet shipment aggregation, cost-vs-carbon correlation, and flagship
//! efficiency trends.
//!
//! Each study is a pure function from parsed inputs to a report struct.
//! Reports serialize to JSON (serde) and to CSV via their `*_csv` methods;
//! the CSV column orders are part of the public contract and frozen by
//! golden tests. Grid/area sweeps evaluate at the distribution means (they
//! are deterministic surfaces); the shipment, trend, and cost studies run a
//! seeded Monte Carlo per processor.
//!
//! Every report row carries an `extrapolated` flag that is true whenever
//! the parameters of the row's process node were extrapolated rather than
//! listed in the pack.

mod amortization;
mod chiplet;
mod cost;
mod shipments;
mod trend;

pub use amortization::{amortization_grid, AmortizationGrid};
pub use chiplet::{chiplet_sweep, ChipletSweepReport, ChipletSweepRow};
pub use cost::{cost_ecfp_series, CostCarbonReport, CostNodeRow, CostRecordRow};
pub use shipments::{aggregate_shipments, ShipmentReport, ShipmentYearRow, ASSUMED_PROFIT_MARGIN};
pub use trend::{flagship_trend, TrendReport, TrendRow};

use crate::error::{Error, Result};

/// Finishes a CSV writer into a string.
pub(crate) fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Internal(format!("csv writer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(format!("csv utf-8: {e}")))
}

/// Formats an optional float for CSV: absent values are empty cells.
pub(crate) fn opt_cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}
