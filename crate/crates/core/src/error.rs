//! Crate-wide error type.
//!
//! Errors are split by what the caller can do about them: `Domain` and the
//! schema variants indicate bad inputs (fixable by the user), `Internal`
//! indicates a bug in this crate, and the wrapper variants carry I/O and
//! parser failures through unchanged.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument violated a precondition (negative area, zero
    /// yield, idle fraction outside `[0, 1]`, …).
    #[error("domain error: {0}")]
    Domain(String),

    /// Monte Carlo sampling could not produce a usable draw.
    #[error("sampling error: {0}")]
    Stochastic(String),

    /// A CSV input lacked required columns.
    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    /// A CSV input carried columns this crate does not understand; parsing
    /// them silently would make serialization lossy, so they are rejected.
    #[error("unknown columns: {}", .0.join(", "))]
    UnknownColumns(Vec<String>),

    /// A parameter pack violated its schema. `context` names the offending
    /// node and field, e.g. `nodes.7.epa_kwh_per_cm2`.
    #[error("parameter pack: {context}: {message}")]
    PackSchema { context: String, message: String },

    /// A processor name was not present in the catalog.
    #[error("unknown processor '{name}'{}", match .suggestion {
        Some(s) => format!(" (did you mean '{s}'?)"),
        None => String::new(),
    })]
    UnknownProcessor {
        name: String,
        suggestion: Option<String>,
    },

    /// A record lacks the performance score its kind/segment designates.
    #[error("processor '{name}' has no {column} score")]
    MissingPerformance { name: String, column: String },

    /// An input collection that must be non-empty was empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// CSV-level parse failure (malformed quoting, uneven rows, …).
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    /// JSON-level parse failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Underlying I/O failure.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// An internal invariant was violated; this is a bug, not a user error.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Shorthand for a [`Error::Domain`] with a formatted message.
    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// Shorthand for a [`Error::PackSchema`] with a formatted message.
    pub fn pack(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::PackSchema {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user input rather than a bug in this crate.
    /// The CLI maps these to exit code 2 and everything else to exit code 3.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
