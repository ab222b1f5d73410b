//! Floating-point abstraction for the numeric kernels.
//!
//! The deterministic carbon arithmetic and the derived metrics are written
//! against [`Scalar`] rather than a concrete float so callers can trade
//! precision for speed (`f32`) or keep the default (`f64`). The trait is a
//! thin bundle of `num_traits` capabilities plus the formatting and threading
//! bounds the rest of the crate needs.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// A floating-point scalar the carbon kernels can compute with.
///
/// Implemented for `f32` and `f64`. The supertraits cover arithmetic
/// (`Float`), conversion from literals (`FromPrimitive`), summation, display
/// in error messages, and `Send + Sync` so values can cross thread
/// boundaries inside the Monte Carlo driver.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Used for the physical unit constants baked into the formulas (hours
    /// per year, mm² per cm², …). Only finite constants are ever passed, so
    /// the conversion cannot fail for `f32`/`f64`.
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant must be representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
