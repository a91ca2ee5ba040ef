//! Scalar abstraction for the floating-point math in this crate.
//!
//! Raster storage stays integral (`u8` channels, `u16` labels); everything
//! derived from it — registration mappings, vegetation indexes, temperatures,
//! evaluation metrics, statistics — is generic over [`Real`] so the same
//! kernels run in `f32` or `f64`. The crate-root alias [`crate::Scalar`]
//! picks `f64` as the default working precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless embedding of an 8-bit channel value.
    fn from_channel(v: u8) -> Self {
        Self::from(v).expect("u8 fits in any float")
    }

    /// Conversion from a count; exact for anything a raster can hold.
    fn from_count(n: usize) -> Self {
        Self::from(n).expect("pixel count fits in a float")
    }

    /// Conversion from `f64`, rounding to the target precision.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts")
    }

    /// Widening conversion to `f64` for high-precision accumulation.
    fn widen(self) -> f64 {
        self.to_f64().expect("float widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
