//! Tree-health analysis from paired multispectral (red/green/near-infrared)
//! and thermal captures.
//!
//! The library covers the full ground pipeline: registering the RGN raster
//! onto the thermal grid, NDVI and canopy-minus-air temperature indexes,
//! canopy instance segmentation, COCO-style mask AP evaluation, validation
//! statistics, ground-truth inventory matching, and a synthetic scene
//! generator with exact truth for end-to-end checks.
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f32` or `f64`);
//! [`Scalar`] is the default precision used by the composed pipeline.

pub mod error;
pub mod indexes;
pub mod inventory;
pub mod io;
pub mod pipeline;
pub mod raster;
pub mod register;
pub mod results;
pub mod scalar;
pub mod segeval;
pub mod segment;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default floating-point type for pipeline computations.
pub type Scalar = f64;
