//! Coastline extraction from SAR intensity images.
//!
//! The pipeline: normalize 16-bit intensities ([`preprocess`]), predict
//! per-pixel probabilities with overlapping multi-scale windows
//! ([`predict`]), turn each model's map into a per-column coastline
//! ([`extract`]), fuse the models and close gaps ([`ensemble`]), and score the
//! result against evaluation points ([`evaluate`]). [`augment`] produces
//! training samples and [`synth`] generates scenes with a known coastline.

// `!(a <= b)` comparisons are deliberate: they reject NaN along with out-of-order values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod distance;
pub mod ensemble;
pub mod error;
pub mod evaluate;
pub mod extract;
pub mod pipeline;
pub mod predict;
pub mod preprocess;
pub mod raster;
pub mod resample;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use raster::{
    Class, ClassMap, CoastMask, CoastlinePath, EvaluationPoint, FloatRaster, Orientation,
    RasterImage, Rect,
};
