//! Semi-automated geological lineament extraction.
//!
//! The pipeline turns a multiband reflectance raster into lineament vectors:
//! dimension reduction ([`dimred`]) to a greyscale component, noise filtering
//! and edge enhancement ([`enhance`]), Canny edge detection ([`detect`]),
//! pixel-connectivity line extraction ([`vectorize`]), DEM-based stream
//! masking ([`hydro`]) and density / orientation / occurrence analyses
//! ([`analyze`]). [`pipeline`] wires the stages together.
//!
//! Inner loops run on rayon when the `parallel` feature is enabled (the
//! default). Results are identical with and without it.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod detect;
pub mod dimred;
pub mod enhance;
pub mod error;
pub mod geom;
pub mod hydro;
pub mod linalg;
mod par;
pub mod pipeline;
pub mod raster;
pub mod vectorize;

pub use error::{Error, Result};
pub use par::pairwise_sum;
