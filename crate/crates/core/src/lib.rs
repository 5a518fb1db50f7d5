//! Numerical core for depth estimation on transparent and mirror (ToM)
//! surfaces.
//!
//! Everything here is allocation-only (`alloc`), so the crate builds for
//! `no_std` targets. File formats, subprocess codecs and the command line
//! front end live in the `tomkit` crate.
//!
//! Module map:
//!
//! - [`grid`]: grid, mask and depth-map types plus the nearest-rank percentile.
//! - [`tonemap`]: percentile-anchored gamma tone mapping and its random
//!   augmentation sampler.
//! - [`align`]: least-squares and median/MAD scale-shift estimators.
//! - [`loss`]: gradient-magnitude operator, the trimmed regional guidance
//!   loss, the scale-shift-invariant loss and their analytic gradient.
//! - [`metrics`]: δ accuracies, Abs Rel, RMSE and Log MAE per region.
//! - [`maskgen`]: ToM masks from reflectance maps.
//! - [`fusion`]: multi-exposure fusion by averaging codec latents.
//! - [`synth`]: synthetic mirror-room scenes with analytic ground truth.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod align;
mod error;
pub mod fusion;
pub mod grid;
pub mod loss;
pub mod maskgen;
pub mod metrics;
pub mod synth;
pub mod tonemap;

pub use align::AffineParams;
pub use error::{Error, Result};
pub use grid::{percentile, BinaryMask, DepthMap, Grid, RadianceImage, Sample};
pub use loss::{GradField, LossConfig};
pub use metrics::{AlignMode, LogBase, MetricsReport, RegionMetrics};
