//! File formats, external codecs and the `tomkit` command line front end.
//!
//! The numerical work lives in `tomkit-core`; this crate reads and writes
//! PFM, PNG and `.lat` files, drives external codec processes and renders
//! JSON/CSV reports.

#![forbid(unsafe_code)]

pub mod cli;
pub mod codec;
mod error;
pub mod lat;
pub mod pfm;
pub mod png;
pub mod report;

use std::path::Path;

pub use error::{Error, FormatError, Result};
pub use tomkit_core as core;
use tomkit_core::DepthMap;

/// Reads a depth map, choosing the decoder by extension: `.png` is a 16-bit
/// PNG with a JSON sidecar, anything else is PFM.
pub fn read_depth(path: impl AsRef<Path>) -> Result<DepthMap<f32>> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("png") => png::read_depth_png16(path),
        _ => pfm::read_depth_pfm(path),
    }
}
