//! ToM masks from reflectance coefficient maps.
//!
//! Channels are averaged per pixel and compared with a threshold. Glass and
//! mirrors carry near-zero diffuse reflectance, hence the `Below` default.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, Grid, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    #[default]
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaskGenConfig {
    pub threshold: f64,
    pub direction: Direction,
    /// Square erosion radius in pixels; 0 disables erosion.
    pub erode_radius: usize,
}

impl Default for MaskGenConfig {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            direction: Direction::Below,
            erode_radius: 0,
        }
    }
}

pub fn reflectance_to_mask<T: Sample>(reflectance: &Grid<T>, cfg: &MaskGenConfig) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::InvalidParameter("threshold must lie in [0, 1]"));
    }
    if let Some(index) = reflectance.data().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample(index));
    }
    let channels = reflectance.channels();
    let bits = reflectance
        .data()
        .chunks_exact(channels)
        .map(|px| {
            let mean = px.iter().map(|v| v.to_f64()).sum::<f64>() / channels as f64;
            match cfg.direction {
                Direction::Below => mean < cfg.threshold,
                Direction::Above => mean > cfg.threshold,
            }
        })
        .collect();
    let mask = BinaryMask::new(reflectance.height(), reflectance.width(), bits)?;
    Ok(if cfg.erode_radius > 0 {
        erode(&mask, cfg.erode_radius)
    } else {
        mask
    })
}

/// Binary erosion with a `(2r+1)²` square. Pixels outside the image do not
/// constrain the result.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let (h, w) = (mask.height(), mask.width());
    // Separable: a horizontal pass then a vertical pass.
    let horizontal = BinaryMask::from_fn(h, w, |r, c| {
        let (lo, hi) = (c.saturating_sub(radius), (c + radius).min(w - 1));
        (lo..=hi).all(|cc| mask.get(r, cc))
    })
    .expect("shape taken from an existing mask");
    BinaryMask::from_fn(h, w, |r, c| {
        let (lo, hi) = (r.saturating_sub(radius), (r + radius).min(h - 1));
        (lo..=hi).all(|rr| horizontal.get(rr, c))
    })
    .expect("shape taken from an existing mask")
}
