//! Synthetic mirror-room scenes.
//!
//! A slanted wall holds a flush mirror. Ground truth is the wall plane
//! everywhere. The contaminated map sees the reflected room through the
//! mirror: deeper by `2·virtual_offset`, with a fixed ripple standing in for
//! reflected structure and optional seeded Gaussian noise.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, DepthMap, Grid};

/// Reflectance written inside the mirror.
pub const MIRROR_REFLECTANCE: f32 = 0.02;
/// Reflectance written on the wall.
pub const WALL_REFLECTANCE: f32 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    #[inline]
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..self.top + self.height).contains(&row) && (self.left..self.left + self.width).contains(&col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    pub wall_depth: f64,
    /// Depth added per column.
    pub wall_slant: f64,
    pub mirror_rect: Rect,
    /// Extra depth of the reflected content behind the mirror plane.
    pub virtual_offset: f64,
    pub noise_sigma: f64,
    /// Adds the fixed ripple of amplitude `virtual_offset / 10` inside the
    /// mirror.
    pub ripple: bool,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            height: 120,
            width: 160,
            wall_depth: 3.0,
            wall_slant: 0.002,
            mirror_rect: Rect {
                top: 30,
                left: 40,
                height: 60,
                width: 80,
            },
            virtual_offset: 1.0,
            noise_sigma: 0.0,
            ripple: true,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::EmptyDimensions {
                height: self.height,
                width: self.width,
            });
        }
        let r = &self.mirror_rect;
        if r.height == 0 || r.width == 0 || r.top + r.height > self.height || r.left + r.width > self.width {
            return Err(Error::InvalidParameter("mirror rectangle must be non-empty and inside the image"));
        }
        if !(self.wall_depth > 0.0 && self.wall_depth.is_finite()) {
            return Err(Error::InvalidParameter("wall depth must be positive"));
        }
        if !self.wall_slant.is_finite() {
            return Err(Error::InvalidParameter("wall slant must be finite"));
        }
        if !(self.virtual_offset >= 0.0 && self.virtual_offset.is_finite()) {
            return Err(Error::InvalidParameter("virtual offset must be non-negative"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter("noise sigma must be non-negative"));
        }
        Ok(())
    }

    /// Wall depth at column `col`.
    #[inline]
    pub fn wall_at(&self, col: usize) -> f64 {
        self.wall_depth + self.wall_slant * col as f64
    }

    /// Unit-amplitude ripple pattern at a mirror-local coordinate.
    #[inline]
    pub fn ripple_pattern(local_row: usize, local_col: usize) -> f64 {
        let (r, c) = (local_row as f64, local_col as f64);
        0.5 * (libm::sin(2.0 * PI * c / 9.0) + libm::cos(2.0 * PI * r / 7.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub gt_depth: DepthMap<f32>,
    pub contaminated_depth: DepthMap<f32>,
    pub tom_mask: BinaryMask,
    /// Three-channel reflectance map.
    pub reflectance: Grid<f32>,
}

pub fn make_mirror_scene(cfg: &SceneConfig, seed: u64) -> Result<Scene> {
    cfg.validate()?;
    let rect = cfg.mirror_rect;
    let gt_depth = DepthMap::from_fn(cfg.height, cfg.width, |_, c| cfg.wall_at(c) as f32)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if cfg.noise_sigma > 0.0 {
        Some(Normal::new(0.0, cfg.noise_sigma).map_err(|_| Error::InvalidParameter("noise sigma"))?)
    } else {
        None
    };
    let amplitude = if cfg.ripple { cfg.virtual_offset / 10.0 } else { 0.0 };
    let mut contaminated = Vec::with_capacity(cfg.height * cfg.width);
    for row in 0..cfg.height {
        for col in 0..cfg.width {
            let wall = cfg.wall_at(col);
            let value = if rect.contains(row, col) {
                let mut d = wall + 2.0 * cfg.virtual_offset;
                if amplitude != 0.0 {
                    d += amplitude * SceneConfig::ripple_pattern(row - rect.top, col - rect.left);
                }
                if let Some(dist) = &noise {
                    d += dist.sample(&mut rng);
                }
                d
            } else {
                wall
            };
            contaminated.push(value as f32);
        }
    }
    let contaminated_depth = DepthMap::from_grid(Grid::new(cfg.height, cfg.width, 1, contaminated)?)?;

    let tom_mask = BinaryMask::from_fn(cfg.height, cfg.width, |r, c| rect.contains(r, c))?;
    let reflectance_data = tom_mask
        .bits()
        .iter()
        .flat_map(|&m| [if m { MIRROR_REFLECTANCE } else { WALL_REFLECTANCE }; 3])
        .collect();
    let reflectance = Grid::new(cfg.height, cfg.width, 3, reflectance_data)?;

    Ok(Scene {
        gt_depth,
        contaminated_depth,
        tom_mask,
        reflectance,
    })
}
