//! PNG masks, 16-bit depth with a JSON sidecar, and 8-bit previews.

use std::path::{Path, PathBuf};

use image::{ColorType, ExtendedColorType, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};
use tomkit_core::{BinaryMask, DepthMap, Grid};

use crate::error::{Error, FormatError, Result};

fn open(path: &Path) -> Result<image::DynamicImage> {
    ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::Image {
            path: path.to_owned(),
            source: e,
        })
}

fn save(path: &Path, bytes: &[u8], width: usize, height: usize, color: ExtendedColorType) -> Result<()> {
    let (w, h) = dims_u32(path, width, height)?;
    image::save_buffer_with_format(path, bytes, w, h, color, ImageFormat::Png).map_err(|e| Error::Image {
        path: path.to_owned(),
        source: e,
    })
}

fn dims_u32(path: &Path, width: usize, height: usize) -> Result<(u32, u32)> {
    match (u32::try_from(width), u32::try_from(height)) {
        (Ok(w), Ok(h)) => Ok((w, h)),
        _ => Err(Error::format(path, FormatError::Unsupported("image too large for PNG".into()))),
    }
}

/// Reads an 8-bit greyscale PNG; values above 127 are `true`.
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<BinaryMask> {
    let path = path.as_ref();
    let img = open(path)?;
    if img.color() != ColorType::L8 {
        return Err(Error::format(
            path,
            FormatError::Unsupported(format!("mask must be 8-bit greyscale, found {:?}", img.color())),
        ));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let bits = img.into_luma8().into_raw().into_iter().map(|v| v > 127).collect();
    BinaryMask::new(h, w, bits).map_err(|e| Error::format(path, e))
}

/// Writes a mask as 8-bit greyscale, 255 for `true` and 0 for `false`.
pub fn write_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    save(path.as_ref(), &bytes, mask.width(), mask.height(), ExtendedColorType::L8)
}

/// Sidecar describing how 16-bit depth codes map to depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthPngMeta {
    /// Depth per code unit.
    pub scale: f64,
    /// Code marking invalid pixels.
    pub invalid_value: u16,
}

/// `<dir>/<stem>.meta.json` next to `<dir>/<stem>.png`.
pub fn sidecar_path(png: &Path) -> PathBuf {
    let stem = png.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    png.with_file_name(format!("{stem}.meta.json"))
}

pub fn read_depth_png16(path: impl AsRef<Path>) -> Result<DepthMap<f32>> {
    let path = path.as_ref();
    let meta_path = sidecar_path(path);
    let meta_bytes = std::fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: DepthPngMeta = serde_json::from_slice(&meta_bytes).map_err(|e| Error::Json {
        path: meta_path.clone(),
        source: e,
    })?;
    if !(meta.scale > 0.0 && meta.scale.is_finite()) {
        return Err(Error::format(&meta_path, FormatError::Header("scale must be positive".into())));
    }
    let img = open(path)?;
    if img.color() != ColorType::L16 {
        return Err(Error::format(
            path,
            FormatError::Unsupported(format!("depth PNG must be 16-bit greyscale, found {:?}", img.color())),
        ));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let codes = img.into_luma16().into_raw();
    let values = codes.iter().map(|&c| (f64::from(c) * meta.scale) as f32).collect();
    let validity = codes.iter().map(|&c| c != meta.invalid_value).collect();
    let grid = Grid::new(h, w, 1, values).map_err(|e| Error::format(path, e))?;
    let validity = BinaryMask::new(h, w, validity).map_err(|e| Error::format(path, e))?;
    DepthMap::with_validity(grid, validity).map_err(|e| Error::format(path, e))
}

/// Writes depth as `round(d / scale)` 16-bit codes plus the sidecar. Invalid
/// samples get code 0; valid samples must encode to `1..=65535`.
pub fn write_depth_png16(depth: &DepthMap<f32>, scale: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::format(path, FormatError::Unsupported("scale must be positive".into())));
    }
    let mut codes = Vec::with_capacity(depth.values().len() * 2);
    for (index, (&v, &ok)) in depth.values().iter().zip(depth.validity().bits()).enumerate() {
        let code = if ok {
            let c = (f64::from(v) / scale).round();
            if !(1.0..=65535.0).contains(&c) {
                return Err(Error::format(
                    path,
                    FormatError::Unsupported(format!("sample {index} does not fit a 16-bit code at scale {scale}")),
                ));
            }
            c as u16
        } else {
            0
        };
        codes.extend_from_slice(&code.to_ne_bytes());
    }
    save(path, &codes, depth.width(), depth.height(), ExtendedColorType::L16)?;
    let meta = DepthPngMeta {
        scale,
        invalid_value: 0,
    };
    let meta_path = sidecar_path(path);
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Json {
        path: meta_path.clone(),
        source: e,
    })?;
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
}

/// Quantizes a `[0, 1]` image to 8 bits (grey or RGB) and writes a PNG.
pub fn write_ldr_png(image: &Grid<f32>, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|&v| {
            let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
            (v * 255.0).round() as u8
        })
        .collect();
    let color = if image.channels() == 3 {
        ExtendedColorType::Rgb8
    } else {
        ExtendedColorType::L8
    };
    save(path.as_ref(), &bytes, image.width(), image.height(), color)
}
