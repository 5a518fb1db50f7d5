//! Multi-exposure fusion by averaging codec latents.
//!
//! Each exposure is encoded, the latents are averaged elementwise and the
//! mean is decoded back to an image. The codec is pluggable; the identity
//! codec turns fusion into a pixelwise mean.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Dense latent tensor stored as `(channels, height, width)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Latent {
    dims: [usize; 3],
    data: Vec<f32>,
}

impl Latent {
    pub fn new(dims: [usize; 3], data: Vec<f32>) -> Result<Self> {
        let expected = dims.iter().product::<usize>();
        if expected == 0 {
            return Err(Error::EmptyInput);
        }
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    /// `[channels, height, width]`.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

pub trait Codec {
    fn encode(&self, image: &Grid<f32>) -> Result<Latent>;
    fn decode(&self, latent: &Latent) -> Result<Grid<f32>>;
}

impl<C: Codec + ?Sized> Codec for &C {
    fn encode(&self, image: &Grid<f32>) -> Result<Latent> {
        (**self).encode(image)
    }

    fn decode(&self, latent: &Latent) -> Result<Grid<f32>> {
        (**self).decode(latent)
    }
}

/// Lossless codec: the latent is the image in planar `C×H×W` layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityCodec;

impl Codec for IdentityCodec {
    fn encode(&self, image: &Grid<f32>) -> Result<Latent> {
        let (h, w, c) = (image.height(), image.width(), image.channels());
        let src = image.data();
        let mut data = Vec::with_capacity(src.len());
        for ch in 0..c {
            data.extend((0..h * w).map(|px| src[px * c + ch]));
        }
        Latent::new([c, h, w], data)
    }

    fn decode(&self, latent: &Latent) -> Result<Grid<f32>> {
        let [c, h, w] = latent.dims;
        let plane = h * w;
        let mut data = vec![0.0f32; latent.data.len()];
        for (px, chunk) in data.chunks_exact_mut(c).enumerate() {
            for (ch, slot) in chunk.iter_mut().enumerate() {
                *slot = latent.data[ch * plane + px];
            }
        }
        Grid::new(h, w, c, data)
    }
}

/// Elementwise arithmetic mean.
///
/// Each element's samples are summed in `f64` in ascending order of value
/// and rounded once to `f32`, so the result does not depend on the order of
/// `latents` down to the last bit.
pub fn mean_latents(latents: &[Latent]) -> Result<Latent> {
    let first = latents.first().ok_or(Error::EmptyInput)?;
    if let Some(bad) = latents.iter().find(|l| l.dims != first.dims) {
        return Err(Error::Codec(alloc::format!(
            "latent dimensions differ: {:?} vs {:?}",
            first.dims,
            bad.dims
        )));
    }
    let k = latents.len() as f64;
    let mut column: Vec<f32> = Vec::with_capacity(latents.len());
    let data = (0..first.data.len())
        .map(|i| {
            column.clear();
            column.extend(latents.iter().map(|l| l.data[i]));
            column.sort_unstable_by(f32::total_cmp);
            let sum: f64 = column.iter().map(|&v| f64::from(v)).sum();
            (sum / k) as f32
        })
        .collect();
    Latent::new(first.dims, data)
}

/// Encodes every image, averages the latents and decodes the mean.
pub fn fuse_images<C: Codec + ?Sized>(images: &[Grid<f32>], codec: &C) -> Result<Grid<f32>> {
    let first = images.first().ok_or(Error::EmptyInput)?;
    if let Some(bad) = images.iter().find(|img| !img.same_shape(first)) {
        return Err(Error::ShapeMismatch {
            left_height: first.height(),
            left_width: first.width(),
            right_height: bad.height(),
            right_width: bad.width(),
        });
    }
    let latents = images.iter().map(|img| codec.encode(img)).collect::<Result<Vec<_>>>()?;
    codec.decode(&mean_latents(&latents)?)
}
