//! Grid containers shared by every other module.
//!
//! Samples are stored row-major with channels interleaved. Grids are
//! immutable once built; transformations produce new grids.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Scalar sample type stored in a [`Grid`].
///
/// Arithmetic is always carried out in `f64`; the sample type only decides
/// the storage precision.
pub trait Sample: Copy + Default + PartialOrd + fmt::Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(value: f64) -> Self;

    #[inline]
    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
}

impl Sample for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn from_f64(value: f64) -> Self {
        value as f32
    }
}

impl Sample for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64(value: f64) -> Self {
        value
    }
}

/// A 2-D grid of samples with 1 or 3 interleaved channels.
#[derive(Clone, PartialEq)]
pub struct Grid<T = f32> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

/// Per-pixel RGB (or single-channel) radiance, linear or tone-mapped.
pub type RadianceImage<T = f32> = Grid<T>;

impl<T: Sample> Grid<T> {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        check_dims(height, width)?;
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds a single-channel grid from `f(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        check_dims(height, width)?;
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(height, width, 1, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels (not samples).
    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> T {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn same_shape<U: Sample>(&self, other: &Grid<U>) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// Applies `f` to every sample, keeping the shape.
    pub fn map<U: Sample>(&self, f: impl FnMut(T) -> U) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Converts the storage type through `f64`.
    pub fn cast<U: Sample>(&self) -> Grid<U> {
        self.map(|v| U::from_f64(v.to_f64()))
    }
}

impl<T: Sample> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

/// Row-major boolean mask.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                actual: bits.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(height, width)?;
        let mut bits = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ensure_same_shape(&self, height: usize, width: usize) -> Result<()> {
        if self.height == height && self.width == width {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left_height: self.height,
                left_width: self.width,
                right_height: height,
                right_width: width,
            })
        }
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        other.ensure_same_shape(self.height, self.width)?;
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("height", &self.height)
            .field("width", &self.width)
            .field("count", &self.count())
            .finish()
    }
}

/// Single-channel depth grid with a validity mask.
///
/// Every sample flagged valid is finite. Invalid samples may hold anything.
#[derive(Clone, PartialEq)]
pub struct DepthMap<T = f32> {
    grid: Grid<T>,
    validity: BinaryMask,
}

impl<T: Sample> DepthMap<T> {
    /// Wraps a single-channel grid; non-finite samples become invalid.
    pub fn from_grid(grid: Grid<T>) -> Result<Self> {
        if grid.channels != 1 {
            return Err(Error::UnsupportedChannels(grid.channels));
        }
        let bits = grid.data.iter().map(|v| v.is_finite()).collect();
        let validity = BinaryMask::new(grid.height, grid.width, bits)?;
        Ok(Self { grid, validity })
    }

    /// Wraps a grid with an explicit validity mask. A valid sample that is
    /// not finite is rejected.
    pub fn with_validity(grid: Grid<T>, validity: BinaryMask) -> Result<Self> {
        if grid.channels != 1 {
            return Err(Error::UnsupportedChannels(grid.channels));
        }
        validity.ensure_same_shape(grid.height, grid.width)?;
        if let Some(index) = grid
            .data
            .iter()
            .zip(validity.bits())
            .position(|(v, &ok)| ok && !v.is_finite())
        {
            return Err(Error::NonFiniteSample(index));
        }
        Ok(Self { grid, validity })
    }

    pub fn from_fn(height: usize, width: usize, f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        Self::from_grid(Grid::from_fn(height, width, f)?)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.grid.data
    }

    #[inline]
    pub fn validity(&self) -> &BinaryMask {
        &self.validity
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.grid.data[row * self.grid.width + col]
    }

    /// Restricts validity to `mask`.
    pub fn restrict(&self, mask: &BinaryMask) -> Result<Self> {
        Ok(Self {
            grid: self.grid.clone(),
            validity: self.validity.and(mask)?,
        })
    }

    /// Returns `scale * d + shift` for every sample, validity unchanged.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        Self {
            grid: self.grid.map(|v| T::from_f64(scale * v.to_f64() + shift)),
            validity: self.validity.clone(),
        }
    }

    pub fn ensure_same_shape<U: Sample>(&self, other: &DepthMap<U>) -> Result<()> {
        self.validity.ensure_same_shape(other.height(), other.width())
    }

    pub fn into_parts(self) -> (Grid<T>, BinaryMask) {
        (self.grid, self.validity)
    }
}

impl<T: Sample> fmt::Debug for DepthMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DepthMap")
            .field("height", &self.height())
            .field("width", &self.width())
            .field("valid", &self.validity.count())
            .finish()
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        Err(Error::EmptyDimensions { height, width })
    } else {
        Ok(())
    }
}

/// 1-based nearest rank for percent `p` over `n` samples.
pub(crate) fn nearest_rank(n: usize, p: f64) -> usize {
    let rank = libm::ceil(p * n as f64 / 100.0);
    if rank < 1.0 {
        1
    } else if rank >= n as f64 {
        n
    } else {
        rank as usize
    }
}

/// Nearest-rank percentile: the sample at 1-based rank `ceil(p·N/100)`,
/// clamped to `[1, N]`, in ascending order.
pub fn percentile<T: Sample>(values: &[T], p: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidParameter("percentile must lie in [0, 100]"));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample(index));
    }
    let mut scratch = values.to_vec();
    Ok(select_rank(&mut scratch, nearest_rank(values.len(), p)))
}

/// Reorders `values` and returns the element with 1-based ascending `rank`.
pub(crate) fn select_rank<T: Sample>(values: &mut [T], rank: usize) -> T {
    let (_, nth, _) = values.select_nth_unstable_by(rank - 1, |a, b| a.to_f64().total_cmp(&b.to_f64()));
    *nth
}
