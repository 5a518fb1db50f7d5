//! Regional guidance and scale-shift-invariant losses.
//!
//! The ToM term compares gradient magnitudes of prediction and ground truth
//! inside the ToM mask after robust normalization (median shift, MAD
//! scale), sums the smallest `1 − trim_fraction` share of the absolute
//! residuals and divides by `2·|M|`. The SSI term runs the same pipeline on
//! depth values over the valid region.
//!
//! Gradients use forward differences: `gx(i,j) = D(i,j+1) − D(i,j)` and
//! `gy(i,j) = D(i+1,j) − D(i,j)`, with the difference taken as zero on the
//! last column / row.

use alloc::vec;
use alloc::vec::Vec;

use crate::align::{fit_pairs, median_mad, AffineParams};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, DepthMap, Grid, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossConfig {
    /// Share of the largest residuals dropped, in `[0, 1)`.
    pub trim_fraction: f64,
    /// Minimum usable pixel count for a loss term.
    pub min_mask_pixels: usize,
    /// Floor applied to the MAD scale before dividing.
    pub eps: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            trim_fraction: 0.2,
            min_mask_pixels: 10,
            eps: 1e-6,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(Error::InvalidParameter("trim fraction must lie in [0, 1)"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter("eps must be positive and finite"));
        }
        Ok(())
    }
}

/// Per-pixel gradient magnitude with its validity.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    grid: Grid<f64>,
    validity: BinaryMask,
}

impl GradField {
    pub fn grid(&self) -> &Grid<f64> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.data()
    }

    pub fn validity(&self) -> &BinaryMask {
        &self.validity
    }
}

#[inline]
fn forward_diff(values: &[f64], width: usize, height: usize, index: usize) -> (f64, f64) {
    let (row, col) = (index / width, index % width);
    let here = values[index];
    let gx = if col + 1 < width { values[index + 1] - here } else { 0.0 };
    let gy = if row + 1 < height { values[index + width] - here } else { 0.0 };
    (gx, gy)
}

/// Forward-difference magnitude at `index`, reading through `Sample`.
#[inline]
fn magnitude_at<T: Sample>(values: &[T], width: usize, height: usize, index: usize) -> f64 {
    let (row, col) = (index / width, index % width);
    let here = values[index].to_f64();
    let gx = if col + 1 < width { values[index + 1].to_f64() - here } else { 0.0 };
    let gy = if row + 1 < height { values[index + width].to_f64() - here } else { 0.0 };
    libm::sqrt(gx * gx + gy * gy)
}

/// A gradient sample is valid iff every depth sample it reads is valid.
#[inline]
fn gradient_valid(valid: &[bool], width: usize, height: usize, index: usize) -> bool {
    let (row, col) = (index / width, index % width);
    valid[index] && (col + 1 >= width || valid[index + 1]) && (row + 1 >= height || valid[index + width])
}

pub fn gradient_magnitude<T: Sample>(depth: &DepthMap<T>) -> GradField {
    let (height, width) = (depth.height(), depth.width());
    let values = depth.values();
    let valid = depth.validity().bits();
    let n = height * width;
    let mut mags = Vec::with_capacity(n);
    let mut bits = Vec::with_capacity(n);
    for index in 0..n {
        let ok = gradient_valid(valid, width, height, index);
        bits.push(ok);
        mags.push(if ok { magnitude_at(values, width, height, index) } else { 0.0 });
    }
    GradField {
        grid: Grid::new(height, width, 1, mags).expect("shape taken from a valid depth map"),
        validity: BinaryMask::new(height, width, bits).expect("shape taken from a valid depth map"),
    }
}

/// Number of residuals kept after trimming: `floor((1 − trim)·n)`, at least 1.
pub fn trim_keep_count(n: usize, trim_fraction: f64) -> usize {
    // The small offset absorbs representation error in (1 − trim)·n, e.g.
    // 0.8·15 evaluating just below 12.
    let k = libm::floor((1.0 - trim_fraction) * n as f64 + 1e-9) as usize;
    k.clamp(1, n.max(1))
}

/// Marks the `keep` smallest residuals. Ties at the cut are resolved in
/// favor of the lower index, matching a stable ascending sort.
pub fn trimmed_selection(residuals: &[f64], keep: usize) -> Vec<bool> {
    let n = residuals.len();
    if keep >= n {
        return vec![true; n];
    }
    if keep == 0 {
        return vec![false; n];
    }
    let mut scratch = residuals.to_vec();
    let (_, cut, _) = scratch.select_nth_unstable_by(keep - 1, f64::total_cmp);
    let cut = *cut;
    let below = residuals.iter().filter(|&&r| r < cut).count();
    let mut ties_left = keep - below;
    residuals
        .iter()
        .map(|&r| {
            if r < cut {
                true
            } else if r == cut && ties_left > 0 {
                ties_left -= 1;
                true
            } else {
                false
            }
        })
        .collect()
}

/// Sum of the smallest `floor((1 − trim)·N)` residuals divided by `2·N`,
/// where `N = full_count`.
pub fn trimmed_mae(residuals: &[f64], full_count: usize, trim_fraction: f64) -> Result<f64> {
    if residuals.is_empty() || full_count == 0 {
        return Err(Error::EmptyInput);
    }
    if residuals.len() != full_count {
        return Err(Error::LengthMismatch {
            expected: full_count,
            actual: residuals.len(),
        });
    }
    if !(0.0..1.0).contains(&trim_fraction) {
        return Err(Error::InvalidParameter("trim fraction must lie in [0, 1)"));
    }
    let kept = trimmed_selection(residuals, trim_keep_count(full_count, trim_fraction));
    let sum: f64 = residuals.iter().zip(&kept).filter(|(_, &k)| k).map(|(r, _)| r).sum();
    Ok(sum / (2.0 * full_count as f64))
}

/// One robust-normalized trimmed term with its alignment statistics and
/// trim set frozen.
#[derive(Debug, Clone)]
struct FrozenTerm {
    /// Pixel index of every sample in the region, ascending.
    indices: Vec<usize>,
    pred_shift: f64,
    /// MAD scale after the eps floor.
    pred_scale: f64,
    gt_normalized: Vec<f64>,
    kept: Vec<bool>,
    value: f64,
}

impl FrozenTerm {
    fn build(indices: Vec<usize>, pred: &[f64], gt: &[f64], cfg: &LossConfig) -> Result<Self> {
        let n = indices.len();
        let needed = cfg.min_mask_pixels.max(1);
        if n < needed {
            return Err(Error::InsufficientMask { needed, found: n });
        }
        let p = median_mad(pred)?;
        let g = median_mad(gt)?;
        let pred_scale = p.scale.max(cfg.eps);
        let gt_scale = g.scale.max(cfg.eps);
        let gt_normalized: Vec<f64> = gt.iter().map(|v| (v - g.shift) / gt_scale).collect();
        let residuals: Vec<f64> = pred
            .iter()
            .zip(&gt_normalized)
            .map(|(x, y)| ((x - p.shift) / pred_scale - y).abs())
            .collect();
        let kept = trimmed_selection(&residuals, trim_keep_count(n, cfg.trim_fraction));
        let sum: f64 = residuals.iter().zip(&kept).filter(|(_, &k)| k).map(|(r, _)| r).sum();
        Ok(Self {
            indices,
            pred_shift: p.shift,
            pred_scale,
            gt_normalized,
            kept,
            value: sum / (2.0 * n as f64),
        })
    }

    #[inline]
    fn normalizer(&self) -> f64 {
        2.0 * self.indices.len() as f64
    }

    fn evaluate(&self, sample: impl Fn(usize) -> f64) -> f64 {
        let mut sum = 0.0;
        for ((&index, &y), _) in self
            .indices
            .iter()
            .zip(&self.gt_normalized)
            .zip(&self.kept)
            .filter(|(_, &k)| k)
        {
            sum += ((sample(index) - self.pred_shift) / self.pred_scale - y).abs();
        }
        sum / self.normalizer()
    }

    /// `∂term/∂x` for every sample, zero outside the kept set and at
    /// exactly-zero residuals.
    fn sample_weights<'a>(&'a self, sample: impl Fn(usize) -> f64 + 'a) -> impl Iterator<Item = (usize, f64)> + 'a {
        let factor = 1.0 / (self.pred_scale * self.normalizer());
        self.indices
            .iter()
            .zip(&self.gt_normalized)
            .zip(&self.kept)
            .filter(|(_, &k)| k)
            .map(move |((&index, &y), _)| {
                let r = (sample(index) - self.pred_shift) / self.pred_scale - y;
                let sign = if r > 0.0 {
                    1.0
                } else if r < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (index, sign * factor)
            })
    }
}

fn check_shapes<T: Sample, U: Sample>(pred: &DepthMap<T>, gt: &DepthMap<U>, mask: &BinaryMask) -> Result<()> {
    pred.ensure_same_shape(gt)?;
    mask.ensure_same_shape(pred.height(), pred.width())
}

/// Gathers gradient magnitudes of `pred` and `gt` at pixels where `mask`
/// holds and both gradients are valid.
fn masked_gradients<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    mask: &BinaryMask,
) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let (height, width) = (pred.height(), pred.width());
    let (pv, gv) = (pred.validity().bits(), gt.validity().bits());
    let mut indices = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (index, _) in mask.bits().iter().enumerate().filter(|(_, &m)| m) {
        if gradient_valid(pv, width, height, index) && gradient_valid(gv, width, height, index) {
            indices.push(index);
            x.push(magnitude_at(pred.values(), width, height, index));
            y.push(magnitude_at(gt.values(), width, height, index));
        }
    }
    (indices, x, y)
}

fn masked_values<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    valid: &BinaryMask,
) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let mut indices = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let bits = valid
        .bits()
        .iter()
        .zip(pred.validity().bits())
        .zip(gt.validity().bits());
    for (index, ((&m, &p), &g)) in bits.enumerate() {
        if m && p && g {
            indices.push(index);
            x.push(pred.values()[index].to_f64());
            y.push(gt.values()[index].to_f64());
        }
    }
    (indices, x, y)
}

fn tom_term<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    cfg: &LossConfig,
) -> Result<FrozenTerm> {
    cfg.validate()?;
    check_shapes(pred, gt, tom_mask)?;
    let (indices, x, y) = masked_gradients(pred, gt, tom_mask);
    FrozenTerm::build(indices, &x, &y, cfg)
}

fn ssi_term<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    valid: &BinaryMask,
    cfg: &LossConfig,
) -> Result<FrozenTerm> {
    cfg.validate()?;
    check_shapes(pred, gt, valid)?;
    let (indices, x, y) = masked_values(pred, gt, valid);
    FrozenTerm::build(indices, &x, &y, cfg)
}

/// Trimmed regional guidance loss over the ToM mask.
pub fn tom_loss<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(tom_term(pred, gt, tom_mask, cfg)?.value)
}

/// Least-squares variant: fit `(s, t)` on masked gradient magnitudes and
/// return the mean absolute residual `(1/|M|)·Σ|s·x_i + t − y_i|`.
pub fn lstsq_tom_loss<T: Sample, U: Sample>(pred: &DepthMap<T>, gt: &DepthMap<U>, tom_mask: &BinaryMask) -> Result<f64> {
    check_shapes(pred, gt, tom_mask)?;
    let (_, x, y) = masked_gradients(pred, gt, tom_mask);
    let params = fit_pairs(x.iter().copied().zip(y.iter().copied()))?;
    let sum: f64 = x.iter().zip(&y).map(|(&a, &b)| (params.apply(a) - b).abs()).sum();
    Ok(sum / x.len() as f64)
}

/// Fitted least-squares parameters for [`lstsq_tom_loss`].
pub fn lstsq_tom_params<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
) -> Result<AffineParams> {
    check_shapes(pred, gt, tom_mask)?;
    let (_, x, y) = masked_gradients(pred, gt, tom_mask);
    fit_pairs(x.iter().copied().zip(y.iter().copied()))
}

/// Scale-shift-invariant loss on depth values over `valid ∧` both validity
/// masks.
pub fn ssi_loss<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    valid: &BinaryMask,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(ssi_term(pred, gt, valid, cfg)?.value)
}

/// Both loss terms and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub tom: f64,
    pub ssi: f64,
    pub total: f64,
    /// Usable ToM pixels, reported even when the ToM term fell back to 0.
    pub tom_pixels: usize,
    pub ssi_pixels: usize,
}

/// `tom_loss + ssi_loss`. A ToM mask below `min_mask_pixels` contributes 0.
pub fn total_loss<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    valid: &BinaryMask,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(loss_breakdown(pred, gt, tom_mask, valid, cfg)?.total)
}

pub fn loss_breakdown<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    valid: &BinaryMask,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let frozen = FrozenLoss::at(pred, gt, tom_mask, valid, cfg)?;
    Ok(frozen.breakdown())
}

/// The total loss linearized at a base prediction: alignment statistics
/// `(t, s)` of both fields and the trim sets are held constant.
///
/// [`FrozenLoss::gradient`] is the analytic gradient of
/// [`FrozenLoss::evaluate`] at the base prediction.
#[derive(Debug, Clone)]
pub struct FrozenLoss {
    height: usize,
    width: usize,
    base: Vec<f64>,
    tom: Option<FrozenTerm>,
    tom_pixels: usize,
    ssi: FrozenTerm,
}

impl FrozenLoss {
    pub fn at<T: Sample, U: Sample>(
        pred: &DepthMap<T>,
        gt: &DepthMap<U>,
        tom_mask: &BinaryMask,
        valid: &BinaryMask,
        cfg: &LossConfig,
    ) -> Result<Self> {
        let ssi = ssi_term(pred, gt, valid, cfg)?;
        let (tom, tom_pixels) = match tom_term(pred, gt, tom_mask, cfg) {
            Ok(term) => {
                let n = term.indices.len();
                (Some(term), n)
            }
            Err(Error::InsufficientMask { found, .. }) => (None, found),
            Err(e) => return Err(e),
        };
        Ok(Self {
            height: pred.height(),
            width: pred.width(),
            base: pred.values().iter().map(|v| v.to_f64()).collect(),
            tom,
            tom_pixels,
            ssi,
        })
    }

    pub fn breakdown(&self) -> LossBreakdown {
        let tom = self.tom.as_ref().map_or(0.0, |t| t.value);
        LossBreakdown {
            tom,
            ssi: self.ssi.value,
            total: tom + self.ssi.value,
            tom_pixels: self.tom_pixels,
            ssi_pixels: self.ssi.indices.len(),
        }
    }

    /// Loss at the base prediction.
    pub fn value(&self) -> f64 {
        self.breakdown().total
    }

    /// Frozen-constant loss at another prediction of the same shape.
    pub fn evaluate(&self, pred: &[f64]) -> Result<f64> {
        if pred.len() != self.base.len() {
            return Err(Error::LengthMismatch {
                expected: self.base.len(),
                actual: pred.len(),
            });
        }
        let (w, h) = (self.width, self.height);
        let tom = self.tom.as_ref().map_or(0.0, |t| {
            t.evaluate(|i| {
                let (gx, gy) = forward_diff(pred, w, h, i);
                libm::sqrt(gx * gx + gy * gy)
            })
        });
        Ok(tom + self.ssi.evaluate(|i| pred[i]))
    }

    /// Analytic gradient of the frozen loss with respect to every
    /// prediction sample, at the base prediction.
    pub fn gradient(&self) -> Grid<f64> {
        let (w, h) = (self.width, self.height);
        let base = &self.base;
        let mut grad = vec![0.0; base.len()];
        for (index, weight) in self.ssi.sample_weights(|i| base[i]) {
            grad[index] += weight;
        }
        if let Some(tom) = &self.tom {
            let magnitude = |i| {
                let (gx, gy) = forward_diff(base, w, h, i);
                libm::sqrt(gx * gx + gy * gy)
            };
            for (index, weight) in tom.sample_weights(magnitude) {
                let (gx, gy) = forward_diff(base, w, h, index);
                let m = libm::sqrt(gx * gx + gy * gy);
                if weight == 0.0 || m == 0.0 {
                    continue;
                }
                let (dx, dy) = (weight * gx / m, weight * gy / m);
                // gx and gy are zero on the padded column / row, so the
                // neighbor updates vanish there.
                grad[index] -= dx + dy;
                if index % w + 1 < w {
                    grad[index + 1] += dx;
                }
                if index / w + 1 < h {
                    grad[index + w] += dy;
                }
            }
        }
        Grid::new(h, w, 1, grad).expect("shape taken from the base prediction")
    }
}

/// Gradient of [`total_loss`] with respect to `pred` under frozen-constant
/// semantics (see [`FrozenLoss`]).
pub fn loss_gradient<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    valid: &BinaryMask,
    cfg: &LossConfig,
) -> Result<Grid<f64>> {
    Ok(FrozenLoss::at(pred, gt, tom_mask, valid, cfg)?.gradient())
}
