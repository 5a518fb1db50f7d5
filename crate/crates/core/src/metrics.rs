//! Masked-region depth evaluation.
//!
//! Six metrics per region: δ accuracies at 1.05 / 1.15 / 1.25 (fraction of
//! pixels whose max-ratio is strictly below the threshold), Abs Rel, RMSE and
//! Log MAE. Regions are All (valid ground truth), ToM and Other. Pixels with
//! non-positive ground truth never count. Prediction samples that are
//! invalid, non-finite or below `1e-6` are clamped to `1e-6` so a failure is
//! penalized rather than dropped.

use crate::align::{fit_pairs, AffineParams};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, DepthMap, Sample};

/// Smallest prediction value used in ratio and log metrics.
pub const MIN_PREDICTION: f64 = 1e-6;

pub const DELTA_THRESHOLDS: [f64; 3] = [1.05, 1.15, 1.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LogBase {
    #[default]
    Ten,
    #[cfg_attr(feature = "serde", serde(rename = "e"))]
    Natural,
}

impl LogBase {
    #[inline]
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Ten => libm::log10(x),
            LogBase::Natural => libm::log(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AlignMode {
    #[default]
    None,
    /// One least-squares `(s, t)` fitted on the All region in depth space.
    Lstsq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionMetrics {
    pub delta_105: f64,
    pub delta_115: f64,
    pub delta_125: f64,
    pub abs_rel: f64,
    pub rmse: f64,
    pub log_mae: f64,
    #[cfg_attr(feature = "serde", serde(rename = "count"))]
    pub pixel_count: usize,
}

/// The All / ToM / Other partition of the valid ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    pub all: BinaryMask,
    pub tom: BinaryMask,
    pub other: BinaryMask,
}

pub fn region_partition(gt_valid: &BinaryMask, tom_mask: &BinaryMask) -> Result<Regions> {
    Ok(Regions {
        all: gt_valid.clone(),
        tom: gt_valid.and(tom_mask)?,
        other: gt_valid.and_not(tom_mask)?,
    })
}

/// Per-pixel contributions, computed once and added to every region the
/// pixel belongs to.
#[derive(Debug, Clone, Copy)]
struct PixelTerms {
    within: [bool; 3],
    abs_rel: f64,
    squared: f64,
    log_abs: f64,
}

impl PixelTerms {
    #[inline]
    fn new(pred: f64, gt: f64, log_base: LogBase) -> Self {
        let ratio = if pred > gt { pred / gt } else { gt / pred };
        let diff = pred - gt;
        Self {
            within: DELTA_THRESHOLDS.map(|tau| ratio < tau),
            abs_rel: diff.abs() / gt,
            squared: diff * diff,
            // |log p − log g| = log(max / min), with one logarithm instead of two.
            log_abs: log_base.log(ratio),
        }
    }
}

/// Running sums for one region.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    count: usize,
    within: [usize; 3],
    abs_rel: f64,
    squared: f64,
    log_abs: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, terms: &PixelTerms) {
        for (slot, hit) in self.within.iter_mut().zip(terms.within) {
            *slot += usize::from(hit);
        }
        self.count += 1;
        self.abs_rel += terms.abs_rel;
        self.squared += terms.squared;
        self.log_abs += terms.log_abs;
    }

    fn finish(&self) -> Option<RegionMetrics> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        Some(RegionMetrics {
            delta_105: self.within[0] as f64 / n,
            delta_115: self.within[1] as f64 / n,
            delta_125: self.within[2] as f64 / n,
            abs_rel: self.abs_rel / n,
            rmse: libm::sqrt(self.squared / n),
            log_mae: self.log_abs / n,
            pixel_count: self.count,
        })
    }
}

#[inline]
fn clamp_prediction(value: f64, valid: bool) -> f64 {
    if valid && value.is_finite() && value >= MIN_PREDICTION {
        value
    } else {
        MIN_PREDICTION
    }
}

/// Metrics over `region` pixels with valid, positive ground truth.
pub fn compute_metrics<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    region: &BinaryMask,
) -> Result<RegionMetrics> {
    compute_metrics_with(pred, gt, region, LogBase::Ten)
}

pub fn compute_metrics_with<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    region: &BinaryMask,
    log_base: LogBase,
) -> Result<RegionMetrics> {
    pred.ensure_same_shape(gt)?;
    region.ensure_same_shape(gt.height(), gt.width())?;
    let mut acc = Accumulator::default();
    let pixels = region
        .bits()
        .iter()
        .zip(gt.validity().bits())
        .zip(gt.values())
        .zip(pred.values().iter().zip(pred.validity().bits()));
    for (((&r, &gv), &g), (&p, &pv)) in pixels {
        let g = g.to_f64();
        if r && gv && g > 0.0 {
            acc.add(&PixelTerms::new(clamp_prediction(p.to_f64(), pv), g, log_base));
        }
    }
    acc.finish().ok_or(Error::EmptyRegion)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalOptions {
    pub align: AlignMode,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub align: AlignMode,
    /// Fitted parameters; `None` when no alignment was applied.
    pub params: Option<AffineParams>,
    pub all: RegionMetrics,
    /// `None` when the region holds no usable pixel.
    pub tom: Option<RegionMetrics>,
    pub other: Option<RegionMetrics>,
}

pub fn evaluate<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    align: AlignMode,
) -> Result<MetricsReport> {
    evaluate_with(
        pred,
        gt,
        tom_mask,
        EvalOptions {
            align,
            log_base: LogBase::Ten,
        },
    )
}

/// Evaluates All / ToM / Other in a single pass. With
/// [`AlignMode::Lstsq`], one `(s, t)` is fitted on the All region and
/// reused for the sub-regions.
pub fn evaluate_with<T: Sample, U: Sample>(
    pred: &DepthMap<T>,
    gt: &DepthMap<U>,
    tom_mask: &BinaryMask,
    options: EvalOptions,
) -> Result<MetricsReport> {
    pred.ensure_same_shape(gt)?;
    tom_mask.ensure_same_shape(gt.height(), gt.width())?;

    let gt_values = gt.values();
    let gt_valid = gt.validity().bits();
    let pred_values = pred.values();
    let pred_valid = pred.validity().bits();
    let usable = |i: usize| gt_valid[i] && gt_values[i].to_f64() > 0.0;

    let params = match options.align {
        AlignMode::None => None,
        AlignMode::Lstsq => {
            let pairs = (0..gt_values.len())
                .filter(|&i| usable(i) && pred_valid[i])
                .map(|i| (pred_values[i].to_f64(), gt_values[i].to_f64()));
            Some(fit_pairs(pairs)?)
        }
    };

    let mut all = Accumulator::default();
    let mut tom = Accumulator::default();
    let mut other = Accumulator::default();
    for (i, &in_tom) in tom_mask.bits().iter().enumerate() {
        if !usable(i) {
            continue;
        }
        let g = gt_values[i].to_f64();
        let raw = pred_values[i].to_f64();
        let p = match params {
            Some(fit) if pred_valid[i] => clamp_prediction(fit.apply(raw), true),
            _ => clamp_prediction(raw, pred_valid[i]),
        };
        let terms = PixelTerms::new(p, g, options.log_base);
        all.add(&terms);
        if in_tom {
            tom.add(&terms);
        } else {
            other.add(&terms);
        }
    }

    Ok(MetricsReport {
        align: options.align,
        params,
        all: all.finish().ok_or(Error::EmptyRegion)?,
        tom: tom.finish(),
        other: other.finish(),
    })
}
