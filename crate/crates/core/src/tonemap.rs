//! Percentile-anchored gamma tone mapping.
//!
//! An HDR image is mapped to `α·x^γ` where `α` is chosen so that the
//! p-th percentile intensity lands on a fixed target value. Randomizing `p`
//! simulates different lighting conditions for the same scene.
//!
//! The percentile is taken over all finite channel samples pooled together.
//! Because `x ↦ α·x^γ` is strictly increasing and the percentile is
//! nearest-rank, the p-th percentile of the (unclipped) output equals the
//! target up to rounding.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{nearest_rank, select_rank, Grid, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TonemapParams {
    pub gamma: f64,
    pub target_value: f64,
    /// Anchor percentile in `[0, 100]`.
    pub percentile: f64,
    /// Clamp the output to `[0, 1]`.
    pub clip: bool,
}

impl Default for TonemapParams {
    fn default() -> Self {
        Self {
            gamma: 1.0 / 2.2,
            target_value: 0.8,
            percentile: 90.0,
            clip: true,
        }
    }
}

impl TonemapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be positive and finite"));
        }
        if !(self.target_value > 0.0 && self.target_value.is_finite()) {
            return Err(Error::InvalidParameter("target value must be positive and finite"));
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return Err(Error::InvalidParameter("percentile must lie in [0, 100]"));
        }
        Ok(())
    }

    pub fn with_percentile(self, percentile: f64) -> Self {
        Self { percentile, ..self }
    }
}

/// Range and seed of the random anchor percentile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AugmentSpec {
    pub percentile_low: f64,
    pub percentile_high: f64,
    pub seed: u64,
    /// Draw whole-number percentiles instead of a continuous value.
    pub integer_percentile: bool,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        Self {
            percentile_low: 70.0,
            percentile_high: 99.0,
            seed: 0,
            integer_percentile: false,
        }
    }
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.percentile_low
            && self.percentile_low <= self.percentile_high
            && self.percentile_high <= 100.0;
        if !ordered {
            return Err(Error::InvalidParameter(
                "augment range must satisfy 0 <= low <= high <= 100",
            ));
        }
        if self.integer_percentile && libm::ceil(self.percentile_low) > libm::floor(self.percentile_high) {
            return Err(Error::InvalidParameter("augment range contains no integer percentile"));
        }
        Ok(())
    }

    /// Draws one anchor percentile from `rng`.
    pub fn sample_percentile<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (low, high) = (self.percentile_low, self.percentile_high);
        if self.integer_percentile {
            let (low, high) = (libm::ceil(low) as u32, libm::floor(high) as u32);
            f64::from(rng.random_range(low..=high))
        } else if low == high {
            low
        } else {
            rng.random_range(low..=high)
        }
    }
}

/// Scale `α = target / r_p^γ` where `r_p` is the pooled nearest-rank
/// percentile of the finite samples.
pub fn compute_scale<T: Sample>(image: &Grid<T>, params: &TonemapParams) -> Result<f64> {
    params.validate()?;
    let mut pooled: Vec<f64> = Vec::with_capacity(image.data().len());
    for (index, v) in image.data().iter().enumerate() {
        let v = v.to_f64();
        if !v.is_finite() {
            continue;
        }
        if v < 0.0 {
            return Err(Error::NegativeSample(index));
        }
        pooled.push(v);
    }
    if pooled.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rank = nearest_rank(pooled.len(), params.percentile);
    let anchor = select_rank(&mut pooled, rank);
    if anchor == 0.0 {
        return Err(Error::DegenerateImage);
    }
    Ok(params.target_value / libm::pow(anchor, params.gamma))
}

/// Per-sample `α·x^γ`, optionally clamped to `[0, 1]`. Non-finite samples
/// pass through unchanged.
pub fn apply_tonemap<T: Sample>(image: &Grid<T>, alpha: f64, gamma: f64, clip: bool) -> Result<Grid<T>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter("alpha must be positive and finite"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter("gamma must be positive and finite"));
    }
    if let Some(index) = image.data().iter().position(|v| v.to_f64() < 0.0) {
        return Err(Error::NegativeSample(index));
    }
    Ok(image.map(|v| {
        let x = v.to_f64();
        if !x.is_finite() {
            return v;
        }
        let y = alpha * libm::pow(x, gamma);
        T::from_f64(if clip { y.clamp(0.0, 1.0) } else { y })
    }))
}

/// Tone-maps `image` with the anchor fixed at `params.percentile`.
pub fn tonemap<T: Sample>(image: &Grid<T>, params: &TonemapParams) -> Result<Grid<T>> {
    let alpha = compute_scale(image, params)?;
    apply_tonemap(image, alpha, params.gamma, params.clip)
}

/// Random tone-mapping augmentation: draws the anchor percentile from
/// `spec` with a generator seeded by `spec.seed`, then tone-maps.
///
/// Returns the augmented image and the percentile that was drawn.
pub fn random_augment<T: Sample>(
    image: &Grid<T>,
    spec: &AugmentSpec,
    params: &TonemapParams,
) -> Result<(Grid<T>, f64)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.sample_percentile(&mut rng);
    let out = tonemap(image, &params.with_percentile(p))?;
    Ok((out, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn worked_alpha_for_half_anchor() {
        // 0.8 / 0.5^(1/2.2) = 0.8 · 2^(5/11)
        let img = Grid::filled(2, 2, 1, 0.5f64).unwrap();
        let alpha = compute_scale(&img, &TonemapParams::default()).unwrap();
        assert!((alpha - 1.096_281_3).abs() < 1e-6, "{alpha}");
    }

    #[test]
    fn constant_anchor_image() {
        let img = Grid::filled(3, 3, 3, 0.8f64).unwrap();
        let params = TonemapParams::default().with_percentile(42.0);
        let alpha = compute_scale(&img, &params).unwrap();
        assert_eq!(alpha, 0.8 / libm::pow(0.8, 1.0 / 2.2));
        let c = 2.5f64;
        let img = Grid::filled(2, 3, 3, c).unwrap();
        let out = apply_tonemap(&img, 0.8 / libm::pow(c, params.gamma), params.gamma, false).unwrap();
        for v in out.data() {
            assert!((v - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_image_is_degenerate() {
        let img = Grid::filled(2, 2, 3, 0.0f32).unwrap();
        assert_eq!(compute_scale(&img, &TonemapParams::default()), Err(Error::DegenerateImage));
    }

    #[test]
    fn identity_when_alpha_and_gamma_are_one() {
        let img = Grid::new(1, 4, 1, vec![0.0f64, 0.25, 1.5, 7.0]).unwrap();
        let out = apply_tonemap(&img, 1.0, 1.0, false).unwrap();
        assert_eq!(out.data(), img.data());
        let clipped = apply_tonemap(&img, 1.0, 1.0, true).unwrap();
        assert_eq!(clipped.data(), &[0.0, 0.25, 1.0, 1.0]);
    }

    #[test]
    fn negative_samples_rejected() {
        let img = Grid::new(1, 2, 1, vec![0.5f64, -0.1]).unwrap();
        assert_eq!(apply_tonemap(&img, 1.0, 0.5, true), Err(Error::NegativeSample(1)));
        assert_eq!(compute_scale(&img, &TonemapParams::default()), Err(Error::NegativeSample(1)));
    }

    #[test]
    fn degenerate_range_matches_fixed_pipeline() {
        let img = Grid::from_fn(4, 5, |r, c| (r * 5 + c) as f64 * 0.37 + 0.01).unwrap();
        let spec = AugmentSpec {
            percentile_low: 90.0,
            percentile_high: 90.0,
            seed: 11,
            integer_percentile: false,
        };
        let params = TonemapParams::default();
        let (out, p) = random_augment(&img, &spec, &params).unwrap();
        assert_eq!(p, 90.0);
        assert_eq!(out, tonemap(&img, &params.with_percentile(90.0)).unwrap());
    }

    #[test]
    fn same_seed_same_output() {
        let img = Grid::from_fn(6, 6, |r, c| ((r * 7 + c * 3) % 11) as f32 + 0.5).unwrap();
        let spec = AugmentSpec {
            seed: 99,
            ..AugmentSpec::default()
        };
        let a = random_augment(&img, &spec, &TonemapParams::default()).unwrap();
        let b = random_augment(&img, &spec, &TonemapParams::default()).unwrap();
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn sampled_percentiles_stay_in_range() {
        for integer_percentile in [false, true] {
            let spec = AugmentSpec {
                integer_percentile,
                ..AugmentSpec::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..100 {
                let p = spec.sample_percentile(&mut rng);
                assert!((70.0..=99.0).contains(&p));
                if integer_percentile {
                    assert_eq!(p, libm::floor(p));
                }
            }
        }
    }

    #[test]
    fn invalid_range_rejected() {
        let spec = AugmentSpec {
            percentile_low: 80.0,
            percentile_high: 70.0,
            ..AugmentSpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
