//! Scale-shift estimators.
//!
//! Two estimators are provided: the closed-form least-squares fit of
//! `y ≈ s·x + t`, and the robust median / mean-absolute-deviation pair used
//! to bring a field to zero translation and unit scale.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineParams {
    pub scale: f64,
    pub shift: f64,
}

impl AffineParams {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        shift: 0.0,
    };

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }
}

/// Least-squares `(s, t)` minimizing `Σ (s·x_i + t − y_i)²` over masked
/// samples.
pub fn lstsq_scale_shift(x: &[f64], y: &[f64], mask: &[bool]) -> Result<AffineParams> {
    check_len(x.len(), y.len())?;
    check_len(x.len(), mask.len())?;
    fit_pairs(
        x.iter()
            .zip(y)
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|((&a, &b), _)| (a, b)),
    )
}

/// Least-squares fit over `(x, y)` pairs. The iterator is walked twice
/// (means, then centered moments).
pub fn fit_pairs<I>(pairs: I) -> Result<AffineParams>
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let mut n = 0usize;
    let (mut sum_x, mut sum_y) = (0.0, 0.0);
    for (x, y) in pairs.clone() {
        n += 1;
        sum_x += x;
        sum_y += y;
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: n });
    }
    let mean_x = sum_x / n as f64;
    let mean_y = sum_y / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in pairs {
        let dx = x - mean_x;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("least-squares source field has zero variance"));
    }
    let scale = sxy / sxx;
    Ok(AffineParams {
        scale,
        shift: mean_y - scale * mean_x,
    })
}

/// Median shift and mean-absolute-deviation scale over masked samples.
///
/// `shift` is the median (mean of the two central order statistics for an
/// even count); `scale` is `(1/|M|)·Σ|x_i − shift|`.
pub fn robust_center_scale(x: &[f64], mask: &[bool]) -> Result<AffineParams> {
    check_len(x.len(), mask.len())?;
    let gathered: Vec<f64> = x.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect();
    median_mad(&gathered)
}

/// [`robust_center_scale`] over an already-gathered sample list.
pub fn median_mad(values: &[f64]) -> Result<AffineParams> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut scratch = values.to_vec();
    let shift = median_in_place(&mut scratch);
    let deviation: f64 = values.iter().map(|v| (v - shift).abs()).sum();
    Ok(AffineParams {
        scale: deviation / values.len() as f64,
        shift,
    })
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = lower.iter().copied().max_by(f64::total_cmp).unwrap_or(upper);
        (lower + upper) / 2.0
    }
}

/// Robust normalization `(x − t) / max(s, eps)` on masked samples; unmasked
/// samples are returned unchanged.
pub fn normalize_field(x: &[f64], mask: &[bool], eps: f64) -> Result<Vec<f64>> {
    let params = robust_center_scale(x, mask)?;
    let denom = params.scale.max(eps);
    Ok(x.iter()
        .zip(mask)
        .map(|(&v, &m)| if m { (v - params.shift) / denom } else { v })
        .collect())
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: a,
            actual: b,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn all(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    #[test]
    fn lstsq_identity_and_exact_affine() {
        let x = [0.5, 1.5, -2.0, 4.0];
        let p = lstsq_scale_shift(&x, &x, &all(4)).unwrap();
        assert!((p.scale - 1.0).abs() < 1e-15 && p.shift.abs() < 1e-15);

        let p = lstsq_scale_shift(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0], &all(3)).unwrap();
        assert_eq!(p, AffineParams { scale: 2.0, shift: 1.0 });
    }

    #[test]
    fn lstsq_errors() {
        assert_eq!(
            lstsq_scale_shift(&[1.0, 2.0], &[1.0, 2.0], &[true, false]),
            Err(Error::InsufficientSamples { needed: 2, found: 1 })
        );
        assert!(matches!(
            lstsq_scale_shift(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0], &all(3)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn lstsq_ignores_unmasked() {
        let x = [0.0, 1.0, 2.0, 100.0];
        let y = [1.0, 3.0, 5.0, -40.0];
        let p = lstsq_scale_shift(&x, &y, &[true, true, true, false]).unwrap();
        assert_eq!(p, AffineParams { scale: 2.0, shift: 1.0 });
    }

    #[test]
    fn robust_examples() {
        let p = robust_center_scale(&[-1.0, 1.0], &all(2)).unwrap();
        assert_eq!(p, AffineParams { scale: 1.0, shift: 0.0 });

        let p = robust_center_scale(&[1.0, 2.0, 3.0, 4.0, 100.0], &all(5)).unwrap();
        assert_eq!(p.shift, 3.0);
        assert!((p.scale - 20.2).abs() < 1e-12);

        let p = robust_center_scale(&[4.25; 6], &all(6)).unwrap();
        assert_eq!(p, AffineParams { scale: 0.0, shift: 4.25 });

        assert_eq!(robust_center_scale(&[1.0], &[false]), Err(Error::EmptyInput));
    }

    #[test]
    fn even_count_median_averages_central_pair() {
        let p = median_mad(&[9.0, 1.0, 4.0, 2.0]).unwrap();
        assert_eq!(p.shift, 3.0);
        assert_eq!(p.scale, (6.0 + 2.0 + 1.0 + 1.0) / 4.0);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_field(&[-1.0, 1.0], &all(2), 1e-6).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(normalize_field(&[2.0; 4], &all(4), 1e-6).unwrap(), vec![0.0; 4]);

        let out = normalize_field(&[1.0, 2.0, 3.0, 4.0, 100.0], &all(5), 1e-6).unwrap();
        let expected = [-0.0990, -0.0495, 0.0, 0.0495, 4.8020];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn normalize_leaves_unmasked_samples() {
        let out = normalize_field(&[-1.0, 55.0, 1.0], &[true, false, true], 1e-6).unwrap();
        assert_eq!(out, vec![-1.0, 55.0, 1.0]);
    }
}
