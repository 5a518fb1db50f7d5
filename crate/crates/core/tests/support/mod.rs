//! Naive reference implementations used as test oracles.
//!
//! Everything here works on plain row-major slices and is written for
//! clarity, not speed: full sorts, explicit neighbor reads, one pixel at a
//! time. None of it calls into the library.

#![allow(dead_code)]

/// A trim fraction held as an exact ratio so the kept count needs no
/// floating-point floor.
#[derive(Debug, Clone, Copy)]
pub struct Trim {
    pub num: usize,
    pub den: usize,
}

impl Trim {
    pub const DEFAULT: Trim = Trim { num: 1, den: 5 };

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor((1 − trim)·n)`, at least 1.
    pub fn keep(self, n: usize) -> usize {
        ((self.den - self.num) * n / self.den).max(1)
    }
}

/// Forward-difference gradient magnitude per pixel; `None` where any read
/// sample is invalid.
pub fn grad_mag(depth: &[f64], valid: &[bool], h: usize, w: usize) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            let at = |r: usize, c: usize| r * w + c;
            let mut reads = vec![at(i, j)];
            if j + 1 < w {
                reads.push(at(i, j + 1));
            }
            if i + 1 < h {
                reads.push(at(i + 1, j));
            }
            if reads.iter().any(|&k| !valid[k]) {
                out.push(None);
                continue;
            }
            let gx = if j + 1 < w { depth[at(i, j + 1)] - depth[at(i, j)] } else { 0.0 };
            let gy = if i + 1 < h { depth[at(i + 1, j)] - depth[at(i, j)] } else { 0.0 };
            out.push(Some((gx * gx + gy * gy).sqrt()));
        }
    }
    out
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Mean absolute deviation from `center`.
pub fn mad(values: &[f64], center: f64) -> f64 {
    values.iter().map(|v| (v - center).abs()).sum::<f64>() / values.len() as f64
}

/// `(median, max(MAD, eps))`.
pub fn center_scale(values: &[f64], eps: f64) -> (f64, f64) {
    let t = median(values);
    (t, mad(values, t).max(eps))
}

pub fn normalize(values: &[f64], eps: f64) -> Vec<f64> {
    let (t, s) = center_scale(values, eps);
    values.iter().map(|v| (v - t) / s).collect()
}

/// Indices of the `keep` smallest residuals after a stable ascending sort.
pub fn kept_indices(residuals: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..residuals.len()).collect();
    order.sort_by(|&a, &b| residuals[a].partial_cmp(&residuals[b]).unwrap());
    order.truncate(keep);
    order.sort_unstable();
    order
}

pub fn trimmed_mae(residuals: &[f64], trim: Trim) -> f64 {
    let n = residuals.len();
    let kept = kept_indices(residuals, trim.keep(n));
    kept.iter().map(|&i| residuals[i]).sum::<f64>() / (2.0 * n as f64)
}

fn normalized_residuals(x: &[f64], y: &[f64], eps: f64) -> Vec<f64> {
    normalize(x, eps)
        .iter()
        .zip(normalize(y, eps))
        .map(|(a, b)| (a - b).abs())
        .collect()
}

/// One dense test instance: prediction and ground truth with validity,
/// a ToM mask and a validity mask for the SSI term.
#[derive(Debug, Clone)]
pub struct Instance {
    pub h: usize,
    pub w: usize,
    pub pred: Vec<f64>,
    pub pred_valid: Vec<bool>,
    pub gt: Vec<f64>,
    pub gt_valid: Vec<bool>,
    pub tom: Vec<bool>,
    pub valid: Vec<bool>,
}

impl Instance {
    /// Masked pixels whose gradients are valid in both fields.
    pub fn tom_pixels(&self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let gp = grad_mag(&self.pred, &self.pred_valid, self.h, self.w);
        let gg = grad_mag(&self.gt, &self.gt_valid, self.h, self.w);
        let mut idx = Vec::new();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for k in 0..self.h * self.w {
            if let (true, Some(a), Some(b)) = (self.tom[k], gp[k], gg[k]) {
                idx.push(k);
                x.push(a);
                y.push(b);
            }
        }
        (idx, x, y)
    }

    pub fn ssi_pixels(&self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let idx: Vec<usize> = (0..self.h * self.w)
            .filter(|&k| self.valid[k] && self.pred_valid[k] && self.gt_valid[k])
            .collect();
        let x = idx.iter().map(|&k| self.pred[k]).collect();
        let y = idx.iter().map(|&k| self.gt[k]).collect();
        (idx, x, y)
    }
}

/// Trimmed, robust-normalized gradient loss; `None` below `min_pixels`.
pub fn tom_loss(inst: &Instance, trim: Trim, eps: f64, min_pixels: usize) -> Option<f64> {
    let (idx, x, y) = inst.tom_pixels();
    if idx.len() < min_pixels.max(1) {
        return None;
    }
    Some(trimmed_mae(&normalized_residuals(&x, &y, eps), trim))
}

pub fn ssi_loss(inst: &Instance, trim: Trim, eps: f64, min_pixels: usize) -> Option<f64> {
    let (idx, x, y) = inst.ssi_pixels();
    if idx.len() < min_pixels.max(1) {
        return None;
    }
    Some(trimmed_mae(&normalized_residuals(&x, &y, eps), trim))
}

/// Frozen-constant loss: statistics and trim sets taken at a base
/// prediction, then re-evaluated at arbitrary predictions.
#[derive(Debug, Clone)]
pub struct FrozenOracle {
    pub h: usize,
    pub w: usize,
    pub tom: Option<FrozenTermOracle>,
    pub ssi: FrozenTermOracle,
}

#[derive(Debug, Clone)]
pub struct FrozenTermOracle {
    pub idx: Vec<usize>,
    pub center: f64,
    pub scale: f64,
    pub target: Vec<f64>,
    pub kept: Vec<usize>,
}

impl FrozenTermOracle {
    fn build(idx: Vec<usize>, x: &[f64], y: &[f64], trim: Trim, eps: f64) -> Self {
        let (center, scale) = center_scale(x, eps);
        let target = normalize(y, eps);
        let residuals: Vec<f64> = x
            .iter()
            .zip(&target)
            .map(|(v, t)| ((v - center) / scale - t).abs())
            .collect();
        let kept = kept_indices(&residuals, trim.keep(idx.len()));
        Self {
            idx,
            center,
            scale,
            target,
            kept,
        }
    }

    /// Signed residuals of all samples, given the current sample values.
    pub fn signed_residuals(&self, samples: &[f64]) -> Vec<f64> {
        samples
            .iter()
            .zip(&self.target)
            .map(|(v, t)| (v - self.center) / self.scale - t)
            .collect()
    }

    fn value(&self, samples: &[f64]) -> f64 {
        let r = self.signed_residuals(samples);
        self.kept.iter().map(|&k| r[k].abs()).sum::<f64>() / (2.0 * self.idx.len() as f64)
    }
}

impl FrozenOracle {
    pub fn at(inst: &Instance, trim: Trim, eps: f64, min_pixels: usize) -> Self {
        let (idx, x, y) = inst.ssi_pixels();
        let ssi = FrozenTermOracle::build(idx, &x, &y, trim, eps);
        let (idx, x, y) = inst.tom_pixels();
        let tom = (idx.len() >= min_pixels.max(1)).then(|| FrozenTermOracle::build(idx, &x, &y, trim, eps));
        Self {
            h: inst.h,
            w: inst.w,
            tom,
            ssi,
        }
    }

    /// Gradient magnitudes (padding convention, validity ignored) at `pixels`.
    pub fn magnitudes(&self, pred: &[f64], pixels: &[usize]) -> Vec<f64> {
        let all = grad_mag(pred, &vec![true; pred.len()], self.h, self.w);
        pixels.iter().map(|&k| all[k].unwrap()).collect()
    }

    pub fn tom_samples(&self, pred: &[f64]) -> Option<Vec<f64>> {
        self.tom.as_ref().map(|t| self.magnitudes(pred, &t.idx))
    }

    pub fn ssi_samples(&self, pred: &[f64]) -> Vec<f64> {
        self.ssi.idx.iter().map(|&k| pred[k]).collect()
    }

    pub fn value(&self, pred: &[f64]) -> f64 {
        let tom = match (&self.tom, self.tom_samples(pred)) {
            (Some(t), Some(samples)) => t.value(&samples),
            _ => 0.0,
        };
        tom + self.ssi.value(&self.ssi_samples(pred))
    }

    /// Whether the frozen loss has a kink (zero residual, zero gradient
    /// magnitude, or a change in which residuals would be trimmed) within
    /// `radius` of `pred` along coordinate `coord`.
    pub fn kink_near(&self, pred: &[f64], coord: usize, radius: f64, trim: Trim) -> bool {
        let mut probes = Vec::new();
        for step in [-radius, 0.0, radius] {
            let mut p = pred.to_vec();
            p[coord] += step;
            probes.push(p);
        }
        let term_kinks = |term: &FrozenTermOracle, samples: &dyn Fn(&[f64]) -> Vec<f64>| {
            let rs: Vec<Vec<f64>> = probes.iter().map(|p| term.signed_residuals(&samples(p))).collect();
            let sign_change = term
                .kept
                .iter()
                .any(|&k| rs[0][k].signum() != rs[2][k].signum() || rs[1][k] == 0.0);
            let reselected = [&rs[0], &rs[2]].iter().any(|r| {
                let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
                kept_indices(&abs, trim.keep(term.idx.len())) != term.kept
            });
            sign_change || reselected
        };
        if term_kinks(&self.ssi, &|p| self.ssi_samples(p)) {
            return true;
        }
        if let Some(tom) = &self.tom {
            if term_kinks(tom, &|p| self.magnitudes(p, &tom.idx)) {
                return true;
            }
            // The magnitude operator is non-smooth where it reaches zero.
            let min_mag = probes
                .iter()
                .flat_map(|p| self.magnitudes(p, &tom.idx))
                .fold(f64::INFINITY, f64::min);
            if min_mag <= 2.0 * radius {
                return true;
            }
        }
        false
    }
}

/// Six region metrics computed one pixel at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveMetrics {
    pub delta: [f64; 3],
    pub abs_rel: f64,
    pub rmse: f64,
    pub log_mae: f64,
    pub count: usize,
}

pub fn metrics(
    pred: &[f64],
    pred_valid: &[bool],
    gt: &[f64],
    gt_valid: &[bool],
    region: &[bool],
    natural_log: bool,
) -> Option<NaiveMetrics> {
    let log = |v: f64| if natural_log { v.ln() } else { v.log10() };
    let mut hits = [0usize; 3];
    let (mut abs_rel, mut sq, mut log_abs, mut count) = (0.0, 0.0, 0.0, 0usize);
    for k in 0..gt.len() {
        if !(region[k] && gt_valid[k] && gt[k] > 0.0) {
            continue;
        }
        let g = gt[k];
        let mut p = pred[k];
        if !pred_valid[k] || !p.is_finite() || p < 1e-6 {
            p = 1e-6;
        }
        let ratio = (p / g).max(g / p);
        for (hit, tau) in hits.iter_mut().zip([1.05, 1.15, 1.25]) {
            if ratio < tau {
                *hit += 1;
            }
        }
        abs_rel += (p - g).abs() / g;
        sq += (p - g) * (p - g);
        log_abs += (log(p) - log(g)).abs();
        count += 1;
    }
    if count == 0 {
        return None;
    }
    let n = count as f64;
    Some(NaiveMetrics {
        delta: hits.map(|h| h as f64 / n),
        abs_rel: abs_rel / n,
        rmse: (sq / n).sqrt(),
        log_mae: log_abs / n,
        count,
    })
}

/// Sum of squared residuals of `s·x + t ≈ y`.
pub fn sse(x: &[f64], y: &[f64], s: f64, t: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (s * a + t - b).powi(2)).sum()
}

/// Nearest-rank percentile by full sort.
pub fn nearest_rank(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let rank = ((p * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Random instance with mixed continuous and quantized values (the latter
/// produce ties and zero deviations), roughly 10% invalid samples and a ToM
/// mask of between 1 and `max_mask` pixels.
pub fn random_instance<R: rand::Rng>(rng: &mut R, h: usize, w: usize, max_mask: usize) -> Instance {
    let n = h * w;
    let quantized = rng.random_bool(0.3);
    let field = |rng: &mut R| -> Vec<f64> {
        (0..n)
            .map(|_| {
                if quantized {
                    f64::from(rng.random_range(1..=6u8)) * 0.5
                } else {
                    rng.random_range(0.5..5.0)
                }
            })
            .collect()
    };
    let pred = field(rng);
    let gt = field(rng);
    let flags = |rng: &mut R, p: f64| -> Vec<bool> { (0..n).map(|_| rng.random_bool(p)).collect() };
    let pred_valid = flags(rng, 0.9);
    let gt_valid = flags(rng, 0.9);
    let valid = flags(rng, 0.9);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let size = rng.random_range(1..=max_mask.min(n));
    let mut tom = vec![false; n];
    for &k in &order[..size] {
        tom[k] = true;
    }
    Instance {
        h,
        w,
        pred,
        pred_valid,
        gt,
        gt_valid,
        tom,
        valid,
    }
}
