//! Pixelwise MSE plus independent (per-instance) SSIM loss, with the analytic
//! gradient of their sum with respect to the estimated map.
//!
//! Every annotation owns a `window x window` region centered on its rounded
//! pixel and clipped at the image border. SSIM is evaluated once per region
//! with scalar statistics (population variance and covariance), and the
//! I-SSIM loss is the mean of `1 - SSIM` over regions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{DenseMap, PointSet};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub window: usize,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            lambda1: 0.0001,
            lambda2: 0.0009,
            window: 30,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                });
            }
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!("must be >= 2, got {}", self.window),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossReport {
    pub mse: f64,
    /// `None` when there are no annotations and the term is skipped.
    pub issim: Option<f64>,
    pub total: f64,
    /// d(total)/d(estimated), one entry per pixel.
    pub gradient: Option<DenseMap>,
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Region {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    fn indices(&self, stride: usize) -> impl Iterator<Item = usize> + Clone + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| y * stride + x))
    }
}

/// Window of side `window` around `(cx, cy)`: columns `cx - window/2` up to
/// (excluding) `cx - window/2 + window`, likewise for rows, clipped to the grid.
pub fn instance_region(cx: usize, cy: usize, window: usize, width: usize, height: usize) -> Region {
    let half = (window / 2) as isize;
    let clip = |c: usize, limit: usize| {
        let lo = c as isize - half;
        let hi = lo + window as isize;
        (lo.max(0) as usize, (hi.max(0) as usize).min(limit))
    };
    let (x0, x1) = clip(cx, width);
    let (y0, y1) = clip(cy, height);
    Region { x0, y0, x1, y1 }
}

pub fn instance_regions(annotations: &PointSet, window: usize) -> Vec<Region> {
    let (w, h) = (annotations.width(), annotations.height());
    annotations
        .pixels()
        .into_iter()
        .map(|(x, y)| instance_region(x, y, window, w, h))
        .collect()
}

pub fn mse_loss(estimated: &DenseMap, truth: &DenseMap) -> Result<f64> {
    estimated.ensure_same_shape(truth)?;
    let sum: f64 = estimated
        .values()
        .iter()
        .zip(truth.values())
        .map(|(e, g)| (e - g) * (e - g))
        .sum();
    Ok(sum / estimated.values().len() as f64)
}

/// Scalar SSIM of two equally sized patches.
pub fn ssim(estimated: &DenseMap, truth: &DenseMap, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    estimated.ensure_same_shape(truth)?;
    if estimated.values().len() < 2 {
        return Err(Error::InvalidParameter {
            name: "patch",
            reason: "SSIM needs at least 2 pixels".into(),
        });
    }
    Ok(SsimTerms::new(estimated.values(), truth.values(), params).value())
}

/// Sufficient statistics of one SSIM evaluation.
struct SsimTerms {
    n: f64,
    mean_e: f64,
    mean_g: f64,
    // numerator factors (2 mu_e mu_g + l1), (2 cov + l2)
    a1: f64,
    a2: f64,
    // denominator factors (mu_e^2 + mu_g^2 + l1), (var_e + var_g + l2)
    b1: f64,
    b2: f64,
}

impl SsimTerms {
    fn new(e: &[f64], g: &[f64], params: &SsimParams) -> Self {
        Self::from_iter(e.iter().copied().zip(g.iter().copied()), params)
    }

    fn from_iter<I>(pairs: I, params: &SsimParams) -> Self
    where
        I: Iterator<Item = (f64, f64)> + Clone,
    {
        let (mut n, mut se, mut sg) = (0usize, 0.0, 0.0);
        for (e, g) in pairs.clone() {
            n += 1;
            se += e;
            sg += g;
        }
        let nf = n as f64;
        let (mean_e, mean_g) = (se / nf, sg / nf);
        let (mut vee, mut vgg, mut veg) = (0.0, 0.0, 0.0);
        for (e, g) in pairs {
            let (de, dg) = (e - mean_e, g - mean_g);
            vee += de * de;
            vgg += dg * dg;
            veg += de * dg;
        }
        let (var_e, var_g, cov) = (vee / nf, vgg / nf, veg / nf);
        Self {
            n: nf,
            mean_e,
            mean_g,
            a1: 2.0 * mean_e * mean_g + params.lambda1,
            a2: 2.0 * cov + params.lambda2,
            b1: mean_e * mean_e + mean_g * mean_g + params.lambda1,
            b2: var_e + var_g + params.lambda2,
        }
    }

    fn value(&self) -> f64 {
        (self.a1 * self.a2) / (self.b1 * self.b2)
    }

    /// d(SSIM)/d(e_i) for a pixel with values `(e, g)`.
    fn derivative(&self, e: f64, g: f64) -> f64 {
        let Self {
            n,
            mean_e,
            mean_g,
            a1,
            a2,
            b1,
            b2,
        } = *self;
        let da1 = 2.0 * mean_g / n;
        let da2 = 2.0 * (g - mean_g) / n;
        let db1 = 2.0 * mean_e / n;
        let db2 = 2.0 * (e - mean_e) / n;
        let num = a1 * a2;
        let den = b1 * b2;
        ((da1 * a2 + a1 * da2) * den - num * (db1 * b2 + b1 * db2)) / (den * den)
    }
}

fn region_terms(e: &DenseMap, g: &DenseMap, region: &Region, params: &SsimParams) -> SsimTerms {
    let (ev, gv, w) = (e.values(), g.values(), e.width());
    SsimTerms::from_iter(region.indices(w).map(|i| (ev[i], gv[i])), params)
}

fn check_inputs(estimated: &DenseMap, truth: &DenseMap, annotations: &PointSet, params: &SsimParams) -> Result<()> {
    params.validate()?;
    estimated.ensure_same_shape(truth)?;
    if annotations.width() != estimated.width() || annotations.height() != estimated.height() {
        return Err(Error::DimensionMismatch {
            left_width: estimated.width(),
            left_height: estimated.height(),
            right_width: annotations.width(),
            right_height: annotations.height(),
        });
    }
    Ok(())
}

/// Mean of `1 - SSIM` over the annotation regions. Fails with
/// [`Error::EmptyPointSet`] when there are no annotations.
pub fn issim_loss(estimated: &DenseMap, truth: &DenseMap, annotations: &PointSet, params: &SsimParams) -> Result<f64> {
    check_inputs(estimated, truth, annotations, params)?;
    if annotations.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let regions = instance_regions(annotations, params.window);
    let per_region: Vec<f64> = regions
        .par_iter()
        .map(|r| 1.0 - region_terms(estimated, truth, r, params).value())
        .collect();
    Ok(per_region.iter().sum::<f64>() / regions.len() as f64)
}

/// `mse + issim`; the I-SSIM term is skipped for an empty annotation set.
pub fn total_loss(
    estimated: &DenseMap,
    truth: &DenseMap,
    annotations: &PointSet,
    params: &SsimParams,
    want_gradient: bool,
) -> Result<LossReport> {
    check_inputs(estimated, truth, annotations, params)?;
    let mse = mse_loss(estimated, truth)?;
    let regions = instance_regions(annotations, params.window);
    let n = regions.len() as f64;
    let w = estimated.width();

    // Per-region SSIM and (optionally) local gradients, reduced in order below.
    let per_region: Vec<(f64, Vec<f64>)> = regions
        .par_iter()
        .map(|r| {
            let terms = region_terms(estimated, truth, r, params);
            let grad = if want_gradient {
                let (ev, gv) = (estimated.values(), truth.values());
                r.indices(w).map(|i| terms.derivative(ev[i], gv[i])).collect()
            } else {
                Vec::new()
            };
            (terms.value(), grad)
        })
        .collect();

    let issim = (!regions.is_empty()).then(|| per_region.iter().map(|(s, _)| 1.0 - s).sum::<f64>() / n);
    let total = mse + issim.unwrap_or(0.0);

    let gradient = want_gradient.then(|| {
        let count = estimated.values().len() as f64;
        let mut grad: Vec<f64> = estimated
            .values()
            .iter()
            .zip(truth.values())
            .map(|(e, g)| 2.0 * (e - g) / count)
            .collect();
        for (region, (_, local)) in regions.iter().zip(&per_region) {
            for (i, d) in region.indices(w).zip(local) {
                grad[i] -= d / n;
            }
        }
        DenseMap::from_raw(w, estimated.height(), grad)
    });

    Ok(LossReport {
        mse,
        issim,
        total,
        gradient,
    })
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences with step `step`, over pixels whose analytic gradient
/// magnitude exceeds `min_magnitude`.
pub fn gradient_check(
    estimated: &DenseMap,
    truth: &DenseMap,
    annotations: &PointSet,
    params: &SsimParams,
    step: f64,
    min_magnitude: f64,
) -> Result<f64> {
    let report = total_loss(estimated, truth, annotations, params, true)?;
    let analytic = report.gradient.expect("gradient requested");
    let (w, h) = (estimated.width(), estimated.height());
    let errors: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let a = analytic.values()[i];
            if a.abs() <= min_magnitude {
                return Ok(0.0);
            }
            let mut probe = estimated.values().to_vec();
            probe[i] += step;
            let plus = DenseMap::new(w, h, probe.clone())?;
            probe[i] -= 2.0 * step;
            let minus = DenseMap::new(w, h, probe)?;
            let fp = total_loss(&plus, truth, annotations, params, false)?.total;
            let fm = total_loss(&minus, truth, annotations, params, false)?.total;
            let numeric = (fp - fm) / (2.0 * step);
            Ok((a - numeric).abs() / a.abs().max(numeric.abs()))
        })
        .collect::<Result<_>>()?;
    Ok(errors.into_iter().fold(0.0, f64::max))
}
