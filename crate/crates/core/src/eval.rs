//! Trajectory comparison: both curves are resampled at equal fractions of
//! their arc length, the estimate is aligned to the reference by an affine
//! least-squares fit, and the residual distances are summarized.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use log::warn;
use nalgebra::{Matrix2, SymmetricEigen};
use thiserror::Error;

use crate::spline::{CatmullRomSpline, PlanarPoint, SplineError, Vec2};

pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_BINS: usize = 20;

/// Scatter eigenvalue ratio below which the fit is considered rank deficient.
const RANK_RATIO: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("need at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// `p ↦ a p + t` in the east/north plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform2D {
    pub a: Matrix2<f64>,
    pub t: Vec2,
}

impl AffineTransform2D {
    pub fn identity() -> Self {
        Self { a: Matrix2::identity(), t: Vec2::zeros() }
    }

    pub fn apply(&self, p: PlanarPoint) -> PlanarPoint {
        (self.a * p.to_vec() + self.t).into()
    }

    pub fn determinant(&self) -> f64 {
        self.a.determinant()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub transform: AffineTransform2D,
    /// Set when the estimate samples are collinear and the fit is not
    /// unique; the transform is then the minimum-norm solution.
    pub degenerate: bool,
}

/// Samples `spline` at `n` equally spaced fractions of its length.
pub fn resample(spline: &CatmullRomSpline, n: usize) -> Result<Vec<PlanarPoint>, EvalError> {
    if n < 4 {
        return Err(EvalError::TooFewSamples(n));
    }
    (0..n)
        .map(|k| {
            let u = k as f64 / (n - 1) as f64;
            spline.point_at_fraction(u).map_err(EvalError::from)
        })
        .collect()
}

/// Least-squares affine map taking the `v` samples onto the `g` samples.
pub fn fit_affine_points(g: &[PlanarPoint], v: &[PlanarPoint]) -> AffineFit {
    let n = g.len().min(v.len());
    let inv_n = 1.0 / n as f64;
    let g_mean = g[..n].iter().fold(Vec2::zeros(), |acc, p| acc + p.to_vec()) * inv_n;
    let v_mean = v[..n].iter().fold(Vec2::zeros(), |acc, p| acc + p.to_vec()) * inv_n;
    let mut svv = Matrix2::zeros();
    let mut sgv = Matrix2::zeros();
    for (gp, vp) in g.iter().zip(v.iter()) {
        let dv = vp.to_vec() - v_mean;
        let dg = gp.to_vec() - g_mean;
        svv += dv * dv.transpose();
        sgv += dg * dv.transpose();
    }
    // Normal equations a·Svv = Sgv, with a pseudo-inverse when Svv is singular.
    let eig = SymmetricEigen::new(svv);
    let top = eig.eigenvalues.amax();
    let degenerate = top <= 0.0 || eig.eigenvalues.min() <= RANK_RATIO * top;
    let a = if degenerate {
        let mut inv = Matrix2::zeros();
        for i in 0..2 {
            let l = eig.eigenvalues[i];
            if top > 0.0 && l > RANK_RATIO * top {
                let q = eig.eigenvectors.column(i);
                inv += q * q.transpose() / l;
            }
        }
        sgv * inv
    } else {
        sgv * svv.try_inverse().expect("scatter matrix is well conditioned")
    };
    let t = g_mean - a * v_mean;
    let transform = AffineTransform2D { a, t };
    if transform.determinant().abs() < 1e-6 {
        warn!("affine alignment is nearly singular (det = {:e})", transform.determinant());
    }
    AffineFit { transform, degenerate }
}

/// Affine alignment of `v` onto `g` from `n` arc-length matched samples.
pub fn fit_affine(g: &CatmullRomSpline, v: &CatmullRomSpline, n: usize) -> Result<AffineFit, EvalError> {
    let gs = resample(g, n)?;
    let vs = resample(v, n)?;
    Ok(fit_affine_points(&gs, &vs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over `[0, max]`; the last bin is closed.
    pub fn new(values: &[f64], bins: usize) -> Result<Self, EvalError> {
        if bins == 0 {
            return Err(EvalError::NoBins);
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        let width = max / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { max } else { width * i as f64 }).collect();
        let mut counts = vec![0; bins];
        for &x in values {
            let i = if width > 0.0 { ((x / width) as usize).min(bins - 1) } else { 0 };
            counts[i] += 1;
        }
        Ok(Self { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub fit: AffineFit,
    /// `(u, error)` pairs, meters.
    pub samples: Vec<(f64, f64)>,
    pub max: f64,
    pub mean: f64,
    pub rmse: f64,
    /// Sample skewness (third standardized moment); 0 when all errors agree.
    pub skewness: f64,
    pub histogram: Histogram,
    /// `(distance along reference, error)` pairs, meters.
    pub by_distance: Vec<(f64, f64)>,
}

/// Third standardized moment of `xs`.
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

/// Aligns `v` onto `g` and reports the residual position errors.
pub fn evaluate(g: &CatmullRomSpline, v: &CatmullRomSpline, n: usize) -> Result<ErrorReport, EvalError> {
    evaluate_with_bins(g, v, n, DEFAULT_BINS)
}

pub fn evaluate_with_bins(
    g: &CatmullRomSpline,
    v: &CatmullRomSpline,
    n: usize,
    bins: usize,
) -> Result<ErrorReport, EvalError> {
    let gs = resample(g, n)?;
    let vs = resample(v, n)?;
    let fit = fit_affine_points(&gs, &vs);
    let length = g.total_length();
    let mut samples = Vec::with_capacity(n);
    let mut by_distance = Vec::with_capacity(n);
    for (k, (gp, vp)) in gs.iter().zip(vs.iter()).enumerate() {
        let u = k as f64 / (n - 1) as f64;
        let e = fit.transform.apply(*vp).distance(gp);
        samples.push((u, e));
        by_distance.push((u * length, e));
    }
    let errors: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let nf = n as f64;
    let max = errors.iter().copied().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / nf;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / nf).sqrt();
    Ok(ErrorReport {
        fit,
        max,
        mean: mean.min(max),
        rmse,
        skewness: skewness(&errors),
        histogram: Histogram::new(&errors, bins)?,
        samples,
        by_distance,
    })
}
