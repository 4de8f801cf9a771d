//! Reference-versus-estimate comparison behind the `eval` command.

use serde::{Deserialize, Serialize};
use shorevo_core::eval::{self, ErrorReport, EvalError};
use shorevo_core::spline::{CatmullRomSpline, PlanarPoint};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("{0} trajectory is empty")]
    Empty(&'static str),
    #[error("reference covers frames {0}..={1} and the estimate {2}..={3}: no overlap")]
    NoOverlap(usize, usize, usize, usize),
    #[error("{which} trajectory: {source}")]
    Eval { which: &'static str, source: EvalError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub report: ErrorReport,
    /// Reference samples at equal fractions of its length.
    pub reference: Vec<PlanarPoint>,
    /// Estimate samples at the same fractions, after alignment.
    pub aligned: Vec<PlanarPoint>,
    /// Frame range shared by both trajectories.
    pub frames: (usize, usize),
    pub reference_length: f64,
    pub estimate_length: f64,
}

fn span(points: &[(usize, PlanarPoint)]) -> Option<(usize, usize)> {
    Some((points.iter().map(|p| p.0).min()?, points.iter().map(|p| p.0).max()?))
}

fn cropped(points: &[(usize, PlanarPoint)], lo: usize, hi: usize) -> Vec<PlanarPoint> {
    let mut v: Vec<(usize, PlanarPoint)> = points.iter().filter(|p| p.0 >= lo && p.0 <= hi).copied().collect();
    v.sort_by_key(|p| p.0);
    v.into_iter().map(|p| p.1).collect()
}

/// Fits splines to both trajectories over their shared frame range, aligns
/// the estimate and measures the residual distances. Cropping keeps the two
/// length fractions describing the same stretch of water when, say, the
/// last GPS fix precedes the last video frame.
pub fn compare(
    reference: &[(usize, PlanarPoint)],
    estimate: &[(usize, PlanarPoint)],
    samples: usize,
    bins: usize,
) -> Result<Comparison, CompareError> {
    let (g0, g1) = span(reference).ok_or(CompareError::Empty("reference"))?;
    let (v0, v1) = span(estimate).ok_or(CompareError::Empty("estimate"))?;
    let (lo, hi) = (g0.max(v0), g1.min(v1));
    if lo >= hi {
        return Err(CompareError::NoOverlap(g0, g1, v0, v1));
    }
    let g = CatmullRomSpline::fit(&cropped(reference, lo, hi))
        .map_err(|e| CompareError::Eval { which: "reference", source: e.into() })?;
    let v = CatmullRomSpline::fit(&cropped(estimate, lo, hi))
        .map_err(|e| CompareError::Eval { which: "estimate", source: e.into() })?;
    let report = eval::evaluate_with_bins(&g, &v, samples, bins)
        .map_err(|source| CompareError::Eval { which: "estimate", source })?;
    let reference_samples =
        eval::resample(&g, samples).map_err(|source| CompareError::Eval { which: "reference", source })?;
    let aligned = eval::resample(&v, samples)
        .map_err(|source| CompareError::Eval { which: "estimate", source })?
        .into_iter()
        .map(|p| report.fit.transform.apply(p))
        .collect();
    Ok(Comparison {
        report,
        reference: reference_samples,
        aligned,
        frames: (lo, hi),
        reference_length: g.total_length(),
        estimate_length: v.total_length(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    /// Row-major 2×2 linear part.
    pub a: [f64; 4],
    pub t: [f64; 2],
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramStats {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Contents of `stats.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub samples: usize,
    pub first_frame: usize,
    pub last_frame: usize,
    pub reference_length_m: f64,
    pub estimate_length_m: f64,
    pub max: f64,
    pub mean: f64,
    pub rmse: f64,
    pub skewness: f64,
    pub affine: Affine,
    pub histogram: HistogramStats,
}

impl Stats {
    pub fn new(c: &Comparison) -> Self {
        let r = &c.report;
        let a = &r.fit.transform.a;
        Self {
            samples: r.samples.len(),
            first_frame: c.frames.0,
            last_frame: c.frames.1,
            reference_length_m: c.reference_length,
            estimate_length_m: c.estimate_length,
            max: r.max,
            mean: r.mean,
            rmse: r.rmse,
            skewness: r.skewness,
            affine: Affine {
                a: [a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]],
                t: [r.fit.transform.t.x, r.fit.transform.t.y],
                degenerate: r.fit.degenerate,
            },
            histogram: HistogramStats { edges: r.histogram.edges.clone(), counts: r.histogram.counts.clone() },
        }
    }
}

pub const ERRORS_HEADER: [&str; 7] = ["u", "distance_m", "error_m", "ref_east_m", "ref_north_m", "vo_east_m", "vo_north_m"];

/// One row of `errors.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub u: f64,
    pub distance_m: f64,
    pub error_m: f64,
    pub ref_east_m: f64,
    pub ref_north_m: f64,
    pub vo_east_m: f64,
    pub vo_north_m: f64,
}

impl Comparison {
    pub fn rows(&self) -> Vec<ErrorRow> {
        self.report
            .samples
            .iter()
            .zip(&self.report.by_distance)
            .zip(self.reference.iter().zip(&self.aligned))
            .map(|(((u, e), (d, _)), (g, v))| ErrorRow {
                u: *u,
                distance_m: *d,
                error_m: *e,
                ref_east_m: g.e,
                ref_north_m: g.n,
                vo_east_m: v.e,
                vo_north_m: v.n,
            })
            .collect()
    }
}
