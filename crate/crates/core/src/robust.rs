//! Sample-consensus position estimation scored by epipolar-plane misalignment.
//!
//! Hypotheses come from minimal subsets of the baseline equations; every
//! correspondence is scored with a truncated cost `min(1 − cos φ, 1 − cutoff)`
//! where `φ` is the dihedral angle between its two epipolar planes.
//! Zero-disparity correspondences carry no motion information: they are never
//! sampled nor used when comparing hypotheses, only labelled at the end.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{
    self, baseline_row, epipolar_cos, rotation_cos, AnchoredSystem, BaselineRow, Correspondence,
    GeometryError, Guards, PositionPrior,
};
use crate::Vec3;

/// Success probability used by the adaptive iteration bound.
pub const CONFIDENCE: f64 = 0.99;

const POLISH_ITERATIONS: usize = 30;
/// Floor of the robust angle scale, rad. Angles recovered from a cosine
/// are only resolved to about 1.5e-8 rad near zero.
const MIN_ANGLE_SCALE: f64 = 1e-7;

/// Cutoff range accepted without an explicit override: cos 7° .. cos 3°.
pub fn cutoff_range() -> (f64, f64) {
    (7f64.to_radians().cos(), 3f64.to_radians().cos())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustError {
    #[error("no consensus: best hypothesis has {inliers} inliers, need {needed}")]
    NoConsensus { inliers: usize, needed: usize },
    #[error("need at least {needed} informative correspondences, got {got}")]
    TooFewCorrespondences { needed: usize, got: usize },
    #[error("every sampled subset was degenerate: {0}")]
    Degenerate(GeometryError),
    #[error("hypothesis coincides with every home position")]
    ZeroBaseline,
    #[error("homogeneous mode requires all correspondences to share one home view")]
    MixedHomeViews,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlesacParams {
    pub cos_cutoff: f64,
    pub max_iterations: usize,
    pub min_subset: usize,
    pub seed: u64,
    pub min_inliers: usize,
}

impl Default for MlesacParams {
    fn default() -> Self {
        Self {
            cos_cutoff: 5f64.to_radians().cos(),
            max_iterations: 200,
            min_subset: 3,
            seed: 0,
            min_inliers: 8,
        }
    }
}

impl MlesacParams {
    /// Checks the parameter invariants. With `allow_any_cutoff` the cutoff
    /// only has to lie in (0, 1).
    pub fn validate(&self, allow_any_cutoff: bool) -> Result<(), RobustError> {
        let (lo, hi) = cutoff_range();
        if allow_any_cutoff {
            if !(self.cos_cutoff > 0.0 && self.cos_cutoff < 1.0) {
                return Err(RobustError::InvalidParams("cos_cutoff must lie in (0, 1)"));
            }
        } else if !(self.cos_cutoff > lo - 1e-9 && self.cos_cutoff < hi + 1e-9) {
            return Err(RobustError::InvalidParams("cos_cutoff outside [cos 7°, cos 3°]"));
        }
        if self.min_subset < 2 {
            return Err(RobustError::InvalidParams("min_subset must be at least 2"));
        }
        if self.max_iterations == 0 {
            return Err(RobustError::InvalidParams("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// How a hypothesis is solved from a subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Direction only, from a single home view; the sign is voted at the end
    /// and the returned position lies one unit from the home position.
    Homogeneous,
    /// Scale-aware least squares over several known home positions.
    Anchored,
    /// Anchored least squares with a weak position prior.
    AnchoredWithPrior(PositionPrior),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustEstimate {
    pub position: Vec3,
    /// Indices into the input correspondences, ascending.
    pub inliers: Vec<usize>,
    /// Total truncated cost over all input correspondences.
    pub score: f64,
    pub iterations_used: usize,
}

/// Untruncated cost `1 − cos φ`; `None` when the ray is degenerate.
fn raw_cost(position: &Vec3, c: &Correspondence) -> Option<f64> {
    let b = position - c.s_home;
    let n = b.norm();
    let r_rel = c.relative_rotation();
    if n < 1e-9 {
        return Some(1.0 - rotation_cos(&c.home, &c.cur, &r_rel));
    }
    let b_home = c.r_home.transpose().apply(&(b / n));
    let b_home = b_home / b_home.norm();
    epipolar_cos(&c.home, &c.cur, &r_rel, &b_home).ok().map(|cos| 1.0 - cos)
}

fn score_indices(position: &Vec3, cs: &[Correspondence], idx: &[usize], cap: f64) -> (f64, Vec<usize>) {
    let mut score = 0.0;
    let mut inliers = Vec::new();
    for &i in idx {
        match raw_cost(position, &cs[i]) {
            Some(e) if e <= cap => {
                score += e;
                inliers.push(i);
            }
            _ => score += cap,
        }
    }
    (score, inliers)
}

/// Truncated epipolar score of a candidate world position and the indices of
/// the correspondences within the cutoff.
pub fn score_hypothesis(
    position: &Vec3,
    cs: &[Correspondence],
    cutoff: f64,
) -> Result<(f64, Vec<usize>), RobustError> {
    if !cs.is_empty() && cs.iter().all(|c| (position - c.s_home).norm() < 1e-9) {
        return Err(RobustError::ZeroBaseline);
    }
    let idx: Vec<usize> = (0..cs.len()).collect();
    Ok(score_indices(position, cs, &idx, 1.0 - cutoff))
}

fn solve_subset(
    cs: &[Correspondence],
    rows: &[Option<BaselineRow>],
    subset: &[usize],
    mode: &SolveMode,
    guards: &Guards,
) -> Result<Vec3, GeometryError> {
    match mode {
        SolveMode::Homogeneous => {
            let sub: Vec<BaselineRow> = subset.iter().filter_map(|&i| rows[i]).collect();
            let d = geometry::solve_baseline_homogeneous_with(&sub, guards)?;
            let c = &cs[subset[0]];
            Ok(c.s_home + c.r_home.apply(&d))
        }
        SolveMode::Anchored => {
            let sub: Vec<Correspondence> = subset.iter().map(|&i| cs[i]).collect();
            AnchoredSystem::build(&sub, guards)?.solve()
        }
        SolveMode::AnchoredWithPrior(prior) => {
            let sub: Vec<Correspondence> = subset.iter().map(|&i| cs[i]).collect();
            AnchoredSystem::build(&sub, guards)?.solve_with_prior(prior)
        }
    }
}

fn solve_weighted(
    cs: &[Correspondence],
    rows: &[Option<BaselineRow>],
    subset: &[usize],
    weights: &[f64],
    mode: &SolveMode,
    guards: &Guards,
    current: &Vec3,
) -> Result<Vec3, GeometryError> {
    match mode {
        SolveMode::Homogeneous => {
            let sub: Vec<BaselineRow> = subset
                .iter()
                .zip(weights)
                .filter_map(|(&i, w)| rows[i].map(|r| BaselineRow { a: r.a * w.sqrt() }))
                .collect();
            let d = geometry::solve_baseline_homogeneous_with(&sub, guards)?;
            let c = &cs[subset[0]];
            Ok(c.s_home + c.r_home.apply(&d))
        }
        SolveMode::Anchored => {
            AnchoredSystem::build_weighted(subset.iter().zip(weights).map(|(&i, &w)| (&cs[i], w)), guards)?
                .solve()
        }
        SolveMode::AnchoredWithPrior(prior) => {
            let system =
                AnchoredSystem::build_weighted(subset.iter().zip(weights).map(|(&i, &w)| (&cs[i], w)), guards)?;
            match prior.sigma {
                Some(sigma) => {
                    // λ = σ_r² / σ_p², the row residual variance estimated at
                    // the current position.
                    let (mut sum, mut wsum) = (0.0, 0.0);
                    for (&i, &w) in subset.iter().zip(weights) {
                        if let Some(row) = &rows[i] {
                            sum += w * AnchoredSystem::row_residual(&cs[i], row, current).powi(2);
                            wsum += w;
                        }
                    }
                    let variance = sum / (wsum - 3.0).max(1.0);
                    let floor = prior.min_relative_weight * system.normal.trace();
                    system.solve_with_lambda(&prior.position, (variance / (sigma * sigma)).max(floor))
                }
                None => system.solve_with_prior(prior),
            }
        }
    }
}

/// Row weight that turns a row built from normalized coordinates into one
/// built from unit bearings, so rays far off the optical axis do not get
/// outsized leverage in a least-squares fit.
fn bearing_weight(c: &Correspondence) -> f64 {
    match c.unrotated() {
        Ok(u) => 1.0 / (c.home.lift().norm_squared() * u.lift().norm_squared()),
        Err(_) => 0.0,
    }
}

/// Iteratively reweighted polish with Cauchy weights on the epipolar-plane
/// angle, so that correspondences just inside the cutoff stop dominating the
/// solution. The weight scale starts at the cutoff angle and is halved each
/// round down to the robust spread of the consensus angles.
fn reweighted_polish(
    cs: &[Correspondence],
    rows: &[Option<BaselineRow>],
    consensus: &[usize],
    mode: &SolveMode,
    guards: &Guards,
    start: Vec3,
    cutoff_angle: f64,
) -> Vec3 {
    let leverage: Vec<f64> = consensus.iter().map(|&i| bearing_weight(&cs[i])).collect();
    if let Ok(p) = solve_weighted(cs, rows, consensus, &leverage, mode, guards, &start) {
        if p.iter().all(|v| v.is_finite()) {
            return polish_from(cs, rows, consensus, &leverage, mode, guards, p, cutoff_angle);
        }
    }
    polish_from(cs, rows, consensus, &leverage, mode, guards, start, cutoff_angle)
}

#[allow(clippy::too_many_arguments)]
fn polish_from(
    cs: &[Correspondence],
    rows: &[Option<BaselineRow>],
    consensus: &[usize],
    leverage: &[f64],
    mode: &SolveMode,
    guards: &Guards,
    start: Vec3,
    cutoff_angle: f64,
) -> Vec3 {
    let mut position = start;
    let mut c = cutoff_angle;
    for _ in 0..POLISH_ITERATIONS {
        let angles: Vec<f64> = consensus
            .iter()
            .map(|&i| raw_cost(&position, &cs[i]).map_or(f64::INFINITY, |e| (1.0 - e).clamp(-1.0, 1.0).acos()))
            .collect();
        let mut sorted = angles.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let scale = (1.4826 * sorted[sorted.len() / 2]).max(MIN_ANGLE_SCALE);
        c = (0.5 * c).max(2.385 * scale);
        let weights: Vec<f64> =
            angles.iter().zip(leverage).map(|(a, l)| l / (1.0 + (a / c).powi(2))).collect();
        let Ok(next) = solve_weighted(cs, rows, consensus, &weights, mode, guards, &position) else { break };
        if !next.iter().all(|v| v.is_finite()) {
            break;
        }
        let moved = (next - position).norm();
        position = next;
        if moved <= 1e-12 * (1.0 + position.norm()) && c <= 2.385 * scale {
            break;
        }
    }
    position
}

fn adaptive_bound(inlier_ratio: f64, subset: usize) -> usize {
    if inlier_ratio >= 1.0 {
        return 1;
    }
    let good = inlier_ratio.powi(subset as i32);
    if good <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - CONFIDENCE).ln() / (1.0 - good).ln();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

/// Robust camera position from correspondences.
///
/// Deterministic for a given input and `params.seed`.
pub fn mlesac_position(
    cs: &[Correspondence],
    params: &MlesacParams,
    mode: SolveMode,
) -> Result<RobustEstimate, RobustError> {
    let guards = Guards::default();
    let cap = 1.0 - params.cos_cutoff;
    if matches!(mode, SolveMode::Homogeneous) {
        if let Some(first) = cs.first() {
            if cs.iter().any(|c| c.s_home != first.s_home || c.r_home != first.r_home) {
                return Err(RobustError::MixedHomeViews);
            }
        }
    }
    let rows: Vec<Option<BaselineRow>> = cs
        .iter()
        .map(|c| baseline_row(c).ok().filter(|r| !r.is_trivial(&guards)))
        .collect();
    let informative: Vec<usize> = (0..cs.len()).filter(|&i| rows[i].is_some()).collect();
    let m = informative.len();
    if m < params.min_subset {
        return Err(RobustError::TooFewCorrespondences { needed: params.min_subset, got: m });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(f64, Vec3, Vec<usize>)> = None;
    let mut last_error = GeometryError::DegenerateSystem("no subset drawn");
    let mut bound = params.max_iterations;
    let mut iterations = 0;
    while iterations < bound {
        iterations += 1;
        let picks = rand::seq::index::sample(&mut rng, m, params.min_subset);
        let subset: Vec<usize> = picks.iter().map(|k| informative[k]).collect();
        let position = match solve_subset(cs, &rows, &subset, &mode, &guards) {
            Ok(p) if p.iter().all(|v| v.is_finite()) => p,
            Ok(_) => continue,
            Err(e) => {
                last_error = e;
                continue;
            }
        };
        let (score, inliers) = score_indices(&position, cs, &informative, cap);
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            let ratio = inliers.len() as f64 / m as f64;
            bound = params.max_iterations.min(adaptive_bound(ratio, params.min_subset));
            best = Some((score, position, inliers));
        }
    }
    let Some((_, mut position, best_inliers)) = best else {
        return Err(RobustError::Degenerate(last_error));
    };

    // Least-squares polish on the consensus set. It is kept even when its
    // truncated score is slightly worse: directions the epipolar score cannot
    // resolve are otherwise decided by whichever outliers the best minimal
    // hypothesis happened to half-explain.
    if best_inliers.len() >= params.min_subset {
        position = reweighted_polish(cs, &rows, &best_inliers, &mode, &guards, position, params.cos_cutoff.acos());
    }

    if matches!(mode, SolveMode::Homogeneous) {
        let c0 = &cs[informative[0]];
        let d_home = c0.r_home.transpose().apply(&(position - c0.s_home));
        let (_, inl) = score_indices(&position, cs, &informative, cap);
        let voters: Vec<Correspondence> = inl.iter().map(|&i| cs[i]).collect();
        let d = geometry::vote_sign(&d_home, &voters).map_err(RobustError::Degenerate)?;
        position = c0.s_home + c0.r_home.apply(&d);
    }

    let all: Vec<usize> = (0..cs.len()).collect();
    let (score, inliers) = score_indices(&position, cs, &all, cap);
    let informative_inliers = inliers.iter().filter(|&&i| rows[i].is_some()).count();
    if informative_inliers < params.min_inliers {
        return Err(RobustError::NoConsensus { inliers: informative_inliers, needed: params.min_inliers });
    }
    Ok(RobustEstimate { position, inliers, score, iterations_used: iterations })
}
