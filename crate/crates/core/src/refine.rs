//! Gauss-Newton refinement of a short window of camera poses on a sum of
//! epipolar constraints.
//!
//! Each observation contributes the scalar triple product
//! `r = (R_k m_k) · ((s_k − s_h) × (R_h m_h))`, which vanishes when both world
//! rays and the baseline are coplanar. By default the residual is divided by
//! the baseline length so that its magnitude does not grow with the baseline.
//! Rotations are perturbed on the left, `R ← exp([δ]ₓ) R`.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::geometry::{NormalizedProjection, Pose, Rotation};
use crate::Vec3;

/// Condition number above which the normal equations are treated as singular.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("invalid window problem: {0}")]
    InvalidProblem(&'static str),
    #[error("two-view window with both poses free is scale unaware; fix one pose")]
    ScaleUnobservable,
    #[error("normal equations are numerically singular (condition {0:e})")]
    SingularNormalEquations(f64),
}

/// Where an observation's home pose comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HomeRef {
    /// A pose inside the window.
    Window(usize),
    /// A pose older than the window, held constant.
    Fixed(Pose),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowObservation {
    pub feature_id: u64,
    pub home: HomeRef,
    pub m_home: NormalizedProjection,
    /// Window index of the observing view.
    pub k: usize,
    pub m_k: NormalizedProjection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowProblem {
    poses: Vec<Pose>,
    fixed: Vec<bool>,
    observations: Vec<WindowObservation>,
}

impl WindowProblem {
    pub fn new(
        poses: Vec<Pose>,
        fixed: Vec<bool>,
        observations: Vec<WindowObservation>,
    ) -> Result<Self, RefineError> {
        let n = poses.len();
        if n < 2 {
            return Err(RefineError::InvalidProblem("window needs at least two poses"));
        }
        if fixed.len() != n {
            return Err(RefineError::InvalidProblem("fixed mask length differs from pose count"));
        }
        if !fixed.iter().any(|&f| f) {
            return Err(if n == 2 {
                RefineError::ScaleUnobservable
            } else {
                RefineError::InvalidProblem("at least one pose must be held constant")
            });
        }
        for o in &observations {
            if o.k >= n {
                return Err(RefineError::InvalidProblem("observation view outside the window"));
            }
            if let HomeRef::Window(h) = o.home {
                if h >= o.k {
                    return Err(RefineError::InvalidProblem("home view must precede the observing view"));
                }
            }
        }
        Ok(Self { poses, fixed, observations })
    }

    /// Window of `poses` with the oldest one held constant.
    pub fn with_oldest_fixed(
        poses: Vec<Pose>,
        observations: Vec<WindowObservation>,
    ) -> Result<Self, RefineError> {
        let mut fixed = vec![false; poses.len()];
        if let Some(f) = fixed.first_mut() {
            *f = true;
        }
        Self::new(poses, fixed, observations)
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    pub fn observations(&self) -> &[WindowObservation] {
        &self.observations
    }

    fn free_indices(&self) -> Vec<usize> {
        (0..self.poses.len()).filter(|&i| !self.fixed[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub max_iterations: usize,
    /// Relative cost decrease below which iteration stops.
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
    pub refine_rotations: bool,
    /// Step halvings tried before giving up on an iteration.
    pub damping: u32,
    /// Divide every residual by its baseline length.
    pub normalize_residuals: bool,
    /// Weight of a quadratic pull of free positions toward their initial
    /// values, relative to the mean diagonal of the initial normal matrix.
    /// Zero disables it.
    pub prior_weight: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            cost_tolerance: 1e-12,
            step_tolerance: 1e-10,
            refine_rotations: false,
            damping: 8,
            normalize_residuals: true,
            prior_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineReport {
    pub initial_cost: f64,
    pub final_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn home_pose<'a>(obs: &'a WindowObservation, poses: &'a [Pose]) -> &'a Pose {
    match &obs.home {
        HomeRef::Window(h) => &poses[*h],
        HomeRef::Fixed(p) => p,
    }
}

/// Unnormalized triple-product residual.
pub fn residual_raw(obs: &WindowObservation, poses: &[Pose]) -> f64 {
    let home = home_pose(obs, poses);
    let cur = &poses[obs.k];
    let u_h = home.r.apply(&obs.m_home.lift());
    let u_k = cur.r.apply(&obs.m_k.lift());
    u_k.dot(&(cur.s - home.s).cross(&u_h))
}

/// Residual of one observation; zero-baseline pairs contribute zero.
pub fn residual(obs: &WindowObservation, poses: &[Pose], normalize: bool) -> f64 {
    let r = residual_raw(obs, poses);
    if !normalize {
        return r;
    }
    let b = (poses[obs.k].s - home_pose(obs, poses).s).norm();
    if b < 1e-12 {
        0.0
    } else {
        r / b
    }
}

struct Layout {
    /// Parameter offset per window pose, `None` for fixed poses.
    offset: Vec<Option<usize>>,
    per_pose: usize,
    count: usize,
}

impl Layout {
    fn new(problem: &WindowProblem, rotations: bool) -> Self {
        let per_pose = if rotations { 6 } else { 3 };
        let mut offset = vec![None; problem.poses.len()];
        let mut count = 0;
        for i in problem.free_indices() {
            offset[i] = Some(count);
            count += per_pose;
        }
        Self { offset, per_pose, count }
    }
}

fn fill_jacobian(
    problem: &WindowProblem,
    poses: &[Pose],
    layout: &Layout,
    options: &RefineOptions,
) -> (DMatrix<f64>, DVector<f64>) {
    let m = problem.observations.len();
    let mut j = DMatrix::<f64>::zeros(m, layout.count);
    let mut r = DVector::<f64>::zeros(m);
    for (row, obs) in problem.observations.iter().enumerate() {
        let home = home_pose(obs, poses);
        let cur = &poses[obs.k];
        let u_h = home.r.apply(&obs.m_home.lift());
        let u_k = cur.r.apply(&obs.m_k.lift());
        let b = cur.s - home.s;
        let raw = u_k.dot(&b.cross(&u_h));
        let g = u_h.cross(&u_k);
        let bn = b.norm();
        let (value, d_b, scale) = if options.normalize_residuals {
            if bn < 1e-12 {
                continue;
            }
            (raw / bn, g / bn - b * (raw / (bn * bn * bn)), 1.0 / bn)
        } else {
            (raw, g, 1.0)
        };
        r[row] = value;
        let mut put = |pose: Option<usize>, shift: usize, v: Vec3| {
            if let Some(o) = pose {
                for c in 0..3 {
                    j[(row, o + shift + c)] += v[c];
                }
            }
        };
        let home_offset = match obs.home {
            HomeRef::Window(h) => layout.offset[h],
            HomeRef::Fixed(_) => None,
        };
        let cur_offset = layout.offset[obs.k];
        put(cur_offset, 0, d_b);
        put(home_offset, 0, -d_b);
        if layout.per_pose == 6 {
            put(cur_offset, 3, u_k.cross(&b.cross(&u_h)) * scale);
            put(home_offset, 3, u_h.cross(&u_k.cross(&b)) * scale);
        }
    }
    (j, r)
}

/// Analytic Jacobian of all residuals with respect to the free parameters
/// (per free pose: position, then left rotation increment when
/// `options.refine_rotations`).
pub fn jacobian(problem: &WindowProblem, options: &RefineOptions) -> DMatrix<f64> {
    let layout = Layout::new(problem, options.refine_rotations);
    fill_jacobian(problem, &problem.poses, &layout, options).0
}

/// Residual vector at the problem's current poses.
pub fn residuals(problem: &WindowProblem, options: &RefineOptions) -> DVector<f64> {
    DVector::from_iterator(
        problem.observations.len(),
        problem
            .observations
            .iter()
            .map(|o| residual(o, &problem.poses, options.normalize_residuals)),
    )
}

/// Applies a parameter increment to a copy of `poses`.
pub fn apply_increment(
    problem: &WindowProblem,
    poses: &[Pose],
    delta: &DVector<f64>,
    refine_rotations: bool,
) -> Vec<Pose> {
    let layout = Layout::new(problem, refine_rotations);
    let mut out = poses.to_vec();
    for (i, p) in out.iter_mut().enumerate() {
        if let Some(o) = layout.offset[i] {
            p.s += Vec3::new(delta[o], delta[o + 1], delta[o + 2]);
            if refine_rotations {
                let d = Vec3::new(delta[o + 3], delta[o + 4], delta[o + 5]);
                p.r = Rotation::exp(&d) * p.r;
            }
        }
    }
    out
}

fn total_cost(
    problem: &WindowProblem,
    poses: &[Pose],
    options: &RefineOptions,
    lambda: f64,
) -> f64 {
    let data: f64 = problem
        .observations
        .iter()
        .map(|o| residual(o, poses, options.normalize_residuals).powi(2))
        .sum();
    let prior: f64 = if lambda > 0.0 {
        poses
            .iter()
            .zip(&problem.poses)
            .zip(&problem.fixed)
            .filter(|(_, &f)| !f)
            .map(|((p, p0), _)| (p.s - p0.s).norm_squared())
            .sum()
    } else {
        0.0
    };
    data + lambda * prior
}

/// Damped Gauss-Newton: full steps are halved until the cost does not
/// increase. Returns the refined window poses.
pub fn refine(
    problem: &WindowProblem,
    options: &RefineOptions,
) -> Result<(Vec<Pose>, RefineReport), RefineError> {
    let layout = Layout::new(problem, options.refine_rotations);
    let free = problem.free_indices();
    let per_free = problem.observations.len() as f64 / free.len().max(1) as f64;
    if !free.is_empty() && per_free < 6.0 {
        warn!("window refinement with {per_free:.1} observations per free pose");
    }
    let mut poses = problem.poses.clone();
    let mut lambda = 0.0;
    if options.prior_weight > 0.0 && layout.count > 0 {
        let (j, _) = fill_jacobian(problem, &poses, &layout, options);
        let h = j.transpose() * &j;
        lambda = options.prior_weight * h.trace() / layout.count as f64;
    }
    let initial_cost = total_cost(problem, &poses, options, lambda);
    let mut cost = initial_cost;
    let mut report = RefineReport { initial_cost, final_cost: cost, iterations: 0, converged: false };
    if layout.count == 0 {
        report.converged = true;
        return Ok((poses, report));
    }

    for it in 1..=options.max_iterations {
        let (j, r) = fill_jacobian(problem, &poses, &layout, options);
        let mut h = j.transpose() * &j;
        let mut g = j.transpose() * &r;
        if lambda > 0.0 {
            for (i, (p, p0)) in poses.iter().zip(&problem.poses).enumerate() {
                if let Some(o) = layout.offset[i] {
                    for c in 0..3 {
                        h[(o + c, o + c)] += lambda;
                        g[o + c] += lambda * (p.s[c] - p0.s[c]);
                    }
                }
            }
        }
        let eig = SymmetricEigen::new(h);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            if cost <= f64::MIN_POSITIVE {
                report.converged = true;
                break;
            }
            return Err(RefineError::SingularNormalEquations(condition));
        }
        let q = &eig.eigenvectors;
        let mut y = q.transpose() * &g;
        for i in 0..y.len() {
            y[i] /= -eig.eigenvalues[i];
        }
        let step = q * y;
        if step.norm() < options.step_tolerance {
            report.converged = true;
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=options.damping {
            let trial = apply_increment(problem, &poses, &(&step * alpha), options.refine_rotations);
            let c = total_cost(problem, &trial, options, lambda);
            if c <= cost {
                accepted = Some((trial, c));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, c)) = accepted else {
            report.converged = true;
            break;
        };
        let decrease = if cost > 0.0 { (cost - c) / cost } else { 0.0 };
        poses = trial;
        cost = c;
        report.iterations = it;
        if decrease < options.cost_tolerance || step.norm() * alpha < options.step_tolerance {
            report.converged = true;
            break;
        }
    }
    if options.refine_rotations {
        for p in poses.iter_mut() {
            p.r = Rotation::orthonormalize(p.r.matrix());
        }
    }
    report.final_cost = cost;
    Ok((poses, report))
}
