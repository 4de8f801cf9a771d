//! Two-view and multi-view projective geometry with known orientations.
//!
//! Orientation convention: a [`Rotation`] stores the camera axes column-wise in
//! world coordinates, so `r * v_cam` expresses a camera-frame vector in the
//! world frame. The relative rotation between a home view and a current view is
//! `r_homeᵀ · r_cur`: the current camera axes expressed in the home frame. All
//! helpers derive it through [`Rotation::relative`].

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;
use core::ops::Mul;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::{Mat3, Vec3};

/// Orthonormality / determinant tolerance for [`Rotation`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Condition number above which the anchored normal equations are rejected.
pub const ANCHORED_MAX_CONDITION: f64 = 1e12;

/// Positive-depth threshold used by the sign vote.
pub const POSITIVE_DEPTH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("matrix is not a proper rotation (orthonormality error {orthogonality:e}, det {det})")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("ray rotated behind the image plane (z = {z:e})")]
    Cheirality { z: f64 },
    #[error("degenerate linear system: {0}")]
    DegenerateSystem(&'static str),
    #[error("insufficient data: need {needed} usable rows, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("zero disparity: depth unobservable")]
    ZeroDisparity,
    #[error("both baseline signs yield no positive depth")]
    AmbiguousSign,
    #[error("ray is parallel to the baseline (epipole)")]
    DegenerateRay,
    #[error("baseline is not a unit vector (norm {0})")]
    NotUnit(f64),
}

/// Numerical guards shared by the geometric primitives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guards {
    /// Minimum third component of a rotated ray before it counts as behind the camera.
    pub cheirality: f64,
    /// Minimum relative distance of a ray from the baseline direction.
    pub epipole: f64,
    /// Rows with a smaller coefficient norm are dropped as zero-disparity.
    pub zero_disparity: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Self { cheirality: 1e-12, epipole: 1e-12, zero_disparity: 1e-12 }
    }
}

/// Proper rotation matrix (orthonormal, det = +1), camera axes stored column-wise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates orthonormality and orientation within [`ROTATION_TOLERANCE`].
    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        let orthogonality = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if !(orthogonality <= ROTATION_TOLERANCE) || !((det - 1.0).abs() <= ROTATION_TOLERANCE) {
            return Err(GeometryError::NotARotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Nearest rotation in the Frobenius sense (polar decomposition via SVD).
    pub fn orthonormalize(m: &Mat3) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u requested");
        let v_t = svd.v_t.expect("svd v_t requested");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Self(r)
    }

    /// Exponential map of a rotation vector.
    pub fn exp(theta: &Vec3) -> Self {
        crate::imu::rodrigues(theta)
    }

    /// Rotation that maps home camera coordinates to current camera
    /// coordinates: `homeᵀ · cur` (current camera axes in the home frame).
    pub fn relative(home: &Rotation, cur: &Rotation) -> Rotation {
        Rotation(home.0.transpose() * cur.0)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Largest deviation of `mᵀm` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).abs().max()
    }

    /// Rotation angle in radians.
    pub fn angle(&self) -> f64 {
        let c = ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Quaternion `(w, x, y, z)` with non-negative scalar part.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(
            &nalgebra::Rotation3::from_matrix_unchecked(self.0),
        );
        let mut c = [q.w, q.i, q.j, q.k];
        if c[0] < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        c
    }

    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let uq = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
            q[0], q[1], q[2], q[3],
        ));
        Self(*uq.to_rotation_matrix().matrix())
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// Camera orientation plus position in world meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub r: Rotation,
    pub s: Vec3,
}

impl Pose {
    pub fn new(r: Rotation, s: Vec3) -> Self {
        Self { r, s }
    }

    /// Normalized projection of a world point, `None` when behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<NormalizedProjection> {
        let c = self.r.matrix().transpose() * (p - self.s);
        if c.z <= 0.0 {
            return None;
        }
        Some(NormalizedProjection::new(c.x / c.z, c.y / c.z))
    }
}

/// Normalized Euclidean image coordinates; the implicit third coordinate is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedProjection {
    pub x: f64,
    pub y: f64,
}

impl NormalizedProjection {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Homogeneous lift `[x, y, 1]`.
    pub fn lift(&self) -> Vec3 {
        Vec3::new(self.x, self.y, 1.0)
    }

    pub fn is_within(&self, fov_limit: f64) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.x.abs() <= fov_limit && self.y.abs() <= fov_limit
    }
}

/// Coefficients of one depth-free linear constraint on the home-frame baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRow {
    pub a: Vec3,
}

impl BaselineRow {
    pub fn is_trivial(&self, guards: &Guards) -> bool {
        self.a.norm() < guards.zero_disparity
    }
}

/// A feature seen in its home view and in the current view, together with
/// the (known) orientations of both views and the home position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub home: NormalizedProjection,
    pub cur: NormalizedProjection,
    pub r_home: Rotation,
    pub r_cur: Rotation,
    pub s_home: Vec3,
}

impl Correspondence {
    pub fn relative_rotation(&self) -> Rotation {
        Rotation::relative(&self.r_home, &self.r_cur)
    }

    /// Current projection with the rotational part of the motion removed.
    pub fn unrotated(&self) -> Result<NormalizedProjection, GeometryError> {
        unrotate(&self.cur, &self.relative_rotation())
    }
}

/// Applies the rotation as a homography so that the returned projection is
/// what a purely translating camera would have measured.
pub fn unrotate(
    m_cur: &NormalizedProjection,
    r_rel: &Rotation,
) -> Result<NormalizedProjection, GeometryError> {
    unrotate_with(m_cur, r_rel, &Guards::default())
}

pub fn unrotate_with(
    m_cur: &NormalizedProjection,
    r_rel: &Rotation,
    guards: &Guards,
) -> Result<NormalizedProjection, GeometryError> {
    let v = r_rel.apply(&m_cur.lift());
    if v.z <= guards.cheirality {
        return Err(GeometryError::Cheirality { z: v.z });
    }
    Ok(NormalizedProjection::new(v.x / v.z, v.y / v.z))
}

fn row_from(home: &NormalizedProjection, unrot: &NormalizedProjection) -> BaselineRow {
    let dx = unrot.x - home.x;
    let dy = unrot.y - home.y;
    BaselineRow { a: Vec3::new(-dy, dx, dy * unrot.x - dx * unrot.y) }
}

/// Linear constraint `aᵀ b_home = 0` on the baseline expressed in the home
/// frame, `b_home = r_homeᵀ (s_cur − s_home)`.
pub fn baseline_row(c: &Correspondence) -> Result<BaselineRow, GeometryError> {
    let unrot = c.unrotated()?;
    Ok(row_from(&c.home, &unrot))
}

/// Unit baseline direction (up to sign) from homogeneous rows.
pub fn solve_baseline_homogeneous(rows: &[BaselineRow]) -> Result<Vec3, GeometryError> {
    solve_baseline_homogeneous_with(rows, &Guards::default())
}

pub fn solve_baseline_homogeneous_with(
    rows: &[BaselineRow],
    guards: &Guards,
) -> Result<Vec3, GeometryError> {
    let usable: Vec<&BaselineRow> = rows.iter().filter(|r| !r.is_trivial(guards)).collect();
    if usable.len() < 2 {
        return Err(GeometryError::DegenerateSystem("fewer than two non-trivial rows"));
    }
    let mut a = DMatrix::<f64>::zeros(usable.len().max(3), 3);
    for (i, r) in usable.iter().enumerate() {
        a[(i, 0)] = r.a.x;
        a[(i, 1)] = r.a.y;
        a[(i, 2)] = r.a.z;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("svd v_t requested");
    let sv = &svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(core::cmp::Ordering::Equal));
    if !(sv[order[1]] > 1e-10 * sv[order[0]]) {
        return Err(GeometryError::DegenerateSystem("rank of stacked rows below 2"));
    }
    let n = v_t.row(order[2]).transpose();
    let mut n = Vec3::new(n[0], n[1], n[2]);
    n /= n.norm();
    Ok(n)
}

/// Position prior used to fix directions the anchored system cannot
/// observe (collinear camera centers). The weight is relative to the trace of
/// the anchored normal matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionPrior {
    pub position: Vec3,
    pub relative_weight: f64,
    /// Standard deviation of the prior position, meters. When set, a
    /// consensus polish weighs the prior against the spread of the row
    /// residuals instead of using `relative_weight`.
    pub sigma: Option<f64>,
    /// Lower bound on the prior weight in the `sigma` case, relative to the
    /// trace of the normal matrix. Keeps directions the rows barely observe
    /// tied to the prior when the residuals vanish.
    pub min_relative_weight: f64,
}

impl PositionPrior {
    pub fn relative(position: Vec3, relative_weight: f64) -> Self {
        Self { position, relative_weight, sigma: None, min_relative_weight: 0.0 }
    }
}

/// Accumulated normal equations of the anchored (scale-aware) system,
/// centred on `origin` (the first home position) so that large world
/// coordinates do not cost precision in the weakly observed directions.
#[derive(Debug, Clone)]
pub struct AnchoredSystem {
    pub normal: Mat3,
    /// Right-hand side for the offset `s − origin`.
    pub rhs: Vec3,
    pub origin: Vec3,
    pub rows: usize,
    anchors: Vec<Vec3>,
}

impl AnchoredSystem {
    pub fn build(cs: &[Correspondence], guards: &Guards) -> Result<Self, GeometryError> {
        Self::build_weighted(cs.iter().map(|c| (c, 1.0)), guards)
    }

    /// Like [`AnchoredSystem::build`] with a non-negative weight per row.
    pub fn build_weighted<'a>(
        cs: impl IntoIterator<Item = (&'a Correspondence, f64)>,
        guards: &Guards,
    ) -> Result<Self, GeometryError> {
        let mut normal = Mat3::zeros();
        let mut rhs = Vec3::zeros();
        let mut origin = None;
        let mut rows = 0;
        let mut anchors: Vec<Vec3> = Vec::new();
        for (c, weight) in cs {
            let row = baseline_row(c)?;
            if row.is_trivial(guards) || !(weight > 0.0) {
                continue;
            }
            let o = *origin.get_or_insert(c.s_home);
            let w = c.r_home.apply(&row.a);
            normal += w * w.transpose() * weight;
            rhs += w * w.dot(&(c.s_home - o)) * weight;
            rows += 1;
            if !anchors.iter().any(|s| (s - c.s_home).norm() <= 1e-9) {
                anchors.push(c.s_home);
            }
        }
        Ok(Self { normal, rhs, origin: origin.unwrap_or_else(Vec3::zeros), rows, anchors })
    }

    pub fn distinct_anchors(&self) -> usize {
        self.anchors.len()
    }

    /// Ordinary least-squares solution; rejects single-anchor and
    /// ill-conditioned systems.
    pub fn solve(&self) -> Result<Vec3, GeometryError> {
        if self.rows < 3 {
            return Err(GeometryError::InsufficientData { needed: 3, got: self.rows });
        }
        if self.anchors.len() < 2 {
            return Err(GeometryError::DegenerateSystem(
                "all rows share one home position; scale is unobservable",
            ));
        }
        Ok(self.origin + solve_spd(&self.normal, &self.rhs, ANCHORED_MAX_CONDITION)?)
    }

    /// Least squares with an added `λ‖s − prior‖²` term, `λ = relative_weight · tr(N)`.
    pub fn solve_with_prior(&self, prior: &PositionPrior) -> Result<Vec3, GeometryError> {
        if self.rows == 0 {
            return Err(GeometryError::InsufficientData { needed: 1, got: 0 });
        }
        self.solve_with_lambda(&prior.position, prior.relative_weight * self.normal.trace())
    }

    /// Least squares with an added `λ‖s − prior‖²` term for an absolute `λ`.
    pub fn solve_with_lambda(&self, prior: &Vec3, lambda: f64) -> Result<Vec3, GeometryError> {
        if self.rows == 0 {
            return Err(GeometryError::InsufficientData { needed: 1, got: 0 });
        }
        let n = self.normal + Mat3::identity() * lambda;
        let b = self.rhs + (prior - self.origin) * lambda;
        Ok(self.origin + solve_spd(&n, &b, ANCHORED_MAX_CONDITION)?)
    }

    /// Residual `wᵀ(s − s_home)` of one correspondence's row at `s`.
    pub fn row_residual(c: &Correspondence, row: &BaselineRow, s: &Vec3) -> f64 {
        c.r_home.apply(&row.a).dot(&(s - c.s_home))
    }
}

fn solve_spd(n: &Mat3, b: &Vec3, max_condition: f64) -> Result<Vec3, GeometryError> {
    let eig = SymmetricEigen::new(*n);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || !(min > 0.0) || max / min > max_condition {
        return Err(GeometryError::DegenerateSystem("normal equations are ill-conditioned"));
    }
    let q = eig.eigenvectors;
    let mut y = q.transpose() * b;
    for i in 0..3 {
        y[i] /= eig.eigenvalues[i];
    }
    Ok(q * y)
}

/// World position of the current camera from correspondences anchored in at
/// least two distinct, known home positions.
pub fn solve_baseline_anchored(cs: &[Correspondence]) -> Result<Vec3, GeometryError> {
    AnchoredSystem::build(cs, &Guards::default())?.solve()
}

/// Home-view depth of a correspondence given the home-frame baseline.
pub fn triangulate_depth(
    m_home: &NormalizedProjection,
    m_unrot: &NormalizedProjection,
    b_home: &Vec3,
) -> Result<f64, GeometryError> {
    let cx = m_unrot.x - m_home.x;
    let cy = m_unrot.y - m_home.y;
    if cx.abs() < 1e-12 && cy.abs() < 1e-12 {
        return Err(GeometryError::ZeroDisparity);
    }
    let rx = m_unrot.x * b_home.z - b_home.x;
    let ry = m_unrot.y * b_home.z - b_home.y;
    Ok((cx * rx + cy * ry) / (cx * cx + cy * cy))
}

/// Resolves the sign of a home-frame baseline direction by counting
/// positive home depths under both signs. Ties go to `+direction`.
pub fn vote_sign(direction: &Vec3, cs: &[Correspondence]) -> Result<Vec3, GeometryError> {
    let mut plus = 0usize;
    let mut minus = 0usize;
    let neg = -direction;
    for c in cs {
        let Ok(unrot) = c.unrotated() else { continue };
        if let Ok(z) = triangulate_depth(&c.home, &unrot, direction) {
            if z > POSITIVE_DEPTH {
                plus += 1;
            }
        }
        if let Ok(z) = triangulate_depth(&c.home, &unrot, &neg) {
            if z > POSITIVE_DEPTH {
                minus += 1;
            }
        }
    }
    if plus == 0 && minus == 0 {
        return Err(GeometryError::AmbiguousSign);
    }
    Ok(if plus >= minus { *direction } else { neg })
}

/// Cosine of the dihedral angle between the two epipolar planes spanned by
/// the baseline and each ray. `b` is the unit baseline in the home frame.
pub fn epipolar_cos(
    m1: &NormalizedProjection,
    m2: &NormalizedProjection,
    r_rel: &Rotation,
    b: &Vec3,
) -> Result<f64, GeometryError> {
    epipolar_cos_with(m1, m2, r_rel, b, &Guards::default())
}

pub fn epipolar_cos_with(
    m1: &NormalizedProjection,
    m2: &NormalizedProjection,
    r_rel: &Rotation,
    b: &Vec3,
    guards: &Guards,
) -> Result<f64, GeometryError> {
    let bn = b.norm();
    if (bn - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NotUnit(bn));
    }
    let v1 = m1.lift();
    let v2 = r_rel.apply(&m2.lift());
    let p1 = v1 - b * b.dot(&v1);
    let p2 = v2 - b * b.dot(&v2);
    let n1 = p1.norm();
    let n2 = p2.norm();
    if n1 <= guards.epipole * v1.norm() || n2 <= guards.epipole * v2.norm() {
        return Err(GeometryError::DegenerateRay);
    }
    Ok((p1.dot(&p2) / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Cosine between the home ray and the rotated current ray; the score for
/// pure rotational motion where no baseline exists.
pub fn rotation_cos(m1: &NormalizedProjection, m2: &NormalizedProjection, r_rel: &Rotation) -> f64 {
    let v1 = m1.lift();
    let v2 = r_rel.apply(&m2.lift());
    (v1.dot(&v2) / (v1.norm() * v2.norm())).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rot_y(a: f64) -> Rotation {
        let (s, c) = a.sin_cos();
        Rotation::from_matrix(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)).unwrap()
    }

    fn rot_z(a: f64) -> Rotation {
        let (s, c) = a.sin_cos();
        Rotation::from_matrix(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn unrotate_identity_and_half_turn() {
        let m = NormalizedProjection::new(0.3, -0.1);
        assert_eq!(unrotate(&m, &Rotation::identity()).unwrap(), m);
        let u = unrotate(&m, &rot_z(PI)).unwrap();
        assert!((u.x + 0.3).abs() < 1e-15 && (u.y - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unrotate_small_yaw_matches_explicit_product() {
        // Oracle: element-wise product with the y-rotation written out by hand.
        let a = 5f64.to_radians();
        let (s, c) = (a.sin(), a.cos());
        let (x, y) = (0.2, 0.0);
        let v = [c * x + s * 1.0, y, -s * x + c * 1.0];
        let expected = (v[0] / v[2], v[1] / v[2]);
        let u = unrotate(&NormalizedProjection::new(x, y), &rot_y(a)).unwrap();
        assert!((u.x - expected.0).abs() < 1e-15);
        assert!((u.y - expected.1).abs() < 1e-15);
        assert!((u.x - 0.292_608_651_497_043_85).abs() < 1e-12);
    }

    #[test]
    fn unrotate_behind_plane_is_cheirality_error() {
        let m = NormalizedProjection::new(0.0, 0.0);
        assert!(matches!(unrotate(&m, &rot_y(PI)), Err(GeometryError::Cheirality { .. })));
    }

    #[test]
    fn rows_from_substitution() {
        let c = Correspondence {
            home: NormalizedProjection::new(0.0, 0.0),
            cur: NormalizedProjection::new(0.1, 0.0),
            r_home: Rotation::identity(),
            r_cur: Rotation::identity(),
            s_home: Vec3::zeros(),
        };
        assert_eq!(baseline_row(&c).unwrap().a, Vec3::new(0.0, 0.1, 0.0));
        let c0 = Correspondence { cur: c.home, ..c };
        assert_eq!(baseline_row(&c0).unwrap().a, Vec3::zeros());
    }

    #[test]
    fn depth_on_axis_point() {
        let z = triangulate_depth(
            &NormalizedProjection::new(0.0, 0.0),
            &NormalizedProjection::new(-0.1, 0.0),
            &Vec3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        assert!((z - 10.0).abs() < 1e-12);
        let p = NormalizedProjection::new(0.2, 0.1);
        assert_eq!(triangulate_depth(&p, &p, &Vec3::x()), Err(GeometryError::ZeroDisparity));
    }

    #[test]
    fn two_rows_give_cross_product_null_vector() {
        let r1 = BaselineRow { a: Vec3::new(0.1, -0.3, 0.02) };
        let r2 = BaselineRow { a: Vec3::new(-0.2, 0.05, 0.4) };
        let n = solve_baseline_homogeneous(&[r1, r2]).unwrap();
        let cross = r1.a.cross(&r2.a).normalize();
        assert!((n - cross).norm() < 1e-12 || (n + cross).norm() < 1e-12);
    }

    #[test]
    fn homogeneous_rejects_rank_one() {
        let r1 = BaselineRow { a: Vec3::new(0.1, -0.3, 0.02) };
        let r2 = BaselineRow { a: r1.a * 2.0 };
        let z = BaselineRow { a: Vec3::zeros() };
        assert!(matches!(
            solve_baseline_homogeneous(&[r1, r2, z]),
            Err(GeometryError::DegenerateSystem(_))
        ));
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::from_matrix(Mat3::identity() * 2.0).is_err());
        let reflect = Mat3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0);
        assert!(Rotation::from_matrix(reflect).is_err());
        let noisy = rot_z(0.3).matrix() + Mat3::repeat(1e-4);
        let r = Rotation::orthonormalize(&noisy);
        assert!(r.orthogonality_error() < 1e-14);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn epipolar_cos_rejects_bad_baselines() {
        let m = NormalizedProjection::new(0.0, 0.0);
        let r = Rotation::identity();
        assert!(matches!(epipolar_cos(&m, &m, &r, &Vec3::new(0.0, 0.0, 2.0)), Err(GeometryError::NotUnit(_))));
        assert_eq!(epipolar_cos(&m, &m, &r, &Vec3::z()), Err(GeometryError::DegenerateRay));
    }

    #[test]
    fn pure_rotation_collinear_is_one() {
        let r = rot_y(0.2);
        let m1 = NormalizedProjection::new(0.1, 0.05);
        // m2 such that R m2 ∥ m1.
        let v = r.transpose().apply(&m1.lift());
        let m2 = NormalizedProjection::new(v.x / v.z, v.y / v.z);
        assert!((rotation_cos(&m1, &m2, &r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quaternion_round_trip() {
        let r = rot_y(0.4) * rot_z(-1.1);
        let q = r.to_quaternion();
        let back = Rotation::from_quaternion(q);
        assert!((back.matrix() - r.matrix()).abs().max() < 1e-14);
    }
}
