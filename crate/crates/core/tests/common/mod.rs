#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use shorevo_core::geometry::{Correspondence, NormalizedProjection, Pose, Rotation};
use shorevo_core::{Mat3, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Rotation matrix of the unit quaternion `exp(θ/2)`, written out element by
/// element. Independent of the Rodrigues code path.
pub fn quaternion_rotation(theta: &Vec3) -> Mat3 {
    let angle = theta.norm();
    let (w, x, y, z) = if angle == 0.0 {
        (1.0, 0.0, 0.0, 0.0)
    } else {
        let s = (0.5 * angle).sin() / angle;
        ((0.5 * angle).cos(), theta.x * s, theta.y * s, theta.z * s)
    };
    Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let axis = unit(rng);
    Rotation::from_matrix_unchecked(quaternion_rotation(&(axis * rng.random_range(0.0..std::f64::consts::PI))))
}

/// Rotation within `max_angle` of `r`.
pub fn nearby_rotation(rng: &mut ChaCha8Rng, r: &Rotation, max_angle: f64) -> Rotation {
    let d = quaternion_rotation(&(unit(rng) * rng.random_range(0.0..=max_angle)));
    Rotation::from_matrix_unchecked(d * r.matrix())
}

/// World point seen by `pose` at normalized coordinates within ±`half_fov`
/// and the given depth.
pub fn point_in_view(pose: &Pose, m: (f64, f64), depth: f64) -> Vec3 {
    pose.s + pose.r.apply(&(Vec3::new(m.0, m.1, 1.0) * depth))
}

pub fn random_point_in_view(rng: &mut ChaCha8Rng, pose: &Pose, depth: (f64, f64)) -> Vec3 {
    let m = (rng.random_range(-0.55..0.55), rng.random_range(-0.42..0.42));
    let d = if depth.1 > depth.0 { rng.random_range(depth.0.ln()..depth.1.ln()).exp() } else { depth.0 };
    point_in_view(pose, m, d)
}

pub fn correspondence(home: &Pose, cur: &Pose, p: &Vec3) -> Option<Correspondence> {
    Some(Correspondence { home: home.project(p)?, cur: cur.project(p)?, r_home: home.r, r_cur: cur.r, s_home: home.s })
}

pub fn jitter(rng: &mut ChaCha8Rng, m: NormalizedProjection, sigma: f64) -> NormalizedProjection {
    if sigma == 0.0 {
        return m;
    }
    let n = Normal::new(0.0, sigma).unwrap();
    NormalizedProjection::new(m.x + n.sample(rng), m.y + n.sample(rng))
}

/// Correspondences of `n` random points seen from `home` and `cur`, with
/// pixel noise `sigma_px` at a 700 px focal length.
pub fn two_view(
    rng: &mut ChaCha8Rng,
    home: &Pose,
    cur: &Pose,
    n: usize,
    depth: (f64, f64),
    sigma_px: f64,
) -> Vec<Correspondence> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = random_point_in_view(rng, home, depth);
        if let Some(mut c) = correspondence(home, cur, &p) {
            if c.cur.x.abs() > 0.6 || c.cur.y.abs() > 0.45 {
                continue;
            }
            c.home = jitter(rng, c.home, sigma_px / 700.0);
            c.cur = jitter(rng, c.cur, sigma_px / 700.0);
            out.push(c);
        }
    }
    out
}

/// Home poses on a gently curving path with the current pose at the end,
/// all looking sideways.
pub fn multi_view_poses(rng: &mut ChaCha8Rng, homes: usize, step: f64) -> (Vec<Pose>, Pose) {
    let base = Rotation::from_matrix_unchecked(Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0));
    let mut poses = Vec::new();
    let mut s = Vec3::zeros();
    for _ in 0..=homes {
        let r = nearby_rotation(rng, &base, 0.05);
        poses.push(Pose::new(r, s));
        s += Vec3::new(step, rng.random_range(-0.3..0.3) * step, rng.random_range(-0.1..0.1) * step);
    }
    let cur = poses.pop().unwrap();
    (poses, cur)
}
