//! Synthetic estuary datasets with exact ground truth.
//!
//! A boat moves at constant speed along a yaw-rate profile while waves rock
//! it in roll and pitch. A camera on one side of the hull looks sideways at
//! landmarks whose depths span several orders of magnitude. Every frame
//! detects a fixed number of new features; each is tracked until it expires
//! or leaves the image. Gyro and GPS streams are derived analytically from
//! the same motion and then corrupted.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::dataset::{Dataset, GpsFix, GroundTruth, TrackObservation};
use crate::geometry::{Correspondence, NormalizedProjection, Pose, Rotation};
use crate::imu::{self, FrameClock, GyroSample, ImuAlignment};
use crate::pipeline::{CameraIntrinsics, PipelineConfig};
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParameterError {
    #[error("invalid parameter {name}: {reason}")]
    Invalid { name: &'static str, reason: &'static str },
    #[error("no landmark is ever visible")]
    NothingVisible,
}

fn invalid(name: &'static str, reason: &'static str) -> ParameterError {
    ParameterError::Invalid { name, reason }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShoreSide {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    /// New feature detections per frame.
    pub landmark_count: usize,
    pub depth_min: f64,
    pub depth_max: f64,
    pub shore_side: ShoreSide,
    /// Longest feature track, frames.
    pub track_max: usize,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self { landmark_count: 30, depth_min: 5.0, depth_max: 3000.0, shore_side: ShoreSide::Left, track_max: 5, seed: 1 }
    }
}

/// Piecewise-linear yaw rate through `(time s, rate rad/s)` knots, held
/// constant outside the knot range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct YawProfile {
    pub knots: Vec<(f64, f64)>,
}

impl YawProfile {
    pub fn constant(rate: f64) -> Self {
        Self { knots: alloc::vec![(0.0, rate)] }
    }

    /// Gentle meanders, a few degrees per second at most.
    pub fn meander() -> Self {
        Self {
            knots: alloc::vec![
                (0.0, 0.0),
                (8.0, 0.03),
                (20.0, -0.025),
                (35.0, 0.02),
                (50.0, -0.03),
                (70.0, 0.015),
                (90.0, -0.02),
                (110.0, 0.025),
                (130.0, 0.0),
            ],
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        let k = &self.knots;
        match k.len() {
            0 => 0.0,
            _ if t <= k[0].0 => k[0].1,
            n if t >= k[n - 1].0 => k[n - 1].1,
            _ => {
                let i = k.partition_point(|p| p.0 <= t) - 1;
                let (t0, r0) = k[i];
                let (t1, r1) = k[i + 1];
                r0 + (r1 - r0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `∫₀ᵗ rate`, exact for the piecewise-linear profile.
    pub fn heading(&self, t: f64) -> f64 {
        let mut breaks: Vec<f64> = self.knots.iter().map(|k| k.0).filter(|&x| x > 0.0 && x < t).collect();
        breaks.insert(0, 0.0);
        breaks.push(t);
        breaks.windows(2).map(|w| 0.5 * (self.rate(w[0]) + self.rate(w[1])) * (w[1] - w[0])).sum()
    }

    fn validate(&self) -> Result<(), ParameterError> {
        if self.knots.iter().any(|k| !(k.0.is_finite() && k.1.is_finite())) {
            return Err(invalid("yaw_profile", "knots must be finite"));
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("yaw_profile", "knot times must increase"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionParams {
    pub duration: f64,
    pub fps: f64,
    pub imu_rate: f64,
    pub gps_rate: f64,
    /// Speed through the water, m/s.
    pub speed: f64,
    /// Initial heading, rad counter-clockwise from east.
    pub heading: f64,
    pub yaw_profile: YawProfile,
    pub wave_amplitude_deg: f64,
    pub wave_period: f64,
    pub camera_height: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            duration: 60.0,
            fps: 25.0,
            imu_rate: 150.0,
            gps_rate: 1.0,
            speed: 3.1,
            heading: 0.0,
            yaw_profile: YawProfile::meander(),
            wave_amplitude_deg: 3.0,
            wave_period: 2.0,
            camera_height: 1.5,
        }
    }
}

impl MotionParams {
    pub fn frame_count(&self) -> usize {
        (self.duration * self.fps + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub pixel_sigma: f64,
    pub outlier_rate: f64,
    /// Gyro white noise density, rad/s/√Hz.
    pub gyro_sigma: f64,
    /// Constant gyro bias in IMU axes, rad/s.
    pub gyro_bias: Vec3,
    pub sog_sigma: f64,
    pub gps_sigma: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn none() -> Self {
        Self {
            pixel_sigma: 0.0,
            outlier_rate: 0.0,
            gyro_sigma: 0.0,
            gyro_bias: Vec3::zeros(),
            sog_sigma: 0.0,
            gps_sigma: 0.0,
            seed: 0,
        }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            pixel_sigma: 0.5,
            outlier_rate: 0.1,
            gyro_sigma: 1e-4,
            gyro_bias: Vec3::zeros(),
            sog_sigma: 0.05,
            gps_sigma: 1.5,
            seed: 2,
        }
    }
}

/// Axes of the IMU used by the simulated rig: x and y swapped, z flipped.
pub fn rig_alignment() -> ImuAlignment {
    ImuAlignment::new(Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0)).expect("permutation matrix")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dataset: Dataset,
    pub truth: GroundTruth,
    /// Estimator configuration matching the simulated rig: intrinsics, IMU
    /// alignment and the true first-frame orientation.
    pub config: PipelineConfig,
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Camera axes in the body frame (x forward, y left, z up), column-wise.
fn mount(side: ShoreSide) -> Mat3 {
    match side {
        ShoreSide::Left => Mat3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0),
        ShoreSide::Right => Mat3::new(-1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0),
    }
}

// 8-point Gauss-Legendre on [-1, 1].
const GL_NODES: [f64; 4] =
    [0.183_434_642_495_649_78, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_2];
const GL_WEIGHTS: [f64; 4] =
    [0.362_683_783_378_361_77, 0.313_706_645_877_887_05, 0.222_381_034_453_374_34, 0.101_228_536_290_376_69];

/// Analytic boat motion.
struct Motion<'a> {
    p: &'a MotionParams,
    side: ShoreSide,
}

impl Motion<'_> {
    fn wave(&self) -> (f64, f64) {
        (self.p.wave_amplitude_deg.to_radians(), 2.0 * PI / self.p.wave_period)
    }

    /// (roll, pitch, yaw) and their time derivatives.
    fn attitude(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let (a, w) = self.wave();
        let roll = a * (w * t).sin();
        let pitch = 0.5 * a * (w * t + PI / 3.0).sin();
        let droll = a * w * (w * t).cos();
        let dpitch = 0.5 * a * w * (w * t + PI / 3.0).cos();
        let yaw = self.p.heading + self.p.yaw_profile.heading(t);
        ([roll, pitch, yaw], [droll, dpitch, self.p.yaw_profile.rate(t)])
    }

    fn camera_rotation(&self, t: f64) -> Rotation {
        let ([roll, pitch, yaw], _) = self.attitude(t);
        Rotation::from_matrix_unchecked(rot_z(yaw) * rot_y(pitch) * rot_x(roll) * mount(self.side))
    }

    /// Angular velocity in camera axes.
    fn camera_rate(&self, t: f64) -> Vec3 {
        let ([roll, pitch, _], [droll, dpitch, dyaw]) = self.attitude(t);
        let rx = rot_x(roll);
        let ry = rot_y(pitch);
        let body = rx.transpose() * ry.transpose() * Vec3::new(0.0, 0.0, dyaw)
            + rx.transpose() * Vec3::new(0.0, dpitch, 0.0)
            + Vec3::new(droll, 0.0, 0.0);
        mount(self.side).transpose() * body
    }

    /// Horizontal displacement over `[t0, t1]`, split at the yaw knots.
    fn displacement(&self, t0: f64, t1: f64) -> Vec3 {
        let mut breaks: Vec<f64> =
            self.p.yaw_profile.knots.iter().map(|k| k.0).filter(|&x| x > t0 && x < t1).collect();
        breaks.insert(0, t0);
        breaks.push(t1);
        let mut d = Vec3::zeros();
        for w in breaks.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                for t in [mid - half * x, mid + half * x] {
                    let yaw = self.p.heading + self.p.yaw_profile.heading(t);
                    d += Vec3::new(yaw.cos(), yaw.sin(), 0.0) * (wt * half);
                }
            }
        }
        d * self.p.speed
    }
}

fn validate(scene: &SceneParams, motion: &MotionParams, noise: &NoiseParams) -> Result<(), ParameterError> {
    if scene.landmark_count == 0 {
        return Err(ParameterError::NothingVisible);
    }
    if !(scene.depth_min > 0.0 && scene.depth_max > scene.depth_min && scene.depth_max.is_finite()) {
        return Err(invalid("depth", "need 0 < depth_min < depth_max"));
    }
    if scene.track_max < 2 {
        return Err(invalid("track_max", "tracks need at least two frames"));
    }
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if !(positive(motion.duration) && positive(motion.fps) && positive(motion.imu_rate) && positive(motion.gps_rate)) {
        return Err(invalid("rates", "duration and rates must be positive"));
    }
    if motion.fps > motion.imu_rate {
        return Err(invalid("fps", "frame rate exceeds the IMU rate"));
    }
    if motion.frame_count() < 2 {
        return Err(invalid("duration", "run must contain at least two frames"));
    }
    if !(motion.speed >= 0.0 && motion.speed.is_finite()) {
        return Err(invalid("speed", "must be non-negative"));
    }
    if !(positive(motion.wave_period) && motion.wave_amplitude_deg.is_finite()) {
        return Err(invalid("wave", "period must be positive"));
    }
    motion.yaw_profile.validate()?;
    let nonneg = |x: f64| x >= 0.0 && x.is_finite();
    if !(nonneg(noise.pixel_sigma)
        && nonneg(noise.gyro_sigma)
        && nonneg(noise.sog_sigma)
        && nonneg(noise.gps_sigma)
        && noise.gyro_bias.iter().all(|b| b.is_finite()))
    {
        return Err(invalid("noise", "must be non-negative"));
    }
    if !(0.0..=1.0).contains(&noise.outlier_rate) {
        return Err(invalid("outlier_rate", "must lie in [0, 1]"));
    }
    Ok(())
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

/// Noise generators use ChaCha streams 1.. so that equal scene and noise
/// seeds still give independent draws (the scene uses stream 0).
fn noise_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + 1);
    rng
}

/// Generates a dataset, its ground truth and a matching estimator
/// configuration. Deterministic for given parameters; the scene stream and
/// the noise stream are independent.
pub fn generate(
    scene: &SceneParams,
    motion: &MotionParams,
    noise: &NoiseParams,
    k: &CameraIntrinsics,
) -> Result<Simulation, ParameterError> {
    validate(scene, motion, noise)?;
    k.validate().map_err(|_| invalid("intrinsics", "invalid camera intrinsics"))?;
    let m = Motion { p: motion, side: scene.shore_side };
    let n_frames = motion.frame_count();

    let frames: Vec<FrameClock> =
        (0..n_frames).map(|i| FrameClock { frame_index: i, t: i as f64 / motion.fps }).collect();
    let mut poses = Vec::with_capacity(n_frames);
    let mut position = Vec3::new(0.0, 0.0, motion.camera_height);
    for (i, f) in frames.iter().enumerate() {
        if i > 0 {
            position += m.displacement(frames[i - 1].t, f.t);
        }
        poses.push(Pose::new(m.camera_rotation(f.t), position));
    }

    // Scene: landmarks spawned in front of the camera, tracked while visible.
    let mut scene_rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let (ln_min, ln_max) = (scene.depth_min.ln(), scene.depth_max.ln());
    let mut landmarks = BTreeMap::new();
    let mut true_obs: Vec<TrackObservation> = Vec::new();
    let mut next_id = 0u64;
    for (i, pose) in poses.iter().enumerate() {
        for _ in 0..scene.landmark_count {
            let u = scene_rng.random_range(0.0..k.width);
            let v = scene_rng.random_range(0.0..k.height);
            let depth = scene_rng.random_range(ln_min..ln_max).exp();
            let ray = Vec3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
            let point = pose.s + pose.r.apply(&(ray * depth));
            let id = next_id;
            next_id += 1;
            landmarks.insert(id, point);
            for (j, later) in poses.iter().enumerate().skip(i).take(scene.track_max) {
                let Some(p) = later.project(&point) else { break };
                let (pu, pv) = if j == i { (u, v) } else { k.to_pixel(&p) };
                if !k.contains(pu, pv) {
                    break;
                }
                true_obs.push(TrackObservation { frame: j, feature_id: id, u: pu, v: pv });
            }
        }
    }
    true_obs.sort_by_key(|o| (o.frame, o.feature_id));

    // Noise: pixel jitter and outlier replacement.
    let mut pixel_rng = noise_stream(noise.seed, 0);
    let mut outliers = Vec::new();
    let observations: Vec<TrackObservation> = true_obs
        .iter()
        .map(|o| {
            let replace = noise.outlier_rate > 0.0 && pixel_rng.random::<f64>() < noise.outlier_rate;
            if replace {
                outliers.push((o.frame, o.feature_id));
                let u = pixel_rng.random_range(0.0..k.width);
                let v = pixel_rng.random_range(0.0..k.height);
                TrackObservation { u, v, ..*o }
            } else {
                let du = gaussian(&mut pixel_rng, noise.pixel_sigma);
                let dv = gaussian(&mut pixel_rng, noise.pixel_sigma);
                TrackObservation { u: o.u + du, v: o.v + dv, ..*o }
            }
        })
        .collect();

    // Gyro in IMU axes, covering one sample past the last frame.
    let alignment = rig_alignment();
    let mut gyro_rng = noise_stream(noise.seed, 1);
    let per_sample = noise.gyro_sigma * motion.imu_rate.sqrt();
    let t_end = frames[n_frames - 1].t;
    let n_imu = (t_end * motion.imu_rate).ceil() as usize + 2;
    let imu: Vec<GyroSample> = (0..n_imu)
        .map(|j| {
            let t = j as f64 / motion.imu_rate;
            let w_cam = m.camera_rate(t);
            let mut w = alignment.matrix().transpose() * w_cam + noise.gyro_bias;
            for c in w.iter_mut() {
                *c += gaussian(&mut gyro_rng, per_sample);
            }
            GyroSample { t, w }
        })
        .collect();

    // GPS fixes on the frames nearest to each fix time.
    let mut gps_rng = noise_stream(noise.seed, 2);
    let mut gps = Vec::new();
    let mut last_frame = None;
    for j in 0.. {
        let frame = (j as f64 * motion.fps / motion.gps_rate).round() as usize;
        if frame >= n_frames {
            break;
        }
        if last_frame == Some(frame) {
            continue;
        }
        last_frame = Some(frame);
        let s = poses[frame].s;
        gps.push(GpsFix {
            frame,
            east: s.x + gaussian(&mut gps_rng, noise.gps_sigma),
            north: s.y + gaussian(&mut gps_rng, noise.gps_sigma),
            sog: (motion.speed + gaussian(&mut gps_rng, noise.sog_sigma)).max(0.0),
        });
    }

    let config = PipelineConfig {
        intrinsics: *k,
        imu_alignment: alignment,
        initial_orientation: poses[0].r,
        ..PipelineConfig::default()
    };
    Ok(Simulation {
        dataset: Dataset { frames, observations, imu, gps },
        truth: GroundTruth {
            poses: poses.into_iter().enumerate().collect(),
            landmarks,
            outliers,
        },
        config,
    })
}

/// How a two-view outlier replaces the current-view observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierModel {
    /// A ray drawn uniformly from the forward hemisphere of the camera.
    RandomRay,
    /// A pixel drawn uniformly from the image.
    InImage,
}

/// Random two-view scene for exercising the robust estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoViewParams {
    pub points: usize,
    pub outlier_rate: f64,
    pub outlier_model: OutlierModel,
    pub pixel_sigma: f64,
    /// Baseline length, meters.
    pub baseline: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    /// Largest rotation between the two views, rad.
    pub max_rotation: f64,
}

impl Default for TwoViewParams {
    fn default() -> Self {
        Self {
            points: 100,
            outlier_rate: 0.4,
            outlier_model: OutlierModel::RandomRay,
            pixel_sigma: 0.5,
            baseline: 1.0,
            depth_min: 5.0,
            depth_max: 50.0,
            max_rotation: 10f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoViewProblem {
    pub correspondences: Vec<Correspondence>,
    /// True where the current-view pixel was replaced by a random one.
    pub outliers: Vec<bool>,
    pub home: Pose,
    pub current: Pose,
}

/// Home view at the origin with a random orientation, current view one
/// baseline away in a random direction; points are drawn in the home image
/// until `params.points` of them are also seen by the current view. Outliers
/// replace the current-view observation according to `params.outlier_model`.
pub fn two_view_problem(
    params: &TwoViewParams,
    k: &CameraIntrinsics,
    seed: u64,
) -> Result<TwoViewProblem, ParameterError> {
    if !(params.depth_min > 0.0 && params.depth_max >= params.depth_min) {
        return Err(invalid("depth", "need 0 < depth_min <= depth_max"));
    }
    if !(params.baseline > 0.0 && params.pixel_sigma >= 0.0 && params.max_rotation >= 0.0) {
        return Err(invalid("two_view", "baseline must be positive, noise and rotation non-negative"));
    }
    if !(0.0..=1.0).contains(&params.outlier_rate) {
        return Err(invalid("outlier_rate", "must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let r_home = Rotation::exp(&(unit(&mut rng) * rng.random_range(0.0..PI)));
    let turn = Rotation::exp(&(unit(&mut rng) * rng.random_range(0.0..=params.max_rotation)));
    let r_cur = Rotation::from_matrix_unchecked(turn.matrix() * r_home.matrix());
    let home = Pose::new(r_home, Vec3::zeros());
    // Keep the baseline away from the optical axis of the home view so that
    // most points stay visible.
    let dir = loop {
        let d = unit(&mut rng);
        if r_home.transpose().apply(&d).z.abs() < 0.9 {
            break d;
        }
    };
    let current = Pose::new(r_cur, dir * params.baseline);
    let (ln_min, ln_max) = (params.depth_min.ln(), params.depth_max.ln());
    let mut correspondences = Vec::with_capacity(params.points);
    let mut outliers = Vec::with_capacity(params.points);
    let mut attempts = 0;
    while correspondences.len() < params.points {
        attempts += 1;
        if attempts > 1000 * (params.points + 1) {
            return Err(ParameterError::NothingVisible);
        }
        let u = rng.random_range(0.0..k.width);
        let v = rng.random_range(0.0..k.height);
        let depth = if ln_max > ln_min { rng.random_range(ln_min..ln_max).exp() } else { params.depth_min };
        let point = home.r.apply(&(Vec3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0) * depth));
        let Some(p) = current.project(&point) else { continue };
        let (cu, cv) = k.to_pixel(&p);
        if !k.contains(cu, cv) {
            continue;
        }
        let bad = rng.random::<f64>() < params.outlier_rate;
        let (hu, hv) = (u + gaussian(&mut rng, params.pixel_sigma), v + gaussian(&mut rng, params.pixel_sigma));
        let cur = match (bad, params.outlier_model) {
            (true, OutlierModel::RandomRay) => loop {
                let d = unit(&mut rng);
                if d.z > 1e-3 {
                    break NormalizedProjection::new(d.x / d.z, d.y / d.z);
                }
            },
            (true, OutlierModel::InImage) => k.normalize(
                rng.random_range(0.0..k.width) + gaussian(&mut rng, params.pixel_sigma),
                rng.random_range(0.0..k.height) + gaussian(&mut rng, params.pixel_sigma),
            ),
            (false, _) => k.normalize(
                cu + gaussian(&mut rng, params.pixel_sigma),
                cv + gaussian(&mut rng, params.pixel_sigma),
            ),
        };
        correspondences.push(Correspondence {
            home: k.normalize(hu, hv),
            cur,
            r_home: home.r,
            r_cur: current.r,
            s_home: home.s,
        });
        outliers.push(bad);
    }
    Ok(TwoViewProblem { correspondences, outliers, home, current })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsistencyError {
    #[error("frame {0} has no ground-truth pose")]
    MissingPose(usize),
    #[error("tracks row {row} (feature {feature}) has no ground-truth landmark")]
    UnknownLandmark { row: usize, feature: u64 },
    #[error("tracks row {row} (frame {frame}, feature {feature}) reprojects {residual} px off, limit {limit} px")]
    Reprojection { row: usize, frame: usize, feature: u64, residual: f64, limit: f64 },
    #[error("pixel residual std {std} px deviates from {expected} px by more than 10%")]
    PixelNoise { std: f64, expected: f64 },
    #[error("integrated gyro drifts {degrees}° from the true orientation at frame {frame}, limit {limit}°")]
    GyroDrift { frame: usize, degrees: f64, limit: f64 },
    #[error("GPS residuals inconsistent with sigma {sigma} m: {what} = {value}")]
    Gps { sigma: f64, what: &'static str, value: f64 },
    #[error("gyro stream does not cover the frames")]
    ImuCoverage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub rows_checked: usize,
    pub max_pixel_residual: f64,
    /// Per-coordinate standard deviation of inlier pixel residuals.
    pub pixel_residual_std: f64,
    pub max_gyro_drift_deg: f64,
    pub gps_residual_std: f64,
}

/// Cross-checks a dataset against its ground truth: reprojection of every
/// non-outlier track row, the pixel residual spread, the integrated gyro
/// against the true orientations, and the GPS residual statistics.
pub fn oracle_check(
    dataset: &Dataset,
    truth: &GroundTruth,
    config: &PipelineConfig,
    noise: &NoiseParams,
) -> Result<OracleReport, ConsistencyError> {
    let poses: BTreeMap<usize, Pose> = truth.poses.iter().copied().collect();
    let outliers: alloc::collections::BTreeSet<(usize, u64)> = truth.outliers.iter().copied().collect();
    let k = &config.intrinsics;
    let limit = 6.0 * noise.pixel_sigma + 1e-6;
    let (mut max_res, mut sum_sq, mut count) = (0.0f64, 0.0, 0usize);
    for (row, o) in dataset.observations.iter().enumerate() {
        if outliers.contains(&(o.frame, o.feature_id)) {
            continue;
        }
        let pose = poses.get(&o.frame).ok_or(ConsistencyError::MissingPose(o.frame))?;
        let point = truth
            .landmarks
            .get(&o.feature_id)
            .ok_or(ConsistencyError::UnknownLandmark { row, feature: o.feature_id })?;
        let residual = match pose.project(point) {
            Some(p) => {
                let (u, v) = k.to_pixel(&p);
                sum_sq += (o.u - u).powi(2) + (o.v - v).powi(2);
                count += 2;
                (o.u - u).hypot(o.v - v)
            }
            None => f64::INFINITY,
        };
        if !(residual <= limit) {
            return Err(ConsistencyError::Reprojection { row, frame: o.frame, feature: o.feature_id, residual, limit });
        }
        max_res = max_res.max(residual);
    }
    let pixel_std = if count > 0 { (sum_sq / count as f64).sqrt() } else { 0.0 };
    if noise.pixel_sigma > 0.0 && count >= 100 && (pixel_std - noise.pixel_sigma).abs() > 0.1 * noise.pixel_sigma {
        return Err(ConsistencyError::PixelNoise { std: pixel_std, expected: noise.pixel_sigma });
    }

    // The bias is known here, so only white noise remains in the integral.
    let first = dataset.frames.first().ok_or(ConsistencyError::ImuCoverage)?;
    let r0 = poses.get(&first.frame_index).ok_or(ConsistencyError::MissingPose(first.frame_index))?.r;
    let integrated = imu::integrate(&dataset.imu, &config.imu_alignment, &dataset.frames, &r0, &noise.gyro_bias)
        .map_err(|_| ConsistencyError::ImuCoverage)?;
    let duration = dataset.frames.last().map_or(0.0, |f| f.t - first.t);
    let gyro_limit = 0.05 + (6.0 * noise.gyro_sigma * duration.sqrt()).to_degrees();
    let mut max_drift = 0.0f64;
    for (frame, r) in &integrated {
        let truth_r = poses.get(frame).ok_or(ConsistencyError::MissingPose(*frame))?.r;
        let degrees = (r.transpose() * truth_r).angle().to_degrees();
        if !(degrees <= gyro_limit) {
            return Err(ConsistencyError::GyroDrift { frame: *frame, degrees, limit: gyro_limit });
        }
        max_drift = max_drift.max(degrees);
    }

    let mut residuals = Vec::new();
    for g in &dataset.gps {
        let s = poses.get(&g.frame).ok_or(ConsistencyError::MissingPose(g.frame))?.s;
        residuals.push(g.east - s.x);
        residuals.push(g.north - s.y);
    }
    let n = residuals.len() as f64;
    let gps_std = if residuals.is_empty() { 0.0 } else { (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt() };
    let sigma = noise.gps_sigma;
    if sigma == 0.0 {
        if gps_std > 1e-9 {
            return Err(ConsistencyError::Gps { sigma, what: "rms residual", value: gps_std });
        }
    } else if residuals.len() >= 8 {
        let mean = residuals.iter().sum::<f64>() / n;
        if mean.abs() > 4.0 * sigma / n.sqrt() {
            return Err(ConsistencyError::Gps { sigma, what: "mean residual", value: mean });
        }
        if (gps_std - sigma).abs() > 4.0 * sigma / (2.0 * n).sqrt() {
            return Err(ConsistencyError::Gps { sigma, what: "residual std", value: gps_std });
        }
    }
    Ok(OracleReport {
        rows_checked: count / 2,
        max_pixel_residual: max_res,
        pixel_residual_std: pixel_std,
        max_gyro_drift_deg: max_drift,
        gps_residual_std: gps_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> MotionParams {
        MotionParams { duration: 4.0, ..MotionParams::default() }
    }

    #[test]
    fn mount_columns_are_right_handed() {
        for side in [ShoreSide::Left, ShoreSide::Right] {
            let r = Rotation::from_matrix(mount(side)).unwrap();
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-15);
        }
        // Left camera looks along body +y.
        assert_eq!(mount(ShoreSide::Left).column(2).into_owned(), Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn yaw_profile_integral() {
        let p = YawProfile { knots: alloc::vec![(0.0, 0.0), (10.0, 1.0)] };
        assert!((p.heading(10.0) - 5.0).abs() < 1e-12);
        assert!((p.heading(12.0) - 7.0).abs() < 1e-12);
        assert!((p.rate(5.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn straight_run_covers_speed_times_duration() {
        let motion = MotionParams { yaw_profile: YawProfile::constant(0.0), ..short() };
        let sim = generate(&SceneParams::default(), &motion, &NoiseParams::none(), &CameraIntrinsics::default()).unwrap();
        let (_, last) = sim.truth.poses.last().unwrap();
        let expected = motion.speed * (motion.frame_count() - 1) as f64 / motion.fps;
        assert!((last.s.x - expected).abs() < 1e-9 && last.s.y.abs() < 1e-12);
    }

    #[test]
    fn camera_rate_matches_finite_difference() {
        let motion = short();
        let m = Motion { p: &motion, side: ShoreSide::Right };
        for &t in &[0.3, 1.7, 9.1] {
            let h = 1e-5;
            let ra = m.camera_rotation(t - h);
            let rb = m.camera_rotation(t + h);
            let d = (ra.transpose() * rb).to_quaternion();
            let numeric = Vec3::new(d[1], d[2], d[3]) * (4.0 / (2.0 * h)) * 0.5;
            assert!((numeric - m.camera_rate(t)).amax() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn noise_free_dataset_passes_the_oracle() {
        let sim = generate(&SceneParams::default(), &short(), &NoiseParams::none(), &CameraIntrinsics::default()).unwrap();
        sim.dataset.validate().unwrap();
        sim.dataset.tracks(5).unwrap();
        let r = oracle_check(&sim.dataset, &sim.truth, &sim.config, &NoiseParams::none()).unwrap();
        assert!(r.max_pixel_residual < 1e-9);
        assert!(r.max_gyro_drift_deg < 0.05);
    }

    #[test]
    fn zero_landmarks_is_rejected() {
        let scene = SceneParams { landmark_count: 0, ..SceneParams::default() };
        assert_eq!(
            generate(&scene, &short(), &NoiseParams::none(), &CameraIntrinsics::default()),
            Err(ParameterError::NothingVisible)
        );
    }
}
