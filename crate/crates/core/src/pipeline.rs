//! Frame-by-frame odometry: two-view bootstrap scaled by GPS speed over
//! ground, robust per-frame position from home-view correspondences, and
//! sliding-window refinement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use log::{debug, warn};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, FeatureTrack};
use crate::geometry::{Correspondence, NormalizedProjection, Pose, PositionPrior, Rotation};
use crate::imu::{self, ImuAlignment, ImuError};
use crate::refine::{self, HomeRef, RefineOptions, RefineReport, WindowObservation, WindowProblem};
use crate::robust::{self, MlesacParams, RobustError, RobustEstimate, SolveMode};
use crate::Vec3;

/// Speeds at or below this make the bootstrap scale undefined.
pub const MIN_BOOTSTRAP_SPEED: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Imu(#[from] ImuError),
    #[error("speed over ground {0} m/s is too low to fix the scale")]
    ZeroSpeed(f64),
    #[error("frame {frame}: {source}")]
    NoConsensus { frame: usize, source: RobustError },
    #[error("tracking lost at frame {frame}")]
    TrackingLost { frame: usize },
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: f64, height: f64) -> Result<Self, PipelineError> {
        let k = Self { fx, fy, cx, cy, width, height };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(PipelineError::Config("focal lengths must be positive"));
        }
        if !(self.cx >= 0.0 && self.cx <= self.width && self.cy >= 0.0 && self.cy <= self.height) {
            return Err(PipelineError::Config("principal point outside the image"));
        }
        Ok(())
    }

    pub fn normalize(&self, u: f64, v: f64) -> NormalizedProjection {
        normalize(u, v, self)
    }

    pub fn to_pixel(&self, m: &NormalizedProjection) -> (f64, f64) {
        (m.x * self.fx + self.cx, m.y * self.fy + self.cy)
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width && v >= 0.0 && v < self.height
    }
}

impl Default for CameraIntrinsics {
    /// 800×600 sensor with a 700 px focal length.
    fn default() -> Self {
        Self { fx: 700.0, fy: 700.0, cx: 400.0, cy: 300.0, width: 800.0, height: 600.0 }
    }
}

/// Pixel to normalized Euclidean coordinates.
pub fn normalize(u: f64, v: f64, k: &CameraIntrinsics) -> NormalizedProjection {
    NormalizedProjection::new((u - k.cx) / k.fx, (v - k.cy) / k.fy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub track_max: usize,
    pub refine_window: usize,
    pub refine_enabled: bool,
    pub refine: RefineOptions,
    pub mlesac: MlesacParams,
    pub min_tracks_per_frame: usize,
    pub intrinsics: CameraIntrinsics,
    pub imu_alignment: ImuAlignment,
    /// Constant gyro bias in IMU axes, rad/s.
    pub gyro_bias: Vec3,
    /// World orientation of the camera at the first frame.
    pub initial_orientation: Rotation,
    /// Relative weight of the motion prior in the per-frame position solve.
    /// Along-track position is barely observable from short-baseline
    /// epipolar constraints, so the prior carries it; the image data fixes
    /// the well-conditioned directions.
    pub motion_prior_weight: f64,
    /// Standard deviation of the predicted position, meters. When set, the
    /// final position solve weighs the prediction against the observed
    /// spread of the image constraints, so exact data is not biased by it.
    pub motion_prior_sigma: Option<f64>,
    /// Floor of the final prior weight relative to the trace of the normal
    /// matrix. Without it the along-track error of noise-free data grows
    /// geometrically from round-off.
    pub motion_prior_floor: f64,
    /// Predict each position at the bootstrap speed over ground along the
    /// last direction of travel instead of extrapolating the estimated
    /// velocity. Pairwise epipolar constraints barely observe the
    /// along-track scale when the camera centres are close to collinear.
    pub hold_speed: bool,
    pub max_coast_frames: usize,
    /// Frame gap over which the bootstrap measures the direction of travel;
    /// must be below `track_max`.
    pub bootstrap_gap: usize,
    /// Normalized coordinates beyond this magnitude are ignored.
    pub fov_limit: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            track_max: 5,
            refine_window: 3,
            refine_enabled: true,
            refine: RefineOptions { prior_weight: 100.0, ..RefineOptions::default() },
            mlesac: MlesacParams::default(),
            min_tracks_per_frame: 12,
            intrinsics: CameraIntrinsics::default(),
            imu_alignment: ImuAlignment::identity(),
            gyro_bias: Vec3::zeros(),
            initial_orientation: Rotation::identity(),
            motion_prior_weight: 1.0,
            motion_prior_sigma: Some(0.001),
            motion_prior_floor: 1e-5,
            hold_speed: true,
            max_coast_frames: 3,
            bootstrap_gap: 4,
            fov_limit: 10.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(2 <= self.refine_window && self.refine_window <= self.track_max) {
            return Err(PipelineError::Config("refine_window must lie in [2, track_max]"));
        }
        if !(1 <= self.bootstrap_gap && self.bootstrap_gap < self.track_max) {
            return Err(PipelineError::Config("bootstrap_gap must lie in [1, track_max)"));
        }
        if !(self.motion_prior_weight >= 0.0) {
            return Err(PipelineError::Config("motion_prior_weight must be non-negative"));
        }
        if !(self.motion_prior_floor >= 0.0) {
            return Err(PipelineError::Config("motion_prior_floor must be non-negative"));
        }
        if self.motion_prior_sigma.is_some_and(|s| !(s > 0.0)) {
            return Err(PipelineError::Config("motion_prior_sigma must be positive"));
        }
        self.intrinsics.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub poses: Vec<(usize, Pose)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Path length of the positions.
    pub fn length(&self) -> f64 {
        self.poses.windows(2).map(|w| (w[1].1.s - w[0].1.s).norm()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Bootstrap,
    Tracked,
    Coasted,
}

impl FrameStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrameStatus::Bootstrap => "bootstrap",
            FrameStatus::Tracked => "tracked",
            FrameStatus::Coasted => "coasted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameDiagnostic {
    pub frame: usize,
    pub status: FrameStatus,
    pub correspondences: usize,
    pub inliers: usize,
    pub score: f64,
    pub iterations: usize,
    pub refine: Option<RefineReport>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub diagnostics: Vec<FrameDiagnostic>,
    /// Set when the run stopped early; the trajectory holds the frames up to
    /// the failure.
    pub failure: Option<PipelineError>,
}

fn frame_seed(seed: u64, frame: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (frame as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Two-view initialization: robust baseline direction between the first two
/// frames, scaled by `sog · dt`. The first pose sits at the origin.
pub fn bootstrap(
    pairs: &[(NormalizedProjection, NormalizedProjection)],
    r0: &Rotation,
    r1: &Rotation,
    sog: f64,
    dt: f64,
    params: &MlesacParams,
    min_tracks: usize,
) -> Result<(Pose, Pose, RobustEstimate), PipelineError> {
    if !(sog > MIN_BOOTSTRAP_SPEED) {
        return Err(PipelineError::ZeroSpeed(sog));
    }
    if !(dt > 0.0) {
        return Err(PipelineError::InsufficientData("bootstrap frames must be separated in time"));
    }
    if pairs.len() < min_tracks {
        return Err(PipelineError::NoConsensus {
            frame: 1,
            source: RobustError::TooFewCorrespondences { needed: min_tracks, got: pairs.len() },
        });
    }
    let cs: Vec<Correspondence> = pairs
        .iter()
        .map(|(h, c)| Correspondence { home: *h, cur: *c, r_home: *r0, r_cur: *r1, s_home: Vec3::zeros() })
        .collect();
    let est = robust::mlesac_position(&cs, params, SolveMode::Homogeneous)
        .map_err(|source| PipelineError::NoConsensus { frame: 1, source })?;
    let direction = est.position / est.position.norm();
    let p0 = Pose::new(*r0, Vec3::zeros());
    let p1 = Pose::new(*r1, direction * (sog * dt));
    Ok((p0, p1, est))
}

/// Speed over ground used for the bootstrap: the last fix at or before the
/// first frame, or the earliest fix when none precedes it.
pub fn bootstrap_speed(dataset: &Dataset) -> Option<f64> {
    let first = dataset.frames.first()?.frame_index;
    dataset
        .gps
        .iter()
        .filter(|g| g.frame <= first)
        .max_by_key(|g| g.frame)
        .or_else(|| dataset.gps.iter().min_by_key(|g| g.frame))
        .map(|g| g.sog)
}

/// Odometry state machine over a loaded dataset.
pub struct Odometry<'a> {
    config: &'a PipelineConfig,
    dataset: &'a Dataset,
    tracks: BTreeMap<u64, FeatureTrack>,
    /// Features observed per frame index.
    visible: BTreeMap<usize, Vec<u64>>,
    orientations: BTreeMap<usize, Rotation>,
    poses: BTreeMap<usize, Pose>,
    inliers: BTreeMap<usize, BTreeSet<u64>>,
    diagnostics: Vec<FrameDiagnostic>,
    coasting: usize,
    next: usize,
    /// Speed over ground used for the bootstrap.
    speed: f64,
}

impl<'a> Odometry<'a> {
    pub fn new(dataset: &'a Dataset, config: &'a PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        if dataset.frames.len() < 2 {
            return Err(PipelineError::InsufficientData("need at least two frames"));
        }
        dataset.validate()?;
        let tracks = dataset.tracks(config.track_max)?;
        let mut visible: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for t in tracks.values() {
            for f in t.pixels.keys() {
                visible.entry(*f).or_default().push(t.id);
            }
        }
        let orientations = imu::integrate(
            &dataset.imu,
            &config.imu_alignment,
            &dataset.frames,
            &config.initial_orientation,
            &config.gyro_bias,
        )?
        .into_iter()
        .collect();
        Ok(Self {
            config,
            dataset,
            tracks,
            visible,
            orientations,
            poses: BTreeMap::new(),
            inliers: BTreeMap::new(),
            diagnostics: Vec::new(),
            coasting: 0,
            next: 0,
            speed: 0.0,
        })
    }

    pub fn orientation(&self, frame: usize) -> Option<Rotation> {
        self.orientations.get(&frame).copied()
    }

    fn projection(&self, id: u64, frame: usize) -> Option<NormalizedProjection> {
        let (u, v) = self.tracks.get(&id)?.pixel(frame)?;
        let m = self.config.intrinsics.normalize(u, v);
        m.is_within(self.config.fov_limit).then_some(m)
    }

    /// Estimates the first two poses. The direction of travel is taken from
    /// the longest baseline the first frame's tracks offer (up to
    /// `bootstrap_gap` frames), where parallax is largest; the second pose is
    /// placed along it at the GPS speed.
    pub fn bootstrap(&mut self) -> Result<(Pose, Pose), PipelineError> {
        let f0 = self.dataset.frames[0];
        let f1 = self.dataset.frames[1];
        let gap = self.config.bootstrap_gap.clamp(1, self.dataset.frames.len() - 1);
        let fg = self.dataset.frames[gap];
        let sog = bootstrap_speed(self.dataset)
            .ok_or(PipelineError::InsufficientData("no GPS fix for the bootstrap speed"))?;
        let r0 = self.orientations[&f0.frame_index];
        let r1 = self.orientations[&f1.frame_index];
        let rg = self.orientations[&fg.frame_index];
        let mut pair_ids = Vec::new();
        let mut pairs = Vec::new();
        for id in self.visible.get(&fg.frame_index).into_iter().flatten() {
            if self.tracks[id].home_frame != f0.frame_index {
                continue;
            }
            if let (Some(h), Some(c)) = (self.projection(*id, f0.frame_index), self.projection(*id, fg.frame_index)) {
                pair_ids.push(*id);
                pairs.push((h, c));
            }
        }
        let params = MlesacParams { seed: frame_seed(self.config.mlesac.seed, f1.frame_index), ..self.config.mlesac };
        let (p0, pg, est) = bootstrap(
            &pairs,
            &r0,
            &rg,
            sog,
            fg.t - f0.t,
            &params,
            self.config.min_tracks_per_frame,
        )
        .map_err(|e| match e {
            PipelineError::NoConsensus { source, .. } => {
                PipelineError::NoConsensus { frame: f1.frame_index, source }
            }
            other => other,
        })?;
        let mut p1 = Pose::new(r1, pg.s * ((f1.t - f0.t) / (fg.t - f0.t)));
        let mut inliers: BTreeSet<u64> = est
            .inliers
            .iter()
            .map(|&i| pair_ids[i])
            .filter(|id| self.tracks[id].pixel(f1.frame_index).is_some())
            .collect();
        if gap > 1 {
            // The chord direction is off the first step on a curved path;
            // place frame 1 against both ends of the chord, with the
            // interpolated position as the along-track prior.
            match self.bracketed(f1.frame_index, &p0, &Pose::new(rg, pg.s), fg.frame_index, p1.s) {
                Ok((s, ids)) => {
                    p1.s = s;
                    inliers = ids;
                }
                Err(e) => debug!("frame {}: keeping the interpolated bootstrap pose: {e}", f1.frame_index),
            }
        }
        self.poses.insert(f0.frame_index, p0);
        self.poses.insert(f1.frame_index, p1);
        self.inliers.insert(f1.frame_index, inliers);
        for (frame, e) in [(f0.frame_index, None), (f1.frame_index, Some(&est))] {
            self.diagnostics.push(FrameDiagnostic {
                frame,
                status: FrameStatus::Bootstrap,
                correspondences: if e.is_some() { pairs.len() } else { 0 },
                inliers: e.map_or(0, |e| e.inliers.len()),
                score: e.map_or(0.0, |e| e.score),
                iterations: e.map_or(0, |e| e.iterations_used),
                refine: None,
                note: None,
            });
        }
        self.next = 2;
        self.speed = sog;
        Ok((p0, p1))
    }

    /// Position of `frame` from correspondences against a known earlier pose
    /// (tracks homed there) and a known later pose. Returns the position and
    /// the inlier ids homed at the earlier frame.
    fn bracketed(
        &self,
        frame: usize,
        before: &Pose,
        after: &Pose,
        after_frame: usize,
        prior: Vec3,
    ) -> Result<(Vec3, BTreeSet<u64>), RobustError> {
        let before_frame = self.dataset.frames[0].frame_index;
        let r_cur = self.orientations[&frame];
        let mut ids = Vec::new();
        let mut cs = Vec::new();
        for id in self.visible.get(&frame).into_iter().flatten() {
            let Some(c) = self.projection(*id, frame) else { continue };
            if self.tracks[id].home_frame == before_frame {
                if let Some(h) = self.projection(*id, before_frame) {
                    ids.push(Some(*id));
                    cs.push(Correspondence { home: h, cur: c, r_home: before.r, r_cur, s_home: before.s });
                }
            }
            if let Some(h) = self.projection(*id, after_frame) {
                ids.push(None);
                cs.push(Correspondence { home: h, cur: c, r_home: after.r, r_cur, s_home: after.s });
            }
        }
        let params = MlesacParams { seed: frame_seed(self.config.mlesac.seed, frame) ^ 1, ..self.config.mlesac };
        let prior = PositionPrior {
            position: prior,
            relative_weight: self.config.motion_prior_weight.max(1e-6),
            sigma: self.config.motion_prior_sigma,
            min_relative_weight: self.config.motion_prior_floor,
        };
        let est = robust::mlesac_position(&cs, &params, SolveMode::AnchoredWithPrior(prior))?;
        Ok((est.position, est.inliers.iter().filter_map(|&i| ids[i]).collect()))
    }

    fn predicted_position(&self, pos: usize) -> Vec3 {
        let frames = &self.dataset.frames;
        let a = &self.poses[&frames[pos - 1].frame_index];
        if pos < 2 {
            return a.s;
        }
        let b = &self.poses[&frames[pos - 2].frame_index];
        let dt_prev = frames[pos - 1].t - frames[pos - 2].t;
        let dt = frames[pos].t - frames[pos - 1].t;
        let velocity = (a.s - b.s) / dt_prev;
        let norm = velocity.norm();
        if self.config.hold_speed && norm > 0.0 {
            a.s + velocity * (self.speed * dt / norm)
        } else {
            a.s + velocity * dt
        }
    }

    /// Correspondences of frame `frame` against every track's home view with
    /// an estimated pose, with the matching feature ids.
    pub fn correspondences(&self, frame: usize) -> (Vec<u64>, Vec<Correspondence>) {
        let r_cur = self.orientations[&frame];
        let mut ids = Vec::new();
        let mut cs = Vec::new();
        for id in self.visible.get(&frame).into_iter().flatten() {
            let home = self.tracks[id].home_frame;
            if home >= frame {
                continue;
            }
            let Some(home_pose) = self.poses.get(&home) else { continue };
            if let (Some(h), Some(c)) = (self.projection(*id, home), self.projection(*id, frame)) {
                ids.push(*id);
                cs.push(Correspondence { home: h, cur: c, r_home: home_pose.r, r_cur, s_home: home_pose.s });
            }
        }
        (ids, cs)
    }

    /// Frame index that the next [`Odometry::step`] will estimate.
    pub fn next_frame(&self) -> Option<usize> {
        self.dataset.frames.get(self.next.max(2)).map(|c| c.frame_index)
    }

    /// Robust position of the next frame from `cs`, exactly as
    /// [`Odometry::step`] computes it. Call after the bootstrap.
    pub fn solve_next(&self, cs: &[Correspondence]) -> Result<RobustEstimate, RobustError> {
        self.solve_at(self.next.max(2), cs)
    }

    fn solve_at(&self, pos: usize, cs: &[Correspondence]) -> Result<RobustEstimate, RobustError> {
        let frame = self.dataset.frames[pos].frame_index;
        let params = MlesacParams { seed: frame_seed(self.config.mlesac.seed, frame), ..self.config.mlesac };
        let mode = if self.config.motion_prior_weight > 0.0 {
            SolveMode::AnchoredWithPrior(PositionPrior {
                position: self.predicted_position(pos),
                relative_weight: self.config.motion_prior_weight,
                sigma: self.config.motion_prior_sigma,
                min_relative_weight: self.config.motion_prior_floor,
            })
        } else {
            SolveMode::Anchored
        };
        robust::mlesac_position(cs, &params, mode)
    }

    /// Estimates the pose of the next frame. Returns `Ok(None)` once every
    /// frame has been processed.
    pub fn step(&mut self) -> Result<Option<Pose>, PipelineError> {
        if self.next < 2 {
            self.bootstrap()?;
        }
        let pos = self.next;
        let Some(clock) = self.dataset.frames.get(pos).copied() else { return Ok(None) };
        let frame = clock.frame_index;
        let r_t = self.orientations[&frame];
        let predicted = self.predicted_position(pos);
        let (ids, cs) = self.correspondences(frame);
        let estimate = self.solve_at(pos, &cs);
        self.next += 1;
        let est = match estimate {
            Ok(est) => est,
            Err(source) => {
                self.coasting += 1;
                if self.coasting > self.config.max_coast_frames {
                    return Err(PipelineError::TrackingLost { frame });
                }
                warn!("frame {frame}: {source}; coasting ({}/{})", self.coasting, self.config.max_coast_frames);
                let pose = Pose::new(r_t, predicted);
                self.poses.insert(frame, pose);
                self.diagnostics.push(FrameDiagnostic {
                    frame,
                    status: FrameStatus::Coasted,
                    correspondences: cs.len(),
                    inliers: 0,
                    score: 0.0,
                    iterations: 0,
                    refine: None,
                    note: Some(source.to_string()),
                });
                return Ok(Some(pose));
            }
        };
        self.coasting = 0;
        let inliers: BTreeSet<u64> = est.inliers.iter().map(|&i| ids[i]).collect();
        self.poses.insert(frame, Pose::new(r_t, est.position));
        self.inliers.insert(frame, inliers);
        let mut diag = FrameDiagnostic {
            frame,
            status: FrameStatus::Tracked,
            correspondences: cs.len(),
            inliers: est.inliers.len(),
            score: est.score,
            iterations: est.iterations_used,
            refine: None,
            note: None,
        };
        if self.config.refine_enabled {
            match self.refine_window(pos) {
                Ok(report) => diag.refine = report,
                Err(e) => {
                    debug!("frame {frame}: refinement skipped: {e}");
                    diag.note = Some(e.to_string());
                }
            }
        }
        self.diagnostics.push(diag);
        Ok(Some(self.poses[&frame]))
    }

    fn refine_window(&mut self, pos: usize) -> Result<Option<RefineReport>, refine::RefineError> {
        let n = self.config.refine_window.min(pos + 1);
        if n < 2 {
            return Ok(None);
        }
        let window: Vec<usize> =
            self.dataset.frames[pos + 1 - n..=pos].iter().map(|c| c.frame_index).collect();
        let index_of = |f: usize| window.iter().position(|&w| w == f);
        let poses: Vec<Pose> = window.iter().map(|f| self.poses[f]).collect();
        let mut observations = Vec::new();
        for (k, &frame) in window.iter().enumerate().skip(1) {
            let Some(inl) = self.inliers.get(&frame) else { continue };
            for id in inl {
                let home = self.tracks[id].home_frame;
                if home >= frame {
                    continue;
                }
                let home_ref = match index_of(home) {
                    Some(h) => HomeRef::Window(h),
                    None => match self.poses.get(&home) {
                        Some(p) => HomeRef::Fixed(*p),
                        None => continue,
                    },
                };
                let (Some(m_home), Some(m_k)) = (self.projection(*id, home), self.projection(*id, frame)) else {
                    continue;
                };
                observations.push(WindowObservation { feature_id: *id, home: home_ref, m_home, k, m_k });
            }
        }
        if observations.is_empty() {
            return Ok(None);
        }
        let problem = WindowProblem::with_oldest_fixed(poses, observations)?;
        let (refined, report) = refine::refine(&problem, &self.config.refine)?;
        for (f, p) in window.iter().zip(refined) {
            self.poses.insert(*f, p);
        }
        Ok(Some(report))
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory { poses: self.poses.iter().map(|(f, p)| (*f, *p)).collect() }
    }

    pub fn diagnostics(&self) -> &[FrameDiagnostic] {
        &self.diagnostics
    }
}

/// Runs the whole dataset. Setup and bootstrap failures are errors; a
/// failure later in the sequence ends the run with a partial trajectory.
pub fn run(dataset: &Dataset, config: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    if dataset.frames.is_empty() {
        return Err(PipelineError::InsufficientData("dataset has no frames"));
    }
    let mut odo = Odometry::new(dataset, config)?;
    odo.bootstrap()?;
    let mut failure = None;
    loop {
        match odo.step() {
            Ok(Some(_)) => {}
            Ok(None) => break,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(RunOutput { trajectory: odo.trajectory(), diagnostics: odo.diagnostics, failure })
}
