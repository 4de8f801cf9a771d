//! `config.json` and the simulator parameter files.
//!
//! Every section is optional and falls back to the library defaults, so a
//! file only has to name what it changes. Unknown keys are rejected to catch
//! typos.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shorevo_core::imu::ImuAlignment;
use shorevo_core::pipeline::{CameraIntrinsics, PipelineConfig};
use shorevo_core::refine::RefineOptions;
use shorevo_core::robust::{self, MlesacParams};
use shorevo_core::sim::{MotionParams, NoiseParams, SceneParams, ShoreSide, YawProfile};
use shorevo_core::{Mat3, Rotation, Vec3};

use crate::error::LoadError;

/// Environment variable that replaces every seed read from a file.
pub const SEED_ENV: &str = "SHOREVO_SEED";

/// Value of [`SEED_ENV`], if set.
pub fn seed_override() -> Result<Option<u64>, LoadError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| LoadError::Schema {
            path: SEED_ENV.to_string(),
            message: format!("expected an unsigned 64-bit integer, got {s:?}"),
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(LoadError::Schema { path: SEED_ENV.to_string(), message: e.to_string() }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

impl From<CameraIntrinsics> for Intrinsics {
    fn from(k: CameraIntrinsics) -> Self {
        Self { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height }
    }
}

impl From<Intrinsics> for CameraIntrinsics {
    fn from(k: Intrinsics) -> Self {
        CameraIntrinsics { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height }
    }
}

impl Default for Intrinsics {
    fn default() -> Self {
        CameraIntrinsics::default().into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlesacSection {
    pub cos_cutoff: f64,
    pub max_iterations: usize,
    pub min_subset: usize,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for MlesacSection {
    fn default() -> Self {
        let p = MlesacParams::default();
        Self {
            cos_cutoff: p.cos_cutoff,
            max_iterations: p.max_iterations,
            min_subset: p.min_subset,
            min_inliers: p.min_inliers,
            seed: p.seed,
        }
    }
}

/// Track bookkeeping and the per-frame position solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub track_max: usize,
    pub refine_window: usize,
    pub min_tracks_per_frame: usize,
    pub max_coast_frames: usize,
    pub bootstrap_gap: usize,
    pub fov_limit: f64,
    pub motion_prior_weight: f64,
    pub motion_prior_sigma: Option<f64>,
    pub motion_prior_floor: f64,
    pub hold_speed: bool,
}

impl Default for WindowSection {
    fn default() -> Self {
        let c = PipelineConfig::default();
        Self {
            track_max: c.track_max,
            refine_window: c.refine_window,
            min_tracks_per_frame: c.min_tracks_per_frame,
            max_coast_frames: c.max_coast_frames,
            bootstrap_gap: c.bootstrap_gap,
            fov_limit: c.fov_limit,
            motion_prior_weight: c.motion_prior_weight,
            motion_prior_sigma: c.motion_prior_sigma,
            motion_prior_floor: c.motion_prior_floor,
            hold_speed: c.hold_speed,
        }
    }
}

/// Gauss-Newton window refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnSection {
    pub enabled: bool,
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub step_tolerance: f64,
    pub refine_rotations: bool,
    pub damping: u32,
    pub normalize_residuals: bool,
    pub prior_weight: f64,
}

impl Default for GnSection {
    fn default() -> Self {
        let c = PipelineConfig::default();
        let r = c.refine;
        Self {
            enabled: c.refine_enabled,
            max_iterations: r.max_iterations,
            cost_tolerance: r.cost_tolerance,
            step_tolerance: r.step_tolerance,
            refine_rotations: r.refine_rotations,
            damping: r.damping,
            normalize_residuals: r.normalize_residuals,
            prior_weight: r.prior_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub samples: usize,
    pub bins: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { samples: shorevo_core::eval::DEFAULT_SAMPLES, bins: shorevo_core::eval::DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub intrinsics: Intrinsics,
    /// IMU-to-camera axis map, row-major.
    pub imu_alignment: [f64; 9],
    /// Constant gyro bias in IMU axes, rad/s.
    pub gyro_bias: [f64; 3],
    /// Camera-to-world rotation at the first frame, row-major.
    pub initial_orientation: [f64; 9],
    pub mlesac: MlesacSection,
    pub window: WindowSection,
    pub gn: GnSection,
    pub eval: EvalSection,
    /// Accept a `cos_cutoff` outside [cos 7°, cos 3°].
    pub allow_cutoff_override: bool,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self::from_pipeline(&PipelineConfig::default())
    }
}

fn row_major(m: &Mat3) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

fn from_row_major(v: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(v)
}

impl ConfigFile {
    pub fn from_pipeline(c: &PipelineConfig) -> Self {
        Self {
            intrinsics: c.intrinsics.into(),
            imu_alignment: row_major(c.imu_alignment.matrix()),
            gyro_bias: [c.gyro_bias.x, c.gyro_bias.y, c.gyro_bias.z],
            initial_orientation: row_major(c.initial_orientation.matrix()),
            mlesac: MlesacSection {
                cos_cutoff: c.mlesac.cos_cutoff,
                max_iterations: c.mlesac.max_iterations,
                min_subset: c.mlesac.min_subset,
                min_inliers: c.mlesac.min_inliers,
                seed: c.mlesac.seed,
            },
            window: WindowSection {
                track_max: c.track_max,
                refine_window: c.refine_window,
                min_tracks_per_frame: c.min_tracks_per_frame,
                max_coast_frames: c.max_coast_frames,
                bootstrap_gap: c.bootstrap_gap,
                fov_limit: c.fov_limit,
                motion_prior_weight: c.motion_prior_weight,
                motion_prior_sigma: c.motion_prior_sigma,
                motion_prior_floor: c.motion_prior_floor,
                hold_speed: c.hold_speed,
            },
            gn: GnSection {
                enabled: c.refine_enabled,
                max_iterations: c.refine.max_iterations,
                cost_tolerance: c.refine.cost_tolerance,
                step_tolerance: c.refine.step_tolerance,
                refine_rotations: c.refine.refine_rotations,
                damping: c.refine.damping,
                normalize_residuals: c.refine.normalize_residuals,
                prior_weight: c.refine.prior_weight,
            },
            eval: EvalSection::default(),
            allow_cutoff_override: false,
        }
    }

    /// Checks the values and builds the estimator configuration. `path` is
    /// only used in messages.
    pub fn to_pipeline(&self, path: &Path) -> Result<PipelineConfig, LoadError> {
        let m = &self.mlesac;
        let mlesac = MlesacParams {
            cos_cutoff: m.cos_cutoff,
            max_iterations: m.max_iterations,
            min_subset: m.min_subset,
            seed: m.seed,
            min_inliers: m.min_inliers,
        };
        if let Err(e) = mlesac.validate(self.allow_cutoff_override) {
            let (lo, hi) = robust::cutoff_range();
            let message = if !self.allow_cutoff_override && m.cos_cutoff > 0.0 && m.cos_cutoff < 1.0 {
                format!(
                    "mlesac.cos_cutoff {} lies outside the supported range [cos 7°, cos 3°] = [{lo:.6}, {hi:.6}]; \
                     set allow_cutoff_override to use it anyway",
                    m.cos_cutoff
                )
            } else {
                format!("mlesac: {e}")
            };
            return Err(LoadError::schema(path, message));
        }
        let imu_alignment = ImuAlignment::new(from_row_major(&self.imu_alignment))
            .map_err(|e| LoadError::schema(path, format!("imu_alignment: {e}")))?;
        let initial_orientation = Rotation::from_matrix(from_row_major(&self.initial_orientation))
            .map_err(|e| LoadError::schema(path, format!("initial_orientation: {e}")))?;
        let w = &self.window;
        let g = &self.gn;
        let config = PipelineConfig {
            track_max: w.track_max,
            refine_window: w.refine_window,
            refine_enabled: g.enabled,
            refine: RefineOptions {
                max_iterations: g.max_iterations,
                cost_tolerance: g.cost_tolerance,
                step_tolerance: g.step_tolerance,
                refine_rotations: g.refine_rotations,
                damping: g.damping,
                normalize_residuals: g.normalize_residuals,
                prior_weight: g.prior_weight,
            },
            mlesac,
            min_tracks_per_frame: w.min_tracks_per_frame,
            intrinsics: self.intrinsics.into(),
            imu_alignment,
            gyro_bias: Vec3::from(self.gyro_bias),
            initial_orientation,
            motion_prior_weight: w.motion_prior_weight,
            motion_prior_sigma: w.motion_prior_sigma,
            motion_prior_floor: w.motion_prior_floor,
            hold_speed: w.hold_speed,
            max_coast_frames: w.max_coast_frames,
            bootstrap_gap: w.bootstrap_gap,
            fov_limit: w.fov_limit,
        };
        config.validate().map_err(|e| LoadError::schema(path, e.to_string()))?;
        if self.eval.samples < 4 || self.eval.bins == 0 {
            return Err(LoadError::schema(path, "eval needs samples >= 4 and bins >= 1"));
        }
        Ok(config)
    }
}

/// Reads a JSON document from a file and reports syntax errors with their
/// line.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::io(path, e))?;
    parse_json(&text, path)
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T, LoadError> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => LoadError::schema(path, format!("line {}: {e}", e.line())),
        _ => LoadError::parse(path, e.line() as u64, e.to_string()),
    })
}

/// Simulator scene description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub landmark_count: usize,
    pub depth_min: f64,
    pub depth_max: f64,
    pub shore_side: Side,
    pub track_max: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Default for SceneSpec {
    fn default() -> Self {
        let s = SceneParams::default();
        Self {
            landmark_count: s.landmark_count,
            depth_min: s.depth_min,
            depth_max: s.depth_max,
            shore_side: match s.shore_side {
                ShoreSide::Left => Side::Left,
                ShoreSide::Right => Side::Right,
            },
            track_max: s.track_max,
            seed: s.seed,
        }
    }
}

impl SceneSpec {
    pub fn to_params(&self) -> SceneParams {
        SceneParams {
            landmark_count: self.landmark_count,
            depth_min: self.depth_min,
            depth_max: self.depth_max,
            shore_side: match self.shore_side {
                Side::Left => ShoreSide::Left,
                Side::Right => ShoreSide::Right,
            },
            track_max: self.track_max,
            seed: self.seed,
        }
    }
}

/// Yaw-rate profile: the built-in meander or explicit `[t_sec, rate]` knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum YawSpec {
    Named(String),
    Knots(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionSpec {
    pub duration: f64,
    pub fps: f64,
    pub imu_rate: f64,
    pub gps_rate: f64,
    pub speed: f64,
    pub heading_deg: f64,
    pub yaw_profile: YawSpec,
    pub wave_amplitude_deg: f64,
    pub wave_period: f64,
    pub camera_height: f64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        let m = MotionParams::default();
        Self {
            duration: m.duration,
            fps: m.fps,
            imu_rate: m.imu_rate,
            gps_rate: m.gps_rate,
            speed: m.speed,
            heading_deg: m.heading.to_degrees(),
            yaw_profile: YawSpec::Named("meander".into()),
            wave_amplitude_deg: m.wave_amplitude_deg,
            wave_period: m.wave_period,
            camera_height: m.camera_height,
        }
    }
}

impl MotionSpec {
    pub fn to_params(&self) -> Result<MotionParams, String> {
        let yaw_profile = match &self.yaw_profile {
            YawSpec::Named(n) if n == "meander" => YawProfile::meander(),
            YawSpec::Named(n) if n == "straight" => YawProfile::constant(0.0),
            YawSpec::Named(n) => return Err(format!("unknown yaw profile {n:?} (expected meander, straight or knots)")),
            YawSpec::Knots(k) => YawProfile { knots: k.iter().map(|p| (p[0], p[1])).collect() },
        };
        Ok(MotionParams {
            duration: self.duration,
            fps: self.fps,
            imu_rate: self.imu_rate,
            gps_rate: self.gps_rate,
            speed: self.speed,
            heading: self.heading_deg.to_radians(),
            yaw_profile,
            wave_amplitude_deg: self.wave_amplitude_deg,
            wave_period: self.wave_period,
            camera_height: self.camera_height,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub pixel_sigma: f64,
    pub outlier_rate: f64,
    pub gyro_sigma: f64,
    pub gyro_bias: [f64; 3],
    pub sog_sigma: f64,
    pub gps_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        let n = NoiseParams::default();
        Self {
            pixel_sigma: n.pixel_sigma,
            outlier_rate: n.outlier_rate,
            gyro_sigma: n.gyro_sigma,
            gyro_bias: [n.gyro_bias.x, n.gyro_bias.y, n.gyro_bias.z],
            sog_sigma: n.sog_sigma,
            gps_sigma: n.gps_sigma,
            seed: n.seed,
        }
    }
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            pixel_sigma: 0.0,
            outlier_rate: 0.0,
            gyro_sigma: 0.0,
            gyro_bias: [0.0; 3],
            sog_sigma: 0.0,
            gps_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn to_params(&self) -> NoiseParams {
        NoiseParams {
            pixel_sigma: self.pixel_sigma,
            outlier_rate: self.outlier_rate,
            gyro_sigma: self.gyro_sigma,
            gyro_bias: Vec3::from(self.gyro_bias),
            sog_sigma: self.sog_sigma,
            gps_sigma: self.gps_sigma,
            seed: self.seed,
        }
    }
}

/// Everything `simulate` was asked to do; written next to the dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSpec {
    pub scene: SceneSpec,
    pub motion: MotionSpec,
    pub noise: NoiseSpec,
}
