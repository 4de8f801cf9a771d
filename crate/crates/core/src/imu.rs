//! Gyroscope integration into per-frame camera orientation priors.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Rotation;
use crate::{Mat3, Vec3};

/// Below this rotation angle the Rodrigues coefficients use their Taylor series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Compositions between two polar re-orthonormalizations.
pub const REORTHONORMALIZE_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImuError {
    #[error("alignment matrix is not orthogonal (error {0:e})")]
    InvalidAlignment(f64),
    #[error("gyro timestamps are not strictly increasing at sample {0}")]
    NonMonotone(usize),
    #[error("frame clock is not strictly increasing at entry {0}")]
    NonMonotoneClock(usize),
    #[error("frame {frame} at t = {t} s lies outside the gyro span [{start}, {end}]")]
    Coverage { frame: usize, t: f64, start: f64, end: f64 },
}

/// Angular velocity sample in IMU axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroSample {
    pub t: f64,
    pub w: Vec3,
}

/// Maps IMU axes to camera axes. May be a reflection: some IMU frames are
/// left-handed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuAlignment {
    m: Mat3,
}

impl ImuAlignment {
    pub fn new(m: Mat3) -> Result<Self, ImuError> {
        let err = (m.transpose() * m - Mat3::identity()).abs().max();
        if !(err <= 1e-6) {
            return Err(ImuError::InvalidAlignment(err));
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: Mat3::identity() }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }
}

impl Default for ImuAlignment {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameClock {
    pub frame_index: usize,
    pub t: f64,
}

/// Angular velocity in camera axes.
pub fn remap(s: &GyroSample, a: &ImuAlignment) -> Vec3 {
    a.m * s.w
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation for the rotation vector `theta` (axis times angle).
pub fn rodrigues(theta: &Vec3) -> Rotation {
    let angle2 = theta.norm_squared();
    let angle = angle2.sqrt();
    let (a, b) = if angle < SMALL_ANGLE {
        (1.0 - angle2 / 6.0, 0.5 - angle2 / 24.0)
    } else {
        (angle.sin() / angle, (1.0 - angle.cos()) / angle2)
    };
    let k = skew(theta);
    Rotation::from_matrix_unchecked(Mat3::identity() + k * a + k * k * b)
}

/// Integrates gyro samples and returns the camera orientation at every frame
/// of `clock`, starting from `r0` at the first frame.
///
/// Each sample interval uses the trapezoidal mean of its two endpoint rates
/// (after removing `bias`, given in IMU axes). Frames that fall inside an
/// interval get the geodesic interpolation along that interval's rotation.
pub fn integrate(
    samples: &[GyroSample],
    a: &ImuAlignment,
    clock: &[FrameClock],
    r0: &Rotation,
    bias: &Vec3,
) -> Result<Vec<(usize, Rotation)>, ImuError> {
    for (i, w) in samples.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(ImuError::NonMonotone(i + 1));
        }
    }
    for (i, w) in clock.windows(2).enumerate() {
        if !(w[1].t > w[0].t) {
            return Err(ImuError::NonMonotoneClock(i + 1));
        }
    }
    let Some(first) = clock.first() else { return Ok(Vec::new()) };
    let (start, end) = match (samples.first(), samples.last()) {
        (Some(s), Some(e)) => (s.t, e.t),
        _ => (f64::NAN, f64::NAN),
    };
    for f in clock {
        if !(f.t >= start && f.t <= end) {
            return Err(ImuError::Coverage { frame: f.frame_index, t: f.t, start, end });
        }
    }

    let rate = |j: usize| -> Vec3 {
        let w0 = remap(&GyroSample { t: 0.0, w: samples[j].w - bias }, a);
        let w1 = remap(&GyroSample { t: 0.0, w: samples[j + 1].w - bias }, a);
        (w0 + w1) * 0.5
    };

    let mut out = Vec::with_capacity(clock.len());
    let mut r_cur = *r0;
    let mut t_cur = first.t;
    // Interval index j: samples[j].t <= t_cur < samples[j + 1].t (or the last interval).
    let last_interval = samples.len().saturating_sub(2);
    let mut j = samples.partition_point(|s| s.t <= t_cur).saturating_sub(1).min(last_interval);
    let mut compositions = 0usize;

    for f in clock {
        while samples.len() > 1 && j < last_interval && f.t > samples[j + 1].t {
            let dt = samples[j + 1].t - t_cur;
            r_cur = r_cur * rodrigues(&(rate(j) * dt));
            t_cur = samples[j + 1].t;
            j += 1;
            compositions += 1;
            if compositions % REORTHONORMALIZE_EVERY == 0 {
                r_cur = Rotation::orthonormalize(r_cur.matrix());
            }
        }
        let r = if samples.len() > 1 && f.t > t_cur {
            r_cur * rodrigues(&(rate(j) * (f.t - t_cur)))
        } else {
            r_cur
        };
        out.push((f.frame_index, r));
    }
    Ok(out)
}
