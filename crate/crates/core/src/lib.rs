//! Structure-less, IMU-aided monocular visual odometry.
//!
//! Camera positions are estimated directly from feature-track
//! correspondences once the gyroscope has supplied the orientations: the
//! rotational part of the image motion is removed, each correspondence yields
//! one depth-free linear constraint on the baseline, and a robust sampler
//! scores hypotheses with the misalignment of epipolar planes. A short
//! sliding window is then refined by Gauss-Newton on a sum of epipolar
//! constraints. No map points are kept for prediction.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration and
//! the command line live in the `shorevo` crate.

#![no_std]

extern crate alloc;

pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod imu;
pub mod pipeline;
pub mod refine;
pub mod robust;
pub mod sim;
pub mod spline;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use geometry::{Correspondence, GeometryError, NormalizedProjection, Pose, Rotation};
pub use pipeline::{CameraIntrinsics, PipelineConfig, PipelineError, Trajectory};
