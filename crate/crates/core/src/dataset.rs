//! In-memory dataset: frame clock, feature tracks, gyro stream and GPS fixes,
//! cross-referenced by frame index.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::geometry::Pose;
use crate::imu::{FrameClock, GyroSample};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("frame clock is not strictly increasing at entry {0}")]
    FrameOrder(usize),
    #[error("{table} row {row} references unknown frame {frame}")]
    DanglingFrame { table: &'static str, row: usize, frame: usize },
    #[error("feature {feature} observed twice in frame {frame}")]
    DuplicateObservation { feature: u64, frame: usize },
    #[error("feature {feature} skips from frame {from} to frame {to}")]
    BrokenTrack { feature: u64, from: usize, to: usize },
    #[error("feature {feature} is tracked over {len} frames, limit is {max}")]
    TrackTooLong { feature: u64, len: usize, max: usize },
}

/// One tracker output row, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackObservation {
    pub frame: usize,
    pub feature_id: u64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFix {
    pub frame: usize,
    pub east: f64,
    pub north: f64,
    /// Speed over ground, m/s.
    pub sog: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub frames: Vec<FrameClock>,
    pub observations: Vec<TrackObservation>,
    pub imu: Vec<GyroSample>,
    pub gps: Vec<GpsFix>,
}

impl Dataset {
    /// Checks frame ordering and that every track and GPS row references a
    /// known frame.
    pub fn validate(&self) -> Result<(), DatasetError> {
        for (i, w) in self.frames.windows(2).enumerate() {
            if !(w[1].t > w[0].t) || w[1].frame_index <= w[0].frame_index {
                return Err(DatasetError::FrameOrder(i + 1));
            }
        }
        let known = |f: usize| self.frames.binary_search_by_key(&f, |c| c.frame_index).is_ok();
        for (row, o) in self.observations.iter().enumerate() {
            if !known(o.frame) {
                return Err(DatasetError::DanglingFrame { table: "tracks", row, frame: o.frame });
            }
        }
        for (row, g) in self.gps.iter().enumerate() {
            if !known(g.frame) {
                return Err(DatasetError::DanglingFrame { table: "gps", row, frame: g.frame });
            }
        }
        Ok(())
    }

    /// Groups observations into tracks and checks the track invariants.
    pub fn tracks(&self, track_max: usize) -> Result<BTreeMap<u64, FeatureTrack>, DatasetError> {
        let mut by_feature: BTreeMap<u64, BTreeMap<usize, (f64, f64)>> = BTreeMap::new();
        for o in &self.observations {
            let obs = by_feature.entry(o.feature_id).or_default();
            if obs.insert(o.frame, (o.u, o.v)).is_some() {
                return Err(DatasetError::DuplicateObservation { feature: o.feature_id, frame: o.frame });
            }
        }
        let position = |f: usize| self.frames.binary_search_by_key(&f, |c| c.frame_index).ok();
        let mut out = BTreeMap::new();
        for (id, obs) in by_feature {
            let frames: Vec<usize> = obs.keys().copied().collect();
            for w in frames.windows(2) {
                let consecutive = match (position(w[0]), position(w[1])) {
                    (Some(a), Some(b)) => b == a + 1,
                    _ => false,
                };
                if !consecutive {
                    return Err(DatasetError::BrokenTrack { feature: id, from: w[0], to: w[1] });
                }
            }
            if frames.len() > track_max {
                return Err(DatasetError::TrackTooLong { feature: id, len: frames.len(), max: track_max });
            }
            out.insert(id, FeatureTrack { id, home_frame: frames[0], pixels: obs });
        }
        Ok(out)
    }
}

/// A feature's pixel observations over consecutive frames starting at its
/// home frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    pub id: u64,
    pub home_frame: usize,
    pub pixels: BTreeMap<usize, (f64, f64)>,
}

impl FeatureTrack {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixel(&self, frame: usize) -> Option<(f64, f64)> {
        self.pixels.get(&frame).copied()
    }
}

/// Exact simulator state: per-frame poses, landmark positions and which
/// track rows were replaced by outliers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub poses: Vec<(usize, Pose)>,
    pub landmarks: BTreeMap<u64, Vec3>,
    /// (frame, feature_id) pairs whose pixels are outliers.
    pub outliers: Vec<(usize, u64)>,
}
