//! CSV dataset layout.
//!
//! A dataset directory holds `frames.csv`, `tracks.csv`, `imu.csv`,
//! `gps.csv` and `config.json`, plus `ground_truth.csv` when it came from
//! the simulator. Headers must match exactly. Numbers are written in the
//! shortest decimal form that reads back to the same `f64`, so a
//! write-then-load cycle is exact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use shorevo_core::dataset::{Dataset, DatasetError, GpsFix, TrackObservation};
use shorevo_core::geometry::Pose;
use shorevo_core::imu::{FrameClock, GyroSample};
use shorevo_core::pipeline::{FrameDiagnostic, PipelineConfig, Trajectory};
use shorevo_core::spline::PlanarPoint;
use shorevo_core::{Rotation, Vec3};

use crate::config::{self, ConfigFile};
use crate::error::LoadError;

pub const FRAMES: &str = "frames.csv";
pub const TRACKS: &str = "tracks.csv";
pub const IMU: &str = "imu.csv";
pub const GPS: &str = "gps.csv";
pub const CONFIG: &str = "config.json";
pub const GROUND_TRUTH: &str = "ground_truth.csv";

pub const FRAMES_HEADER: [&str; 2] = ["frame", "t_sec"];
pub const TRACKS_HEADER: [&str; 4] = ["frame", "feature_id", "u_px", "v_px"];
pub const IMU_HEADER: [&str; 4] = ["t_sec", "wx", "wy", "wz"];
pub const GPS_HEADER: [&str; 4] = ["frame", "east_m", "north_m", "sog_mps"];
pub const POSE_HEADER: [&str; 8] = ["frame", "x", "y", "z", "qw", "qx", "qy", "qz"];
pub const TRAJECTORY_HEADER: [&str; 9] = ["frame", "t_sec", "x", "y", "z", "qw", "qx", "qy", "qz"];

/// Shortest decimal that parses back to `x` (at most 17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub config: PipelineConfig,
    pub file: ConfigFile,
    /// Exact per-frame poses, when the directory has them.
    pub ground_truth: Option<Vec<(usize, Pose)>>,
}

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>, LoadError> {
    let file = fs::File::open(path).map_err(|e| LoadError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        let missing: Vec<&str> = header.iter().copied().filter(|h| !found.iter().any(|f| f == *h)).collect();
        let what = if missing.is_empty() { String::new() } else { format!(" (missing {})", missing.join(", ")) };
        return Err(LoadError::schema(
            path,
            format!("expected header `{}`, found `{}`{what}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(reader)
}

fn csv_error(path: &Path, e: csv::Error) -> LoadError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => LoadError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => LoadError::parse(path, line, e.to_string()),
    }
}

/// Rows of a headed CSV file with their 1-based line numbers.
fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<(u64, T)>, LoadError> {
    let mut reader = open(path, header)?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: T = record.deserialize(None).map_err(|e| {
            let detail = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => match err.field() {
                    Some(f) => format!("column `{}`: {}", header.get(f as usize).unwrap_or(&"?"), err.kind()),
                    None => err.kind().to_string(),
                },
                _ => e.to_string(),
            };
            LoadError::parse(path, line, detail)
        })?;
        if !row_is_finite(&record) {
            return Err(LoadError::parse(path, line, "non-finite number"));
        }
        out.push((line, row));
    }
    Ok(out)
}

fn row_is_finite(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.parse::<f64>().map_or(true, |x| x.is_finite()))
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>, LoadError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LoadError::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| LoadError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    Ok(w)
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), LoadError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = writer(path, header)?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| LoadError::io(path, e))
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameClock>, LoadError> {
    let rows: Vec<(u64, (usize, f64))> = read_rows(path, &FRAMES_HEADER)?;
    let mut out: Vec<FrameClock> = Vec::with_capacity(rows.len());
    for (line, (frame_index, t)) in rows {
        if let Some(prev) = out.last() {
            if !(frame_index > prev.frame_index && t > prev.t) {
                return Err(LoadError::Data {
                    path: path.display().to_string(),
                    line,
                    message: format!("frame {frame_index} at {t} s does not follow frame {} at {} s", prev.frame_index, prev.t),
                });
            }
        }
        out.push(FrameClock { frame_index, t });
    }
    Ok(out)
}

pub fn read_gps(path: &Path) -> Result<Vec<(u64, GpsFix)>, LoadError> {
    let rows: Vec<(u64, (usize, f64, f64, f64))> = read_rows(path, &GPS_HEADER)?;
    Ok(rows.into_iter().map(|(l, (frame, east, north, sog))| (l, GpsFix { frame, east, north, sog })).collect())
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<(usize, Pose)>, LoadError> {
    let rows: Vec<(u64, (usize, f64, f64, f64, f64, f64, f64, f64))> = read_rows(path, &POSE_HEADER)?;
    rows.into_iter()
        .map(|(line, (f, x, y, z, qw, qx, qy, qz))| {
            let n = (qw * qw + qx * qx + qy * qy + qz * qz).sqrt();
            if !((n - 1.0).abs() < 1e-6) {
                return Err(LoadError::Data {
                    path: path.display().to_string(),
                    line,
                    message: format!("quaternion norm {n} is not 1"),
                });
            }
            Ok((f, Pose::new(Rotation::from_quaternion([qw, qx, qy, qz]), Vec3::new(x, y, z))))
        })
        .collect()
}

/// Loads and validates a dataset directory. `SHOREVO_SEED`, when set,
/// replaces the MLESAC seed.
pub fn load_dataset(dir: &Path) -> Result<LoadedDataset, LoadError> {
    let config_path = dir.join(CONFIG);
    let mut file: ConfigFile = config::read_json(&config_path)?;
    if let Some(seed) = config::seed_override()? {
        file.mlesac.seed = seed;
    }
    let config = file.to_pipeline(&config_path)?;

    let frames = read_frames(&dir.join(FRAMES))?;
    let tracks_path = dir.join(TRACKS);
    let tracks: Vec<(u64, TrackObservation)> = read_rows::<(usize, u64, f64, f64)>(&tracks_path, &TRACKS_HEADER)?
        .into_iter()
        .map(|(l, (frame, feature_id, u, v))| (l, TrackObservation { frame, feature_id, u, v }))
        .collect();
    let imu_path = dir.join(IMU);
    let imu: Vec<GyroSample> = read_rows::<(f64, f64, f64, f64)>(&imu_path, &IMU_HEADER)?
        .into_iter()
        .map(|(_, (t, x, y, z))| GyroSample { t, w: Vec3::new(x, y, z) })
        .collect();
    let gps_path = dir.join(GPS);
    let gps = read_gps(&gps_path)?;

    let track_lines: Vec<u64> = tracks.iter().map(|t| t.0).collect();
    let gps_lines: Vec<u64> = gps.iter().map(|g| g.0).collect();
    let dataset = Dataset {
        frames,
        observations: tracks.into_iter().map(|t| t.1).collect(),
        imu,
        gps: gps.into_iter().map(|g| g.1).collect(),
    };
    let cross_ref = |table: &str, line: u64, frame: usize| {
        let path = if table == "gps" { &gps_path } else { &tracks_path };
        LoadError::CrossRef {
            path: path.display().to_string(),
            line,
            message: format!("frame {frame} is not listed in {FRAMES}"),
        }
    };
    match dataset.validate() {
        Ok(()) => {}
        Err(DatasetError::DanglingFrame { table, row, frame }) => {
            let lines = if table == "gps" { &gps_lines } else { &track_lines };
            return Err(cross_ref(table, lines[row], frame));
        }
        Err(e) => return Err(LoadError::schema(&dir.join(FRAMES), e.to_string())),
    }
    if let Err(e) = dataset.tracks(config.track_max) {
        let line = track_error_line(&dataset, &track_lines, &e);
        return Err(LoadError::Data { path: tracks_path.display().to_string(), line, message: e.to_string() });
    }

    let gt_path = dir.join(GROUND_TRUTH);
    let ground_truth = if gt_path.exists() { Some(read_ground_truth(&gt_path)?) } else { None };
    Ok(LoadedDataset { dataset, config, file, ground_truth })
}

/// Line of the tracks row that triggered a track-consistency error.
fn track_error_line(dataset: &Dataset, lines: &[u64], e: &DatasetError) -> u64 {
    let find = |feature: u64, frame: usize, nth: usize| {
        dataset
            .observations
            .iter()
            .enumerate()
            .filter(|(_, o)| o.feature_id == feature && o.frame == frame)
            .nth(nth)
            .map_or(0, |(i, _)| lines[i])
    };
    match *e {
        DatasetError::DuplicateObservation { feature, frame } => find(feature, frame, 1),
        DatasetError::BrokenTrack { feature, to, .. } => find(feature, to, 0),
        DatasetError::TrackTooLong { feature, max, .. } => {
            let mut frames: Vec<usize> =
                dataset.observations.iter().filter(|o| o.feature_id == feature).map(|o| o.frame).collect();
            frames.sort_unstable();
            frames.get(max).map_or(0, |&f| find(feature, f, 0))
        }
        _ => 0,
    }
}

/// Writes a dataset directory; `ground_truth` adds `ground_truth.csv`.
pub fn write_dataset(
    dir: &Path,
    dataset: &Dataset,
    config: &ConfigFile,
    ground_truth: Option<&[(usize, Pose)]>,
) -> Result<(), LoadError> {
    fs::create_dir_all(dir).map_err(|e| LoadError::io(dir, e))?;
    write_rows(
        &dir.join(FRAMES),
        &FRAMES_HEADER,
        dataset.frames.iter().map(|f| vec![f.frame_index.to_string(), num(f.t)]),
    )?;
    write_rows(
        &dir.join(TRACKS),
        &TRACKS_HEADER,
        dataset.observations.iter().map(|o| vec![o.frame.to_string(), o.feature_id.to_string(), num(o.u), num(o.v)]),
    )?;
    write_rows(
        &dir.join(IMU),
        &IMU_HEADER,
        dataset.imu.iter().map(|s| vec![num(s.t), num(s.w.x), num(s.w.y), num(s.w.z)]),
    )?;
    write_rows(
        &dir.join(GPS),
        &GPS_HEADER,
        dataset.gps.iter().map(|g| vec![g.frame.to_string(), num(g.east), num(g.north), num(g.sog)]),
    )?;
    write_json(&dir.join(CONFIG), config)?;
    if let Some(gt) = ground_truth {
        write_poses(&dir.join(GROUND_TRUTH), gt)?;
    }
    Ok(())
}

fn pose_fields(p: &Pose) -> Vec<String> {
    let q = p.r.to_quaternion();
    vec![num(p.s.x), num(p.s.y), num(p.s.z), num(q[0]), num(q[1]), num(q[2]), num(q[3])]
}

pub fn write_poses(path: &Path, poses: &[(usize, Pose)]) -> Result<(), LoadError> {
    write_rows(
        path,
        &POSE_HEADER,
        poses.iter().map(|(f, p)| {
            let mut row = vec![f.to_string()];
            row.extend(pose_fields(p));
            row
        }),
    )
}

/// `trajectory.csv`: estimated poses with their frame times.
pub fn write_trajectory(path: &Path, trajectory: &Trajectory, frames: &[FrameClock]) -> Result<(), LoadError> {
    let times: BTreeMap<usize, f64> = frames.iter().map(|c| (c.frame_index, c.t)).collect();
    write_rows(
        path,
        &TRAJECTORY_HEADER,
        trajectory.poses.iter().map(|(f, p)| {
            let mut row = vec![f.to_string(), times.get(f).map_or_else(String::new, |t| num(*t))];
            row.extend(pose_fields(p));
            row
        }),
    )
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), LoadError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LoadError::schema(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| LoadError::io(path, e))
}

/// One JSON object per frame.
pub fn write_diagnostics(path: &Path, diagnostics: &[FrameDiagnostic]) -> Result<(), LoadError> {
    let mut out = Vec::new();
    for d in diagnostics {
        let refine = d.refine.map(|r| {
            serde_json::json!({
                "initial_cost": r.initial_cost,
                "final_cost": r.final_cost,
                "iterations": r.iterations,
                "converged": r.converged,
            })
        });
        let line = serde_json::json!({
            "frame": d.frame,
            "status": d.status.as_str(),
            "correspondences": d.correspondences,
            "inliers": d.inliers,
            "score": d.score,
            "iterations": d.iterations,
            "refine": refine,
            "note": d.note,
        });
        writeln!(out, "{line}").map_err(|e| LoadError::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| LoadError::io(path, e))
}

/// Planar positions keyed by frame from a GPS file, a ground-truth file or
/// a trajectory, recognized by header.
pub fn read_planar(path: &Path) -> Result<Vec<(usize, PlanarPoint)>, LoadError> {
    let file = fs::File::open(path).map_err(|e| LoadError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = reader.headers().map_err(|e| csv_error(path, e))?.iter().map(String::from).collect();
    let is = |h: &[&str]| header.iter().map(String::as_str).eq(h.iter().copied());
    let points = if is(&GPS_HEADER) {
        read_gps(path)?.into_iter().map(|(_, g)| (g.frame, PlanarPoint::new(g.east, g.north))).collect()
    } else if is(&POSE_HEADER) {
        read_ground_truth(path)?.into_iter().map(|(f, p)| (f, PlanarPoint::new(p.s.x, p.s.y))).collect()
    } else if is(&TRAJECTORY_HEADER) {
        read_rows::<(usize, Option<f64>, f64, f64, f64, f64, f64, f64, f64)>(path, &TRAJECTORY_HEADER)?
            .into_iter()
            .map(|(_, r)| (r.0, PlanarPoint::new(r.2, r.3)))
            .collect()
    } else {
        return Err(LoadError::schema(
            path,
            format!(
                "unrecognized header `{}`; expected `{}`, `{}` or `{}`",
                header.join(","),
                GPS_HEADER.join(","),
                POSE_HEADER.join(","),
                TRAJECTORY_HEADER.join(",")
            ),
        ));
    };
    Ok(points)
}
