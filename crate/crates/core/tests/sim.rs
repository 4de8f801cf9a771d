use std::collections::BTreeMap;

use shorevo_core::dataset::Dataset;
use shorevo_core::geometry::Pose;
use shorevo_core::imu;
use shorevo_core::pipeline::CameraIntrinsics;
use shorevo_core::sim::*;

fn short(duration: f64) -> MotionParams {
    MotionParams { duration, ..MotionParams::default() }
}

fn make(scene: &SceneParams, motion: &MotionParams, noise: &NoiseParams) -> Simulation {
    generate(scene, motion, noise, &CameraIntrinsics::default()).unwrap()
}

fn poses(sim: &Simulation) -> BTreeMap<usize, Pose> {
    sim.truth.poses.iter().copied().collect()
}

#[test]
fn noise_free_tracks_reproject_exactly() {
    let motion = MotionParams { yaw_profile: YawProfile::constant(0.0), ..short(4.0) };
    let sim = make(&SceneParams::default(), &motion, &NoiseParams::none());
    let k = CameraIntrinsics::default();
    let poses = poses(&sim);
    assert!(!sim.dataset.observations.is_empty());
    for o in &sim.dataset.observations {
        let m = poses[&o.frame].project(&sim.truth.landmarks[&o.feature_id]).unwrap();
        let (u, v) = k.to_pixel(&m);
        assert!((u - o.u).abs() < 1e-12 && (v - o.v).abs() < 1e-12, "frame {} feature {}", o.frame, o.feature_id);
    }
}

#[test]
fn pure_rotation_has_no_parallax() {
    let motion = MotionParams { speed: 0.0, yaw_profile: YawProfile::constant(0.3), ..short(4.0) };
    let sim = make(&SceneParams::default(), &motion, &NoiseParams::none());
    let k = CameraIntrinsics::default();
    let poses = poses(&sim);
    let tracks = sim.dataset.tracks(SceneParams::default().track_max).unwrap();
    let mut checked = 0;
    for t in tracks.values() {
        let (u, v) = t.pixel(t.home_frame).unwrap();
        let home = poses[&t.home_frame].r.apply(&k.normalize(u, v).lift()).normalize();
        for (&f, &(u, v)) in t.pixels.iter().skip(1) {
            let cur = poses[&f].r.apply(&k.normalize(u, v).lift()).normalize();
            assert!(home.cross(&cur).norm() < 1e-9, "feature {} frame {f}", t.id);
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn fresh_dataset_passes_the_oracle() {
    for noise in [NoiseParams::none(), NoiseParams::default()] {
        let sim = make(&SceneParams::default(), &short(20.0), &noise);
        let report = oracle_check(&sim.dataset, &sim.truth, &sim.config, &noise).unwrap();
        assert!(report.rows_checked > 1000);
    }
}

#[test]
fn corrupted_row_is_named() {
    let noise = NoiseParams::none();
    let sim = make(&SceneParams::default(), &short(4.0), &noise);
    let mut bad: Dataset = sim.dataset.clone();
    let row = bad.observations.len() / 2;
    bad.observations[row].u += 3.0;
    match oracle_check(&bad, &sim.truth, &sim.config, &noise) {
        Err(e @ ConsistencyError::Reprojection { .. }) => {
            let ConsistencyError::Reprojection { row: r, .. } = e else { unreachable!() };
            assert_eq!(r, row);
            assert!(e.to_string().contains(&format!("tracks row {row}")));
        }
        other => panic!("expected a reprojection failure, got {other:?}"),
    }
}

#[test]
fn pixel_noise_has_the_requested_spread() {
    let noise = NoiseParams { outlier_rate: 0.0, pixel_sigma: 0.7, ..NoiseParams::default() };
    let sim = make(&SceneParams::default(), &short(10.0), &noise);
    let report = oracle_check(&sim.dataset, &sim.truth, &sim.config, &noise).unwrap();
    assert!(report.rows_checked >= 5000, "{} rows", report.rows_checked);
    assert!((report.pixel_residual_std - 0.7).abs() < 0.07, "std {}", report.pixel_residual_std);
}

#[test]
fn outlier_fraction_is_respected() {
    let noise = NoiseParams { outlier_rate: 0.2, ..NoiseParams::default() };
    let sim = make(&SceneParams::default(), &short(10.0), &noise);
    let rate = sim.truth.outliers.len() as f64 / sim.dataset.observations.len() as f64;
    assert!((rate - 0.2).abs() < 0.03, "rate {rate}");
}

#[test]
fn generation_is_deterministic() {
    let a = make(&SceneParams::default(), &short(6.0), &NoiseParams::default());
    let b = make(&SceneParams::default(), &short(6.0), &NoiseParams::default());
    assert_eq!(a, b);
}

#[test]
fn noise_seed_leaves_geometry_alone() {
    let a = make(&SceneParams::default(), &short(6.0), &NoiseParams::default());
    let b = make(&SceneParams::default(), &short(6.0), &NoiseParams { seed: 99, ..NoiseParams::default() });
    assert_eq!(a.truth.poses, b.truth.poses);
    assert_eq!(a.truth.landmarks, b.truth.landmarks);
    assert_eq!(a.dataset.frames, b.dataset.frames);
    assert_ne!(a.dataset.observations, b.dataset.observations);
    assert_ne!(a.dataset.imu, b.dataset.imu);
    let c = make(&SceneParams { seed: 77, ..SceneParams::default() }, &short(6.0), &NoiseParams::default());
    assert_ne!(a.truth.landmarks, c.truth.landmarks);
}

#[test]
fn tracks_respect_their_invariants() {
    for (seed, track_max) in [(1, 5), (2, 3), (3, 8)] {
        let scene = SceneParams { seed, track_max, ..SceneParams::default() };
        let sim = make(&scene, &short(8.0), &NoiseParams::default());
        sim.dataset.validate().unwrap();
        let tracks = sim.dataset.tracks(track_max).unwrap();
        assert!(tracks.values().all(|t| !t.is_empty() && t.len() <= track_max));
        for f in &sim.dataset.frames {
            let homed = tracks.values().filter(|t| t.home_frame == f.frame_index).count();
            assert_eq!(homed, scene.landmark_count, "frame {}", f.frame_index);
        }
    }
}

#[test]
fn landmark_depths_span_the_configured_range() {
    let sim = make(&SceneParams::default(), &short(20.0), &NoiseParams::none());
    let poses = poses(&sim);
    let tracks = sim.dataset.tracks(5).unwrap();
    let depths: Vec<f64> = tracks
        .values()
        .map(|t| {
            let p = &poses[&t.home_frame];
            p.r.transpose().apply(&(sim.truth.landmarks[&t.id] - p.s)).z
        })
        .collect();
    let min = depths.iter().copied().fold(f64::INFINITY, f64::min);
    let max = depths.iter().copied().fold(0.0, f64::max);
    assert!(min < 20.0 && max > 1000.0, "depths {min}..{max}");
}

#[test]
fn gyro_integral_matches_final_orientation() {
    let motion = short(60.0);
    let sim = make(&SceneParams::default(), &motion, &NoiseParams::none());
    let r0 = sim.truth.poses[0].1.r;
    let out = imu::integrate(&sim.dataset.imu, &sim.config.imu_alignment, &sim.dataset.frames, &r0, &Default::default())
        .unwrap();
    let (frame, r) = out.last().unwrap();
    let truth = poses(&sim)[frame].r;
    assert!((r.transpose() * truth).angle().to_degrees() < 0.05);
}

#[test]
fn invalid_parameters_are_rejected() {
    let k = CameraIntrinsics::default();
    let bad_depth = SceneParams { depth_min: 10.0, depth_max: 5.0, ..SceneParams::default() };
    assert!(matches!(generate(&bad_depth, &short(2.0), &NoiseParams::none(), &k), Err(ParameterError::Invalid { .. })));
    let fast = MotionParams { fps: 200.0, ..short(2.0) };
    assert!(matches!(generate(&SceneParams::default(), &fast, &NoiseParams::none(), &k), Err(ParameterError::Invalid { .. })));
    let noisy = NoiseParams { outlier_rate: 1.5, ..NoiseParams::default() };
    assert!(matches!(generate(&SceneParams::default(), &short(2.0), &noisy, &k), Err(ParameterError::Invalid { .. })));
}
