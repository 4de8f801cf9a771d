mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use shorevo_core::geometry::{epipolar_cos, Correspondence, NormalizedProjection};
use shorevo_core::robust::*;
use shorevo_core::sim::{two_view_problem, OutlierModel, TwoViewParams};
use shorevo_core::{CameraIntrinsics, Vec3};

fn clean(points: usize, sigma: f64) -> TwoViewParams {
    TwoViewParams { points, outlier_rate: 0.0, pixel_sigma: sigma, ..TwoViewParams::default() }
}

fn cutoff() -> f64 {
    MlesacParams::default().cos_cutoff
}

/// Random ray for the current view whose epipolar plane is more than the
/// cutoff away from the true one.
fn inconsistent_ray(g: &mut ChaCha8Rng, c: &Correspondence, b_home: &Vec3) -> NormalizedProjection {
    loop {
        let d = unit(g);
        if d.z <= 1e-3 {
            continue;
        }
        let m = NormalizedProjection::new(d.x / d.z, d.y / d.z);
        if epipolar_cos(&c.home, &m, &c.relative_rotation(), b_home).is_ok_and(|cos| cos < cutoff()) {
            return m;
        }
    }
}

#[test]
fn truth_scores_zero_with_every_inlier() {
    let k = CameraIntrinsics::default();
    for seed in 0..20 {
        let p = two_view_problem(&clean(60, 0.0), &k, seed).unwrap();
        let (score, inliers) = score_hypothesis(&p.current.s, &p.correspondences, cutoff()).unwrap();
        assert!(score < 1e-12, "{score}");
        assert_eq!(inliers, (0..60).collect::<Vec<_>>());
    }
}

#[test]
fn truth_separates_geometrically_inconsistent_outliers() {
    let k = CameraIntrinsics::default();
    for seed in 0..20 {
        let mut g = rng(300 + seed);
        let p = two_view_problem(&clean(100, 0.0), &k, seed).unwrap();
        let b_home = p.home.r.transpose().apply(&(p.current.s - p.home.s)).normalize();
        let mut cs = p.correspondences.clone();
        let mut expected = Vec::new();
        for (i, c) in cs.iter_mut().enumerate() {
            if g.random::<f64>() < 0.3 {
                c.cur = inconsistent_ray(&mut g, c, &b_home);
            } else {
                expected.push(i);
            }
        }
        let (_, inliers) = score_hypothesis(&p.current.s, &cs, cutoff()).unwrap();
        assert_eq!(inliers, expected);
    }
}

#[test]
fn wrong_position_scores_higher() {
    let k = CameraIntrinsics::default();
    for seed in 0..100 {
        let mut g = rng(400 + seed);
        let p = two_view_problem(&clean(60, 0.0), &k, 1000 + seed).unwrap();
        let baseline = (p.current.s - p.home.s).norm();
        let wrong = p.current.s + unit(&mut g) * 0.5 * baseline;
        let (at_truth, _) = score_hypothesis(&p.current.s, &p.correspondences, cutoff()).unwrap();
        let (at_wrong, _) = score_hypothesis(&wrong, &p.correspondences, cutoff()).unwrap();
        assert!(at_wrong > at_truth, "seed {seed}");
    }
}

#[test]
fn zero_baseline_hypothesis_is_rejected() {
    let p = two_view_problem(&clean(10, 0.0), &CameraIntrinsics::default(), 1).unwrap();
    assert_eq!(score_hypothesis(&p.home.s, &p.correspondences, cutoff()), Err(RobustError::ZeroBaseline));
}

#[test]
fn noise_free_recovery() {
    let k = CameraIntrinsics::default();
    for seed in 0..20 {
        let p = two_view_problem(&clean(60, 0.0), &k, 2000 + seed).unwrap();
        let est = mlesac_position(&p.correspondences, &MlesacParams::default(), SolveMode::Homogeneous).unwrap();
        // Unit baseline, so the homogeneous estimate is the position itself.
        assert!((est.position - p.current.s).norm() < 1e-6);
        assert_eq!(est.inliers.len(), 60);
    }
    for seed in 0..20 {
        let mut g = rng(500 + seed);
        let (homes, cur) = multi_view_poses(&mut g, 3, 0.7);
        let cs: Vec<Correspondence> = homes.iter().flat_map(|h| two_view(&mut g, h, &cur, 20, (5.0, 80.0), 0.0)).collect();
        let est = mlesac_position(&cs, &MlesacParams::default(), SolveMode::Anchored).unwrap();
        assert!((est.position - cur.s).norm() < 1e-6);
        assert_eq!(est.inliers.len(), cs.len());
    }
}

fn direction_error_deg(est: &Vec3, truth: &Vec3) -> f64 {
    est.normalize().dot(&truth.normalize()).clamp(-1.0, 1.0).acos().to_degrees()
}

/// 200 two-view problems, 100 points, 0.5 px noise, unit baseline.
/// Measured with 40% random-ray outliers: pooled precision 0.967, recall
/// 0.9999, median direction error 0.293° against 0.174° without outliers.
#[test]
fn forty_percent_outliers() {
    let k = CameraIntrinsics::default();
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    let mut with_outliers = Vec::new();
    let mut without = Vec::new();
    for seed in 0..200 {
        let params = TwoViewParams { outlier_rate: 0.4, outlier_model: OutlierModel::RandomRay, ..TwoViewParams::default() };
        let p = two_view_problem(&params, &k, 7000 + seed).unwrap();
        let mlesac = MlesacParams { seed, ..MlesacParams::default() };
        let est = mlesac_position(&p.correspondences, &mlesac, SolveMode::Homogeneous).unwrap();
        let mut flagged = vec![false; p.outliers.len()];
        for &i in &est.inliers {
            flagged[i] = true;
        }
        for (&bad, &inl) in p.outliers.iter().zip(&flagged) {
            match (bad, inl) {
                (false, true) => tp += 1,
                (true, true) => fp += 1,
                (false, false) => fn_ += 1,
                _ => {}
            }
        }
        with_outliers.push(direction_error_deg(&(est.position - p.home.s), &(p.current.s - p.home.s)));

        let p = two_view_problem(&TwoViewParams { outlier_rate: 0.0, ..params }, &k, 7000 + seed).unwrap();
        let est = mlesac_position(&p.correspondences, &mlesac, SolveMode::Homogeneous).unwrap();
        without.push(direction_error_deg(&(est.position - p.home.s), &(p.current.s - p.home.s)));
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (m_out, m_clean) = (median(&mut with_outliers), median(&mut without));
    assert!(precision >= 0.95, "precision {precision}");
    assert!(recall >= 0.90, "recall {recall}");
    assert!(m_out < 2.0 * m_clean, "median error {m_out}° vs {m_clean}° without outliers");
}

#[test]
fn all_outliers_have_no_consensus() {
    let mut g = rng(600);
    let p = two_view_problem(&clean(5, 0.0), &CameraIntrinsics::default(), 3).unwrap();
    let b_home = p.home.r.transpose().apply(&(p.current.s - p.home.s)).normalize();
    let cs: Vec<Correspondence> = p
        .correspondences
        .iter()
        .map(|c| Correspondence { cur: inconsistent_ray(&mut g, c, &b_home), ..*c })
        .collect();
    assert!(matches!(
        mlesac_position(&cs, &MlesacParams::default(), SolveMode::Homogeneous),
        Err(RobustError::NoConsensus { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn deterministic_for_a_seed(problem_seed in 0u64..1_000_000, seed in any::<u64>()) {
        let params = TwoViewParams { outlier_rate: 0.3, ..TwoViewParams::default() };
        let p = two_view_problem(&params, &CameraIntrinsics::default(), problem_seed).unwrap();
        let mlesac = MlesacParams { seed, ..MlesacParams::default() };
        let a = mlesac_position(&p.correspondences, &mlesac, SolveMode::Homogeneous);
        let b = mlesac_position(&p.correspondences, &mlesac, SolveMode::Homogeneous);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn returned_inliers_are_reproduced_by_rescoring(problem_seed in 0u64..1_000_000) {
        let params = TwoViewParams { outlier_rate: 0.3, ..TwoViewParams::default() };
        let p = two_view_problem(&params, &CameraIntrinsics::default(), problem_seed).unwrap();
        let mlesac = MlesacParams::default();
        if let Ok(est) = mlesac_position(&p.correspondences, &mlesac, SolveMode::Homogeneous) {
            let (score, inliers) = score_hypothesis(&est.position, &p.correspondences, mlesac.cos_cutoff).unwrap();
            prop_assert_eq!(inliers, est.inliers);
            prop_assert_eq!(score, est.score);
        }
    }

    #[test]
    fn score_ignores_baseline_length(problem_seed in 0u64..1_000_000, scale in 1e-3f64..1e3) {
        let params = TwoViewParams { outlier_rate: 0.3, ..TwoViewParams::default() };
        let p = two_view_problem(&params, &CameraIntrinsics::default(), problem_seed).unwrap();
        let c = cutoff();
        let (a, ia) = score_hypothesis(&p.current.s, &p.correspondences, c).unwrap();
        let (b, ib) = score_hypothesis(&(p.home.s + (p.current.s - p.home.s) * scale), &p.correspondences, c).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert_eq!(ia, ib);
    }

    #[test]
    fn truncation_caps_every_term(problem_seed in 0u64..1_000_000, cut_deg in 3.0f64..7.0) {
        let params = TwoViewParams { outlier_rate: 0.5, ..TwoViewParams::default() };
        let p = two_view_problem(&params, &CameraIntrinsics::default(), problem_seed).unwrap();
        let c = cut_deg.to_radians().cos();
        let n = p.correspondences.len();
        let (total, inliers) = score_hypothesis(&p.current.s, &p.correspondences, c).unwrap();
        prop_assert!(total <= n as f64 * (1.0 - c) + 1e-12);
        prop_assert!(total >= (n - inliers.len()) as f64 * (1.0 - c) - 1e-12);
        for i in 0..n {
            let (single, _) = score_hypothesis(&p.current.s, &p.correspondences[i..=i], c).unwrap();
            prop_assert!(single <= 1.0 - c + 1e-15);
        }
    }
}
