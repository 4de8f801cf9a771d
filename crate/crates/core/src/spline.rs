//! Centripetal Catmull-Rom curves through planar points with an arc-length
//! table, so that curves can be sampled at a fraction of their length.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use alloc::vec::Vec;

use log::warn;
use nalgebra::Vector2;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Control points closer than this are merged.
pub const DUPLICATE_DISTANCE: f64 = 1e-9;

/// Worst-case length error of [`CatmullRomSpline::point_at_fraction`],
/// meters. The search itself runs to round-off.
pub const LENGTH_TOLERANCE: f64 = 1e-9;

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_78,
    0.183_434_642_495_649_78,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_69,
    0.222_381_034_453_374_34,
    0.313_706_645_877_887_05,
    0.362_683_783_378_361_77,
    0.362_683_783_378_361_77,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("need at least 2 distinct points, got {0}")]
    InsufficientData(usize),
    #[error("non-finite control point at index {0}")]
    NonFinite(usize),
    #[error("fraction {0} outside [0, 1]")]
    Range(f64),
}

/// East/north position in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub e: f64,
    pub n: f64,
}

impl PlanarPoint {
    pub fn new(e: f64, n: f64) -> Self {
        Self { e, n }
    }

    pub fn to_vec(self) -> Vec2 {
        Vec2::new(self.e, self.n)
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        (self.to_vec() - other.to_vec()).norm()
    }
}

impl From<Vec2> for PlanarPoint {
    fn from(v: Vec2) -> Self {
        Self { e: v.x, n: v.y }
    }
}

/// Cubic `c0 + c1 s + c2 s² + c3 s³` on `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub c: [Vec2; 4],
}

impl Segment {
    pub fn point(&self, s: f64) -> Vec2 {
        self.c[0] + (self.c[1] + (self.c[2] + self.c[3] * s) * s) * s
    }

    pub fn derivative(&self, s: f64) -> Vec2 {
        self.c[1] + (self.c[2] * 2.0 + self.c[3] * (3.0 * s)) * s
    }

    /// Arc length over `[0, s]` by 8-point Gauss-Legendre.
    pub fn length_to(&self, s: f64) -> f64 {
        let half = 0.5 * s;
        GL8_NODES
            .iter()
            .zip(GL8_WEIGHTS.iter())
            .map(|(x, w)| w * self.derivative(half * (x + 1.0)).norm())
            .sum::<f64>()
            * half
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatmullRomSpline {
    control: Vec<PlanarPoint>,
    segments: Vec<Segment>,
    /// Cumulative length at the start of every segment plus the total.
    arc_table: Vec<f64>,
}

fn centripetal_segment(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2) -> Segment {
    let knot = |a: Vec2, b: Vec2| (b - a).norm().sqrt();
    let d01 = knot(p0, p1);
    let d12 = knot(p1, p2);
    let d23 = knot(p2, p3);
    let m1 = (p1 - p0) / d01 - (p2 - p0) / (d01 + d12) + (p2 - p1) / d12;
    let m2 = (p2 - p1) / d12 - (p3 - p1) / (d12 + d23) + (p3 - p2) / d23;
    let m1 = m1 * d12;
    let m2 = m2 * d12;
    Segment {
        c: [p1, m1, p1 * -3.0 + p2 * 3.0 - m1 * 2.0 - m2, p1 * 2.0 - p2 * 2.0 + m1 + m2],
    }
}

impl CatmullRomSpline {
    /// Interpolating curve through `points`. Coincident consecutive points
    /// are merged; the end tangents use reflected phantom points.
    pub fn fit(points: &[PlanarPoint]) -> Result<Self, SplineError> {
        let mut control: Vec<PlanarPoint> = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if !(p.e.is_finite() && p.n.is_finite()) {
                return Err(SplineError::NonFinite(i));
            }
            if control.last().is_some_and(|q| q.distance(p) < DUPLICATE_DISTANCE) {
                warn!("dropping duplicate control point {i}");
                continue;
            }
            control.push(*p);
        }
        if control.len() < 2 {
            return Err(SplineError::InsufficientData(control.len()));
        }
        let v: Vec<Vec2> = control.iter().map(|p| p.to_vec()).collect();
        let n = v.len();
        let first = v[0] * 2.0 - v[1];
        let last = v[n - 1] * 2.0 - v[n - 2];
        let at = |i: isize| -> Vec2 {
            if i < 0 {
                first
            } else if i as usize >= n {
                last
            } else {
                v[i as usize]
            }
        };
        let segments: Vec<Segment> = (0..n - 1)
            .map(|i| {
                let i = i as isize;
                centripetal_segment(at(i - 1), at(i), at(i + 1), at(i + 2))
            })
            .collect();
        let mut arc_table = Vec::with_capacity(n);
        let mut acc = 0.0;
        arc_table.push(0.0);
        for s in &segments {
            acc += s.length_to(1.0);
            arc_table.push(acc);
        }
        Ok(Self { control, segments, arc_table })
    }

    pub fn control(&self) -> &[PlanarPoint] {
        &self.control
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn arc_table(&self) -> &[f64] {
        &self.arc_table
    }

    pub fn total_length(&self) -> f64 {
        *self.arc_table.last().unwrap_or(&0.0)
    }

    /// Point at curve parameter `t ∈ [0, 1]` (uniform over segments).
    pub fn point_at_parameter(&self, t: f64) -> PlanarPoint {
        let (i, s) = self.locate(t);
        self.segments[i].point(s).into()
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let x = t.clamp(0.0, 1.0) * self.segments.len() as f64;
        let i = (x.floor() as usize).min(self.segments.len() - 1);
        (i, x - i as f64)
    }

    /// Point at which the arc length from the start equals `u` times the
    /// total length.
    pub fn point_at_fraction(&self, u: f64) -> Result<PlanarPoint, SplineError> {
        if !(0.0..=1.0).contains(&u) {
            return Err(SplineError::Range(u));
        }
        if u == 0.0 {
            return Ok(self.control[0]);
        }
        if u == 1.0 {
            return Ok(*self.control.last().expect("at least two control points"));
        }
        let target = u * self.total_length();
        let i = (self.arc_table.partition_point(|&l| l <= target) - 1).min(self.segments.len() - 1);
        let seg = &self.segments[i];
        let remaining = target - self.arc_table[i];
        let s = solve_length(seg, remaining, self.arc_table[i + 1] - self.arc_table[i]);
        Ok(seg.point(s).into())
    }
}

/// Local parameter with `length_to(s) = target`: Newton steps safeguarded
/// by bisection.
fn solve_length(seg: &Segment, target: f64, seg_length: f64) -> f64 {
    if seg_length <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut s = (target / seg_length).clamp(0.0, 1.0);
    for _ in 0..100 {
        let f = seg.length_to(s) - target;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let speed = seg.derivative(s).norm();
        let newton = s - f / speed;
        let next = if speed > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == s || hi - lo < 1e-15 {
            break;
        }
        s = next;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_form_a_straight_segment() {
        let pts: Vec<PlanarPoint> = (0..4).map(|i| PlanarPoint::new(i as f64 * 2.0, 1.0)).collect();
        let s = CatmullRomSpline::fit(&pts).unwrap();
        assert!((s.total_length() - 6.0).abs() < 1e-9);
        for k in 0..=20 {
            let p = s.point_at_parameter(k as f64 / 20.0);
            assert!((p.n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_square_corners() {
        let pts = [
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(10.0, 0.0),
            PlanarPoint::new(10.0, 10.0),
            PlanarPoint::new(0.0, 10.0),
        ];
        let s = CatmullRomSpline::fit(&pts).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let q = s.point_at_parameter(i as f64 / 3.0);
            assert!(q.distance(p) < 1e-9, "corner {i}");
        }
    }

    #[test]
    fn fraction_endpoints_and_quarter() {
        let pts = [PlanarPoint::new(0.0, 0.0), PlanarPoint::new(100.0, 0.0)];
        let s = CatmullRomSpline::fit(&pts).unwrap();
        assert_eq!(s.point_at_fraction(0.0).unwrap(), pts[0]);
        assert_eq!(s.point_at_fraction(1.0).unwrap(), pts[1]);
        let q = s.point_at_fraction(0.25).unwrap();
        assert!((q.e - 25.0).abs() < 1e-9 && q.n.abs() < 1e-12);
        assert_eq!(s.point_at_fraction(1.5), Err(SplineError::Range(1.5)));
    }

    #[test]
    fn duplicates_are_dropped_and_single_point_rejected() {
        let p = PlanarPoint::new(1.0, 2.0);
        assert_eq!(CatmullRomSpline::fit(&[p, p, p]), Err(SplineError::InsufficientData(1)));
        let s = CatmullRomSpline::fit(&[p, p, PlanarPoint::new(2.0, 2.0)]).unwrap();
        assert_eq!(s.control().len(), 2);
    }
}
