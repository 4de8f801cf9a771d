//! Minimal SVG charts: trajectory overlay, error against distance and the
//! error histogram. Axes are in meters; GPS is drawn blue and visual
//! odometry red.

use std::fmt::Write;

pub const GPS_COLOR: &str = "#1f4fd1";
pub const VO_COLOR: &str = "#d1261f";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

/// Rounded tick step giving roughly `target` intervals over `span`.
fn tick_step(span: f64, target: f64) -> f64 {
    if !(span > 0.0) {
        return 1.0;
    }
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo, 6.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data window mapped onto the plot area.
struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y) }
    }

    /// Grows one range so a meter has the same length on both axes.
    fn equal_aspect(mut self) -> Self {
        let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let sx = (self.x.1 - self.x.0) / w;
        let sy = (self.y.1 - self.y.0) / h;
        if sx > sy {
            let pad = 0.5 * (sx * h - (self.y.1 - self.y.0));
            self.y = (self.y.0 - pad, self.y.1 + pad);
        } else {
            let pad = 0.5 * (sy * w - (self.x.1 - self.x.0));
            self.x = (self.x.0 - pad, self.x.1 + pad);
        }
        self
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn padded((lo, hi): (f64, f64), frac: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = (hi - lo) * frac;
    (lo - pad, hi + pad)
}

fn frame(svg: &mut String, axes: &Axes, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="28" font-size="18" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    for t in ticks(axes.x.0, axes.x.1) {
        let x = axes.px(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#e4e4e4"/>"##);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, y1 + 18.0, label(t));
    }
    for t in ticks(axes.y.0, axes.y.1) {
        let y = axes.py(t);
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e4e4e4"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, label(t));
    }
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y1 - y0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{0}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn polyline(svg: &mut String, axes: &Axes, points: &[(f64, f64)], color: &str) {
    let mut d = String::new();
    for (x, y) in points {
        let _ = write!(d, "{:.2},{:.2} ", axes.px(*x), axes.py(*y));
    }
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
}

fn legend(svg: &mut String, entries: &[(&str, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 18.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT - 130.0;
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/>"#, x + 24.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, x + 30.0, y + 4.0, escape(name));
    }
}

/// Reference and aligned estimate, east/north in meters, equal aspect.
pub fn overlay(reference: &[(f64, f64)], estimate: &[(f64, f64)]) -> String {
    let all = || reference.iter().chain(estimate);
    let axes = Axes::new(padded(extent(all().map(|p| p.0)), 0.05), padded(extent(all().map(|p| p.1)), 0.05)).equal_aspect();
    let mut svg = String::new();
    frame(&mut svg, &axes, "Trajectory", "east (m)", "north (m)");
    polyline(&mut svg, &axes, reference, GPS_COLOR);
    polyline(&mut svg, &axes, estimate, VO_COLOR);
    legend(&mut svg, &[("GPS", GPS_COLOR), ("VO (aligned)", VO_COLOR)]);
    svg.push_str("</svg>\n");
    svg
}

/// Position error against distance travelled.
pub fn error_vs_distance(points: &[(f64, f64)]) -> String {
    let x = extent(points.iter().map(|p| p.0));
    let (_, ymax) = extent(points.iter().map(|p| p.1));
    let axes = Axes::new(if x.0.is_finite() { x } else { (0.0, 1.0) }, (0.0, if ymax > 0.0 { ymax * 1.1 } else { 1.0 }));
    let mut svg = String::new();
    frame(&mut svg, &axes, "Position error vs distance travelled", "distance travelled (m)", "position error (m)");
    polyline(&mut svg, &axes, points, VO_COLOR);
    svg.push_str("</svg>\n");
    svg
}

/// Bars over `edges` (one more edge than counts).
pub fn histogram(edges: &[f64], counts: &[usize]) -> String {
    let lo = edges.first().copied().unwrap_or(0.0);
    let hi = edges.last().copied().unwrap_or(1.0);
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let axes = Axes::new((lo, hi), (0.0, top * 1.1));
    let mut svg = String::new();
    frame(&mut svg, &axes, "Error distribution", "position error (m)", "samples");
    for (i, c) in counts.iter().enumerate() {
        let (a, b) = (edges[i], edges[i + 1]);
        let (x0, x1) = (axes.px(a), axes.px(b));
        let (y0, y1) = (axes.py(*c as f64), axes.py(0.0));
        let _ = writeln!(
            svg,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{VO_COLOR}" fill-opacity="0.7" stroke="#7a1410"/>"##,
            (x1 - x0).max(0.0),
            (y1 - y0).max(0.0)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
