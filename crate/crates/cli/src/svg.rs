//! Minimal SVG overlays on a fixed 800×800 viewBox.
//!
//! World coordinates are mapped with equal scales on both axes into the
//! square window `[cx − h, cx + h] × [cy − h, cy + h]`, y pointing up.

use std::fmt::Write as _;

use kl_core::Point;

pub const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

pub struct Svg {
    cx: f64,
    cy: f64,
    half: f64,
    body: String,
}

impl Svg {
    /// Window fitted around `points` (the unit square if there are none
    /// with finite coordinates).
    pub fn fitted<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) =
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            if p.x.is_finite() && p.y.is_finite() {
                lo_x = lo_x.min(p.x);
                lo_y = lo_y.min(p.y);
                hi_x = hi_x.max(p.x);
                hi_y = hi_y.max(p.y);
            }
        }
        if !lo_x.is_finite() {
            return Svg::window(0.0, 0.0, 1.0);
        }
        let half = 0.5 * (hi_x - lo_x).max(hi_y - lo_y);
        Svg::window(
            0.5 * (lo_x + hi_x),
            0.5 * (lo_y + hi_y),
            if half > 0.0 { half } else { 1.0 },
        )
    }

    pub fn window(cx: f64, cy: f64, half: f64) -> Self {
        Svg {
            cx,
            cy,
            half,
            body: String::new(),
        }
    }

    fn map(&self, p: &Point) -> (f64, f64) {
        let s = (SIZE - 2.0 * MARGIN) / (2.0 * self.half);
        (SIZE / 2.0 + s * (p.x - self.cx), SIZE / 2.0 - s * (p.y - self.cy))
    }

    fn coords(&self, points: &[Point]) -> String {
        let mut out = String::new();
        for p in points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()) {
            let (x, y) = self.map(p);
            if !out.is_empty() {
                out.push(' ');
            }
            write!(out, "{x:.2},{y:.2}").unwrap();
        }
        out
    }

    pub fn polyline(&mut self, points: &[Point], stroke: &str, width: f64) {
        let c = self.coords(points);
        writeln!(
            self.body,
            r#"<polyline points="{c}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#
        )
        .unwrap();
    }

    pub fn polygon(&mut self, points: &[Point], stroke: &str, width: f64) {
        let c = self.coords(points);
        writeln!(
            self.body,
            r#"<polygon points="{c}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#
        )
        .unwrap();
    }

    pub fn dot(&mut self, p: &Point, fill: &str, radius: f64) {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return;
        }
        let (x, y) = self.map(p);
        writeln!(
            self.body,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{radius}" fill="{fill}"/>"#
        )
        .unwrap();
    }

    pub fn label(&mut self, text: &str) {
        let escaped = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        writeln!(
            self.body,
            r#"<text x="{MARGIN}" y="{}" font-family="monospace" font-size="14">{escaped}</text>"#,
            MARGIN
        )
        .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" width=\"{SIZE}\" height=\"{SIZE}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}
