//! Planar convex bodies described by their support functions.
//!
//! A compact convex set `T` is identified with `σ_T(u) = sup_{x∈T} ⟨x, u⟩`
//! on unit directions. Hausdorff distance, membership and point distance all
//! reduce to maxima over directions of support differences; those maxima are
//! taken on a uniform grid followed by one golden-section refinement around
//! the grid argmax.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::exec::{argmax, Exec};

pub type Point = Vector2<f64>;

/// Default number of grid directions for support-function maxima.
pub const DEFAULT_GRID: usize = 2048;

/// Membership slack on `⟨x,u⟩ ≤ σ(u)`.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// A unit vector `(cos θ, sin θ)` with θ normalized to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitDirection {
    angle: f64,
    cos: f64,
    sin: f64,
}

impl UnitDirection {
    pub fn new(angle: f64) -> Self {
        let a = normalize_angle(angle);
        Self {
            angle: a,
            cos: a.cos(),
            sin: a.sin(),
        }
    }

    /// Direction of a nonzero vector.
    pub fn of(v: &Point) -> Self {
        Self::new(v.y.atan2(v.x))
    }

    #[inline]
    pub fn angle(&self) -> f64 {
        self.angle
    }

    #[inline]
    pub fn vector(&self) -> Point {
        Point::new(self.cos, self.sin)
    }

    #[inline]
    pub fn dot(&self, x: &Point) -> f64 {
        self.cos * x.x + self.sin * x.y
    }

    /// `n` uniformly spaced directions starting at angle 0.
    pub fn grid(n: usize) -> Vec<UnitDirection> {
        (0..n).map(|j| UnitDirection::new(TAU * j as f64 / n as f64)).collect()
    }
}

pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A compact convex subset of the plane with an exactly evaluable support
/// function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ConvexBody {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Hull of the curve made of the first `m` edges of the regular `n`-gon
    /// inscribed in the circle of radius `rho` (vertices at angles `2πj/n`,
    /// `j = 0..=m`) closed by the arc of that circle over `[2πm/n, 2π]`.
    PolygonArc {
        n: u32,
        m: u32,
        rho: f64,
    },
    /// Convex hull of a finite point cloud.
    Hull {
        vertices: Vec<[f64; 2]>,
    },
    /// Minkowski combination `t·A + (1−t)·B`.
    Blend {
        a: Box<ConvexBody>,
        b: Box<ConvexBody>,
        t: f64,
    },
    /// Support values on `N` uniform directions, linearly interpolated in angle.
    Grid {
        values: Vec<f64>,
    },
}

impl ConvexBody {
    pub fn disk(radius: f64) -> Self {
        ConvexBody::Disk {
            center: [0.0, 0.0],
            radius,
        }
    }

    pub fn hull(points: &[Point]) -> Self {
        ConvexBody::Hull {
            vertices: points.iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    pub fn blend(a: ConvexBody, b: ConvexBody, t: f64) -> Self {
        ConvexBody::Blend {
            a: Box::new(a),
            b: Box::new(b),
            t,
        }
    }

    /// Tabulates the support function of `self` on `n` uniform directions.
    pub fn sampled(&self, n: usize) -> Self {
        ConvexBody::Grid {
            values: UnitDirection::grid(n).iter().map(|u| self.support(u)).collect(),
        }
    }

    /// `σ(u) = sup_{x∈T} ⟨x, u⟩`.
    pub fn support(&self, u: &UnitDirection) -> f64 {
        match self {
            ConvexBody::Disk { center, radius } => u.cos * center[0] + u.sin * center[1] + radius,
            ConvexBody::PolygonArc { n, m, rho } => polygon_arc_support(*n, *m, *rho, u.angle),
            ConvexBody::Hull { vertices } => vertices
                .iter()
                .map(|v| u.cos * v[0] + u.sin * v[1])
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Blend { a, b, t } => t * a.support(u) + (1.0 - t) * b.support(u),
            ConvexBody::Grid { values } => {
                let n = values.len();
                let pos = u.angle / TAU * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let w = pos - i as f64;
                (1.0 - w) * values[i] + w * values[(i + 1) % n]
            }
        }
    }

    /// A point of the body where `⟨x,u⟩ = σ(u)`, when the kind admits one in
    /// closed form.
    pub fn support_point(&self, u: &UnitDirection) -> Option<Point> {
        match self {
            ConvexBody::Disk { center, radius } => Some(Point::new(center[0], center[1]) + u.vector() * *radius),
            ConvexBody::PolygonArc { n, m, rho } => {
                let step = TAU / *n as f64;
                if u.angle >= *m as f64 * step {
                    Some(u.vector() * *rho)
                } else {
                    let j = (u.angle / step).round().min(*m as f64);
                    let a = j * step;
                    Some(Point::new(a.cos(), a.sin()) * *rho)
                }
            }
            ConvexBody::Hull { vertices } => vertices
                .iter()
                .max_by(|p, q| {
                    let dp = u.cos * p[0] + u.sin * p[1];
                    let dq = u.cos * q[0] + u.sin * q[1];
                    dp.total_cmp(&dq)
                })
                .map(|v| Point::new(v[0], v[1])),
            ConvexBody::Blend { a, b, t } => Some(a.support_point(u)? * *t + b.support_point(u)? * (1.0 - t)),
            ConvexBody::Grid { .. } => None,
        }
    }

    /// Exact membership for the closed-form kinds (disk and polygon-arc).
    pub fn contains_exact(&self, x: &Point) -> Option<bool> {
        match self {
            ConvexBody::Disk { center, radius } => Some((x - Point::new(center[0], center[1])).norm() <= *radius),
            ConvexBody::PolygonArc { n, m, rho } => {
                let step = TAU / *n as f64;
                let psi = normalize_angle(x.y.atan2(x.x));
                if psi >= *m as f64 * step {
                    Some(x.norm() <= *rho)
                } else {
                    let j = (psi / step).floor();
                    let mid = (j + 0.5) * step;
                    Some(x.x * mid.cos() + x.y * mid.sin() <= rho * (PI / *n as f64).cos())
                }
            }
            _ => None,
        }
    }
}

fn polygon_arc_support(n: u32, m: u32, rho: f64, angle: f64) -> f64 {
    let step = TAU / n as f64;
    if angle >= m as f64 * step {
        return rho;
    }
    let j = (angle / step).round().min(m as f64);
    rho * (angle - j * step).cos()
}

/// Location and value of a maximum over unit directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirMax {
    pub angle: f64,
    pub value: f64,
}

/// Maximizes `f(θ)` on an `n`-point uniform grid, then refines with golden
/// section on the two grid cells adjacent to the argmax.
pub fn refined_max<F>(n: usize, exec: Exec, f: F) -> DirMax
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    assert!(n >= 3, "direction grid needs at least 3 points");
    let h = TAU / n as f64;
    let values = exec.map(n, |j| f(h * j as f64));
    let i = argmax(&values).unwrap_or(0);
    let grid = DirMax {
        angle: h * i as f64,
        value: values[i],
    };
    let refined = golden_max(&f, grid.angle - h, grid.angle + h, 1e-13);
    if refined.value > grid.value {
        DirMax {
            angle: normalize_angle(refined.angle),
            value: refined.value,
        }
    } else {
        grid
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> DirMax {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (angle, value) = if fc >= fd { (c, fc) } else { (d, fd) };
    DirMax { angle, value }
}

/// Hausdorff distance `max_u |σ_A(u) − σ_B(u)|`.
pub fn hausdorff_dist(a: &ConvexBody, b: &ConvexBody, n: usize) -> f64 {
    hausdorff_dist_with(a, b, n, Exec::default())
}

pub fn hausdorff_dist_with(a: &ConvexBody, b: &ConvexBody, n: usize, exec: Exec) -> f64 {
    refined_max(n, exec, |t| {
        let u = UnitDirection::new(t);
        (a.support(&u) - b.support(&u)).abs()
    })
    .value
}

/// Largest violation `max_u ⟨x,u⟩ − σ(u)` and its direction.
pub fn max_violation(body: &ConvexBody, x: &Point, n: usize) -> DirMax {
    refined_max(n, Exec::Sequential, |t| {
        let u = UnitDirection::new(t);
        u.dot(x) - body.support(&u)
    })
}

/// Membership: `⟨x,u⟩ ≤ σ(u) + 1e−12` on the refined direction grid.
pub fn contains(body: &ConvexBody, x: &Point, n: usize) -> bool {
    max_violation(body, x, n).value <= MEMBERSHIP_SLACK
}

/// `dist(x, T) = max(0, max_u ⟨x,u⟩ − σ_T(u))`.
pub fn dist_to_body(x: &Point, body: &ConvexBody, n: usize) -> f64 {
    max_violation(body, x, n).value.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: u32, m: u32, rho: f64) -> ConvexBody {
        ConvexBody::PolygonArc { n, m, rho }
    }

    #[test]
    fn unit_direction_is_normalized() {
        for a in [-7.0, -0.1, 0.0, 1.0, 6.3, 100.0] {
            let u = UnitDirection::new(a);
            assert!((u.vector().norm() - 1.0).abs() < 1e-12);
            assert!((0.0..TAU).contains(&u.angle()));
        }
    }

    #[test]
    fn disk_and_square_supports() {
        let d = ConvexBody::disk(1.0);
        for u in UnitDirection::grid(17) {
            assert_eq!(d.support(&u), 1.0);
        }
        let sq = ConvexBody::hull(&[
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
        ]);
        assert_eq!(sq.support(&UnitDirection::new(0.0)), 1.0);
        assert!((sq.support(&UnitDirection::new(PI / 4.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ring_support_matches_boundary_sampling() {
        // brute force over dense samples of the boundary curve
        let mu: f64 = 1.0 - 1.0 / 125.0;
        let (n, m) = (5u32, 2u32);
        let rho = mu * mu * 0.28;
        let body = ring(n, m, rho);
        let step = TAU / n as f64;
        let mut pts = Vec::new();
        let samples = 100_000;
        for j in 0..m {
            let a = Point::new((j as f64 * step).cos(), (j as f64 * step).sin()) * rho;
            let b = Point::new(((j + 1) as f64 * step).cos(), ((j + 1) as f64 * step).sin()) * rho;
            for s in 0..samples / 10 {
                let w = s as f64 / (samples / 10) as f64;
                pts.push(a * (1.0 - w) + b * w);
            }
        }
        let arc0 = m as f64 * step;
        for s in 0..=samples {
            let a = arc0 + (TAU - arc0) * s as f64 / samples as f64;
            pts.push(Point::new(a.cos(), a.sin()) * rho);
        }
        for angle in [PI / 5.0, 0.1, 1.3, 2.0, 3.0, 5.5] {
            let u = UnitDirection::new(angle);
            let brute = pts.iter().map(|p| u.dot(p)).fold(f64::MIN, f64::max);
            assert!((body.support(&u) - brute).abs() < 1e-9, "angle {angle}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = ConvexBody::disk(1.0);
        let b = ConvexBody::disk(0.4);
        assert!((hausdorff_dist(&a, &b, 64) - 0.6).abs() < 1e-14);
        assert_eq!(hausdorff_dist(&a, &a, 64), 0.0);
    }

    #[test]
    fn ring_to_previous_stage_distance() {
        let n = 7u32;
        let mu = 1.0 - 1.0 / (n as f64).powi(3);
        let r = 0.3;
        for m in 2..=n {
            let a = ring(n, m - 1, mu.powi(m as i32 - 1) * r);
            let b = ring(n, m, mu.powi(m as i32) * r);
            let want = mu.powi(m as i32 - 1) * r * (1.0 - mu * (PI / n as f64).cos());
            let got = hausdorff_dist(&a, &b, DEFAULT_GRID);
            assert!((got - want).abs() <= 1e-9 * want, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn membership_and_distance() {
        let d = ConvexBody::disk(1.0);
        assert!(contains(&d, &Point::new(0.0, 0.0), 64));
        assert!(!contains(&d, &Point::new(2.0, 0.0), 64));
        assert!((dist_to_body(&Point::new(2.0, 0.0), &d, 64) - 1.0).abs() < 1e-12);
        assert_eq!(dist_to_body(&Point::new(0.1, 0.2), &d, 64), 0.0);
        let small = ConvexBody::disk(0.1);
        assert!((dist_to_body(&Point::new(0.2, 0.0), &small, 64) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ring_vertices_are_members() {
        let body = ring(6, 4, 0.7);
        for j in 0..=4 {
            let a = TAU * j as f64 / 6.0;
            let v = Point::new(a.cos(), a.sin()) * 0.7;
            assert!(contains(&body, &v, DEFAULT_GRID));
            assert_eq!(body.contains_exact(&(v * (1.0 - 1e-12))), Some(true));
        }
        assert_eq!(body.contains_exact(&Point::new(0.0, 0.71)), Some(false));
    }

    #[test]
    fn exact_membership_agrees_with_support_test() {
        let body = ring(5, 3, 0.5);
        let mut k = 0;
        for i in 0..40 {
            for j in 0..40 {
                let x = Point::new(-0.6 + 1.2 * i as f64 / 39.0, -0.6 + 1.2 * j as f64 / 39.0);
                let v = max_violation(&body, &x, 512).value;
                if v.abs() < 1e-9 {
                    continue;
                }
                assert_eq!(body.contains_exact(&x), Some(v <= 0.0), "{x:?}");
                k += 1;
            }
        }
        assert!(k > 1000);
    }

    #[test]
    fn blend_support_is_pointwise_blend() {
        let a = ring(4, 2, 0.9);
        let b = ConvexBody::disk(0.3);
        let c = ConvexBody::blend(a.clone(), b.clone(), 0.25);
        for u in UnitDirection::grid(31) {
            let want = 0.25 * a.support(&u) + 0.75 * b.support(&u);
            assert!((c.support(&u) - want).abs() <= 1e-14);
        }
    }
}
