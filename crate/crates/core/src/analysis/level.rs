//! Level curves, sublevel bodies and minimal slopes per level.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::{argmin, Exec};
use crate::geometry::{golden_max, ConvexBody, Point, UnitDirection};
use crate::zoo::ScalarField;

/// Slopes below this violate the no-critical-value condition on the grid.
pub const CRITICAL_SLOPE: f64 = 1e-12;

/// Point of `[f − min f = r]` at curve parameter `angle`.
///
/// Uses the field's own parametrization when it has one, otherwise radial
/// bisection from the origin.
pub fn level_point(field: &dyn ScalarField, r: f64, angle: f64) -> Result<Point> {
    if let Some(p) = field.level_point(r, angle) {
        return Ok(p);
    }
    radial_level_point(field, r, angle)
}

/// Point of `[f − min f = r]` on the ray at `angle`, by bracketed root
/// finding on the field's values alone.
///
/// Steps extrapolate the secant through the two latest points below the
/// level, falling back on the chord across the bracket and on bisection
/// whenever two steps fail to halve the bracket. Along a ray of a convex
/// field the root often sits on a kink where a new smooth piece starts;
/// the one-sided secant still converges fast there, while a two-sided
/// chord would only crawl.
pub fn radial_level_point(field: &dyn ScalarField, r: f64, angle: f64) -> Result<Point> {
    let u = UnitDirection::new(angle).vector();
    let gap = |t: f64| field.excess(&(u * t)) / r - 1.0;
    let mut lo = 0.0;
    let mut g_lo = gap(lo);
    if !(g_lo < 0.0) {
        return Err(Error::NotStarShaped { angle });
    }
    let mut hi = 1.0;
    let mut g_hi = gap(hi);
    let mut doublings = 0;
    while !(g_hi > 0.0) {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        g_hi = gap(hi);
        doublings += 1;
        if doublings > 64 {
            return Err(Error::NotStarShaped { angle });
        }
    }
    let mut below: Option<(f64, f64)> = None;
    let mut widths = [f64::INFINITY; 2];
    for _ in 0..400 {
        let width = hi - lo;
        if width <= 2.0 * f64::EPSILON * hi {
            break;
        }
        let inside = |t: f64| t > lo && t < hi;
        let chord = lo - g_lo * width / (g_hi - g_lo);
        let mut next = match below {
            Some((t, g)) if g < g_lo => lo - g_lo * (lo - t) / (g_lo - g),
            _ => chord,
        };
        if !inside(next) {
            next = chord;
        }
        if !inside(next) || width > 0.5 * widths[0] {
            next = 0.5 * (lo + hi);
        }
        if !inside(next) {
            break;
        }
        widths = [widths[1], width];
        let g = gap(next);
        if g.abs() <= 4.0 * f64::EPSILON {
            return Ok(u * next);
        }
        if g < 0.0 {
            below = Some((lo, g_lo));
            lo = next;
            g_lo = g;
        } else {
            hi = next;
            g_hi = g;
        }
    }
    let t = if g_lo.abs() <= g_hi.abs() { lo } else { hi };
    Ok(u * t)
}

/// `n` points of `[f − min f = r]` at uniform curve parameters.
pub fn trace_level(field: &dyn ScalarField, r: f64, n: usize) -> Result<Vec<Point>> {
    trace_level_with(field, r, n, Exec::default())
}

pub fn trace_level_with(field: &dyn ScalarField, r: f64, n: usize, exec: Exec) -> Result<Vec<Point>> {
    if !(r > 0.0) || n < 3 {
        return Err(Error::InvalidArgument(format!(
            "level {r} must be positive and n = {n} at least 3"
        )));
    }
    exec.map(n, |i| level_point(field, r, TAU * i as f64 / n as f64))
        .into_iter()
        .collect()
}

/// The sublevel set `[f − min f ≤ r]`: the exact body when the field knows
/// it, else the hull of `n` traced level points.
pub fn sublevel_body(field: &dyn ScalarField, r: f64, n: usize) -> Result<ConvexBody> {
    if let Some(b) = field.sublevel_body(r) {
        return Ok(b);
    }
    Ok(ConvexBody::hull(&trace_level(field, r, n)?))
}

/// `r_j = r0·q^j`, `j = 0..levels`.
pub fn geometric_grid(r0: f64, levels: usize, ratio: f64) -> Result<Vec<f64>> {
    if !(r0 > 0.0) || levels == 0 || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "grid needs r0 > 0, levels ≥ 1 and ratio in (0, 1); got {r0}, {levels}, {ratio}"
        )));
    }
    Ok((0..levels).map(|j| r0 * ratio.powi(j as i32)).collect())
}

/// Minimal slope on one level, with the minimizing point.
#[derive(Clone, Debug)]
pub struct LevelSlopes {
    pub r: f64,
    pub points: Vec<Point>,
    pub slopes: Vec<f64>,
    /// Refined minimum of `‖∂⁰f‖` over the level.
    pub min_slope: f64,
    pub argmin: Point,
}

/// Traces a level, takes the smallest slope on the grid and refines it by
/// golden section between the neighbouring grid parameters.
pub fn level_slopes(field: &dyn ScalarField, r: f64, n: usize) -> Result<LevelSlopes> {
    let points = trace_level_with(field, r, n, Exec::Sequential)?;
    let slopes: Vec<f64> = points.iter().map(|p| field.subgradient(p).norm()).collect();
    let i = argmin(&slopes).ok_or(Error::CriticalValue {
        level: r,
        slope: f64::NAN,
    })?;
    let h = TAU / n as f64;
    let a = h * i as f64;
    let neg_slope = |t: f64| match level_point(field, r, t) {
        Ok(p) => -field.subgradient(&p).norm(),
        Err(_) => f64::NEG_INFINITY,
    };
    let refined = golden_max(&neg_slope, a - h, a + h, 1e-10);
    let (min_slope, argmin) = if -refined.value < slopes[i] {
        (-refined.value, level_point(field, r, refined.angle)?)
    } else {
        (slopes[i], points[i])
    };
    if !(min_slope >= CRITICAL_SLOPE) {
        return Err(Error::CriticalValue {
            level: r,
            slope: min_slope,
        });
    }
    Ok(LevelSlopes {
        r,
        points,
        slopes,
        min_slope,
        argmin,
    })
}

/// `count` points on levels drawn log-uniformly from `[lo, hi]` at uniform
/// random curve parameters. Returns `(x, r)` pairs.
pub fn band_samples(field: &dyn ScalarField, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<(Point, f64)>> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidArgument(format!("bad band [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let r = (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp();
            (r, rng.gen::<f64>() * TAU)
        })
        .collect();
    Exec::default()
        .map_slice(&draws, |&(r, a)| level_point(field, r, a).map(|x| (x, r)))
        .into_iter()
        .collect()
}
