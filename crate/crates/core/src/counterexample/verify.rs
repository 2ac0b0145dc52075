//! Checks that a built (or reloaded) field really has the prescribed
//! sublevel sets and is convex.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::radial_level_point;
use crate::error::Result;
use crate::exec::Exec;
use crate::geometry::{hausdorff_dist_with, ConvexBody, Point};
use crate::report::{CheckReport, Verdict, Witness, WorstCase};

use super::field::CexField;
use super::levels::PrescribedLevels;

/// Hausdorff tolerance between a reconstructed sublevel set and its body.
pub const RECONSTRUCTION_TOL: f64 = 2e-3;

/// `[f ≤ λ_k]` rebuilt from the field alone: `n` points of the level curve
/// found by radial bisection on values, each with the supporting line
/// normal to the subgradient there. The body is the hull of the points and
/// of the intersections of consecutive supporting lines, which recovers
/// corners that fall between rays.
pub fn reconstruct_body(field: &CexField, k: usize, n: usize) -> Result<ConvexBody> {
    let e = field.levels().excess(k);
    let samples = Exec::default()
        .map(n, |i| {
            let p = radial_level_point(field, e, TAU * i as f64 / n as f64)?;
            let g = field.grad_cex(&p)?;
            Ok((p, g / g.norm()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut points: Vec<Point> = samples.iter().map(|(p, _)| *p).collect();
    for i in 0..n {
        let (p, a) = samples[i];
        let (q, b) = samples[(i + 1) % n];
        let det = a.x * b.y - a.y * b.x;
        // parallel lines belong to one edge and add nothing
        if det.abs() < 1e-9 {
            continue;
        }
        let (ca, cb) = (a.dot(&p), b.dot(&q));
        let corner = Point::new((ca * b.y - cb * a.y) / det, (a.x * cb - b.x * ca) / det);
        if (corner - p).norm() <= 2.0 * (q - p).norm() {
            points.push(corner);
        }
    }
    Ok(ConvexBody::hull(&points))
}

/// PASS iff every reconstructed `[f ≤ λ_k]`, `k ∈ ks`, lies within
/// [`RECONSTRUCTION_TOL`] of `T_k`. Witness `x = [dist]`, `r = k`.
pub fn check_reconstruction(field: &CexField, ks: &[usize], n: usize) -> Result<CheckReport> {
    let rebuilt = ks
        .iter()
        .map(|&k| reconstruct_body(field, k, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(reconstruction_report(field, ks, &rebuilt, n))
}

/// [`check_reconstruction`] on bodies already rebuilt for the indices `ks`.
pub fn reconstruction_report(field: &CexField, ks: &[usize], rebuilt: &[ConvexBody], n: usize) -> CheckReport {
    let mut worst = WorstCase::new();
    for (&k, body) in ks.iter().zip(rebuilt) {
        let d = hausdorff_dist_with(body, field.bodies().body(k), n, Exec::default());
        worst.offer(&[d], k as f64, -d);
    }
    worst.report("reconstruction", RECONSTRUCTION_TOL)
}

/// `f((x+y)/2) ≤ (f(x) + f(y))/2 + tol` on `count` random pairs of the unit
/// disk. Witness `x = [x1, x2, y1, y2]`.
pub fn check_midpoint_convexity(field: &CexField, count: usize, seed: u64, tol: f64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let (r, a) = (rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU);
        Point::new(r * a.cos(), r * a.sin())
    };
    let pairs: Vec<(Point, Point)> = (0..count).map(|_| (draw(), draw())).collect();
    let margins = Exec::default().map_slice(&pairs, |(x, y)| {
        0.5 * (field.eval_cex(x) + field.eval_cex(y)) - field.eval_cex(&((x + y) * 0.5))
    });
    let mut worst = WorstCase::new();
    for (i, ((x, y), m)) in pairs.iter().zip(margins).enumerate() {
        worst.offer(&[x.x, x.y, y.x, y.y], i as f64, m);
    }
    worst.report("midpoint_convexity", tol)
}

/// PASS iff `λ_k` strictly decreases and `Σ (λ_k − λ_{k+1})` matches
/// `λ_0 − λ_∞` to relative `1e-12`. Witness `x = [gap sum, λ_0 − λ_∞]`;
/// on a failed ordering `r` is the offending index and the margin is
/// `ln(λ_k − λ_∞) − ln(λ_{k+1} − λ_∞)`.
pub fn check_level_gaps(levels: &PrescribedLevels) -> CheckReport {
    let last = levels.last_index();
    // the last stored gap closes onto λ_∞
    let sum: f64 = (0..=last).rev().map(|k| levels.gap(k)).sum();
    let total = levels.lambda0() - levels.lambda_inf();
    let violation = (0..last).find(|&k| levels.ln_excess(k + 1) >= levels.ln_excess(k));
    let (r, margin) = match violation {
        Some(k) => (k as f64, levels.ln_excess(k) - levels.ln_excess(k + 1)),
        None => (last as f64, 1e-12 * total - (sum - total).abs()),
    };
    let verdict = if violation.is_none() && margin >= 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    CheckReport {
        name: "level_gaps".into(),
        verdict,
        witness: Witness {
            x: vec![sum, total],
            r,
            margin,
        },
        tol: 0.0,
    }
}
