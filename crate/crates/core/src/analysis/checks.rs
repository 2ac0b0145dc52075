//! Finite-sample verdicts for the KŁ inequality and its equivalent forms.

use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::flows::{compose_piecewise, curve_length, integrate_flow, Stop, Trajectory};
use crate::geometry::{dist_to_body, hausdorff_dist_with, Point};
use crate::report::{CheckReport, WorstCase};
use crate::zoo::ScalarField;

use super::level::{level_point, sublevel_body, trace_level};
use super::profile::LevelProfile;

/// A desingularization function `φ` with its derivative.
pub trait Desingularization: Send + Sync {
    fn phi(&self, r: f64) -> f64;
    fn dphi(&self, r: f64) -> f64;
}

/// The field's closed-form `φ`, with `φ′ = u`.
pub struct OraclePhi(pub Arc<dyn ScalarField>);

impl OraclePhi {
    pub fn new(field: Arc<dyn ScalarField>) -> Result<Self> {
        if field.phi_oracle(0.5).is_none() || field.slope_oracle(0.5).is_none() {
            return Err(Error::InvalidArgument(format!("{} has no closed-form φ", field.name())));
        }
        Ok(OraclePhi(field))
    }
}

impl Desingularization for OraclePhi {
    fn phi(&self, r: f64) -> f64 {
        self.0.phi_oracle(r).unwrap()
    }
    fn dphi(&self, r: f64) -> f64 {
        self.0.slope_oracle(r).unwrap()
    }
}

/// `φ(r) = r^θ`.
#[derive(Clone, Copy, Debug)]
pub struct PowerPhi(pub f64);

impl Desingularization for PowerPhi {
    fn phi(&self, r: f64) -> f64 {
        r.powf(self.0)
    }
    fn dphi(&self, r: f64) -> f64 {
        self.0 * r.powf(self.0 - 1.0)
    }
}

impl Desingularization for LevelProfile {
    fn phi(&self, r: f64) -> f64 {
        self.phi_at(r)
    }
    fn dphi(&self, r: f64) -> f64 {
        self.dphi_at(r)
    }
}

/// `φ ∘ (f − min f)`.
pub struct Composed {
    pub inner: Arc<dyn ScalarField>,
    pub phi: Arc<dyn Desingularization>,
}

impl ScalarField for Composed {
    fn name(&self) -> String {
        format!("phi∘{}", self.inner.name())
    }

    fn value(&self, x: &Point) -> f64 {
        self.excess(x)
    }

    fn excess(&self, x: &Point) -> f64 {
        let e = self.inner.excess(x);
        if e <= 0.0 {
            0.0
        } else {
            self.phi.phi(e)
        }
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        let e = self.inner.excess(x);
        if e <= 0.0 {
            return Vector2::zeros();
        }
        self.inner.subgradient(x) * self.phi.dphi(e)
    }

    fn in_domain(&self, x: &Point) -> bool {
        self.inner.in_domain(x)
    }

    fn argmin_radius(&self) -> f64 {
        self.inner.argmin_radius()
    }

    fn semiconvexity(&self) -> f64 {
        f64::INFINITY
    }

    fn is_smooth(&self) -> bool {
        false
    }
}

/// `φ′(f(x) − min f)·‖∂⁰f(x)‖ − 1`.
pub fn kl_margin(field: &dyn ScalarField, phi: &dyn Desingularization, x: &Point) -> f64 {
    let e = field.excess(x);
    phi.dphi(e) * field.subgradient(x).norm() - 1.0
}

/// PASS iff `φ′(f)·‖∂⁰f‖ ≥ 1 − tol` at every sample.
pub fn check_kl(field: &dyn ScalarField, phi: &dyn Desingularization, samples: &[Point], tol: f64) -> CheckReport {
    let margins = Exec::default().map_slice(samples, |x| kl_margin(field, phi, x));
    let mut worst = WorstCase::new();
    for (x, m) in samples.iter().zip(margins) {
        worst.offer(&[x.x, x.y], field.excess(x), m);
    }
    worst.report("kl", tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipschitzMode {
    Sublevel,
    /// Requires a smooth field.
    Level,
}

/// Hausdorff distance between two closed polygons given by their vertices.
fn polygon_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    fn seg_dist(p: &Point, s0: &Point, s1: &Point) -> f64 {
        let d = s1 - s0;
        let t = ((p - s0).dot(&d) / d.norm_squared().max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
        (p - (s0 + d * t)).norm()
    }
    let one_sided = |p: &[Point], q: &[Point]| {
        Exec::default()
            .map_slice(p, |x| {
                (0..q.len())
                    .map(|j| seg_dist(x, &q[j], &q[(j + 1) % q.len()]))
                    .fold(f64::INFINITY, f64::min)
            })
            .into_iter()
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// PASS iff `Dist(S(r₁), S(r₂)) ≤ k·|φ(r₁) − φ(r₂)| + tol` for every pair,
/// where `S` is the sublevel or the level mapping. Witness `x = [r₁, r₂]`.
pub fn check_sublevel_lipschitz(
    field: &dyn ScalarField,
    phi: &dyn Desingularization,
    pairs: &[(f64, f64)],
    mode: LipschitzMode,
    k: f64,
    tol: f64,
    n: usize,
) -> Result<CheckReport> {
    if mode == LipschitzMode::Level && !field.is_smooth() {
        return Err(Error::InvalidArgument(format!(
            "level mode needs a smooth field; {} is not",
            field.name()
        )));
    }
    let mut worst = WorstCase::new();
    for &(r1, r2) in pairs {
        let dist = if r1 == r2 {
            0.0
        } else {
            match mode {
                LipschitzMode::Sublevel => {
                    let (a, b) = (sublevel_body(field, r1, n)?, sublevel_body(field, r2, n)?);
                    hausdorff_dist_with(&a, &b, n, Exec::default())
                }
                LipschitzMode::Level => polygon_hausdorff(&trace_level(field, r1, n)?, &trace_level(field, r2, n)?),
            }
        };
        let margin = k * (phi.phi(r1) - phi.phi(r2)).abs() - dist;
        worst.offer(&[r1, r2], r1, margin);
    }
    let name = match mode {
        LipschitzMode::Sublevel => "sublevel_lipschitz",
        LipschitzMode::Level => "level_lipschitz",
    };
    Ok(worst.report(name, tol))
}

/// PASS iff `dist(x, [f − min f ≤ r]) ≤ k·(f(x) − min f − r)⁺ + tol`.
pub fn check_error_bound(
    field: &dyn ScalarField,
    k: f64,
    r: f64,
    samples: &[Point],
    tol: f64,
    n: usize,
) -> Result<CheckReport> {
    let body = sublevel_body(field, r, n)?;
    let margins = Exec::default().map_slice(samples, |x| {
        let excess = (field.excess(x) - r).max(0.0);
        k * excess - dist_to_body(x, &body, n)
    });
    let mut worst = WorstCase::new();
    for (x, m) in samples.iter().zip(margins) {
        worst.offer(&[x.x, x.y], r, m);
    }
    Ok(worst.report("error_bound", tol))
}

/// PASS iff every trajectory satisfies
/// `length ≤ φ(f(x₀) − min f) − φ(f(x_T) − min f) + tol`.
pub fn check_curve_lengths(phi: &dyn Desingularization, trajectories: &[Trajectory], tol: f64) -> CheckReport {
    let mut worst = WorstCase::new();
    for (i, tr) in trajectories.iter().enumerate() {
        let (e0, e1) = (tr.excess[0], *tr.excess.last().unwrap());
        let margin = phi.phi(e0) - phi.phi(e1) - curve_length(tr);
        let x = tr.x[0];
        worst.offer(&[x.x, x.y], i as f64, margin);
    }
    worst.report("curve_length", tol)
}

/// Restarted flows: each schedule starts on level `levels[0]` and, at every
/// later level, jumps to the point of that level at the next curve parameter.
/// The piecewise curve must satisfy `length ≤ φ(levels[0]) − φ(levels.last())`.
///
/// A pass over a finite family proves nothing about all piecewise curves, so
/// it is reported INCONCLUSIVE; a failure is conclusive.
pub fn check_restart_family(
    field: &dyn ScalarField,
    phi: &dyn Desingularization,
    levels: &[f64],
    schedules: &[Vec<f64>],
    flow_tol: f64,
    tol: f64,
) -> Result<CheckReport> {
    if levels.len() < 2 || levels.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("restart levels must decrease".into()));
    }
    let mut worst = WorstCase::new();
    for (si, angles) in schedules.iter().enumerate() {
        if angles.len() + 1 != levels.len() {
            return Err(Error::InvalidArgument("one parameter per restart segment".into()));
        }
        let mut segments = Vec::with_capacity(angles.len());
        for (i, &a) in angles.iter().enumerate() {
            let x0 = level_point(field, levels[i], a)?;
            segments.push(integrate_flow(field, &x0, Stop::Level(levels[i + 1]), flow_tol)?);
        }
        let pw = compose_piecewise(segments)?;
        let bound = phi.phi(levels[0]) - phi.phi(*levels.last().unwrap());
        worst.offer(&[], si as f64, bound - pw.length());
    }
    let mut report = worst.report("restart_family", tol);
    if report.passed() {
        report.verdict = crate::report::Verdict::Inconclusive;
    }
    Ok(report)
}

/// Length bound for convex fields whose minimizers contain the disk of
/// radius `rho` about `center`:
/// `length ≤ (‖x₀ − a‖² − ‖x_T − a‖²) / (2ρ) + tol`.
pub fn check_brezis(trajectories: &[Trajectory], center: &Point, rho: f64, tol: f64) -> CheckReport {
    let mut worst = WorstCase::new();
    for (i, tr) in trajectories.iter().enumerate() {
        let (x0, xt) = (tr.x[0], tr.last_point());
        let bound = ((x0 - center).norm_squared() - (xt - center).norm_squared()) / (2.0 * rho);
        worst.offer(&[x0.x, x0.y], i as f64, bound - curve_length(tr));
    }
    worst.report("brezis", tol)
}
