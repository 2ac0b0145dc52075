//! Proximal-point and explicit gradient schemes with a posteriori length
//! certificates.
//!
//! All value comparisons use `f − min f` (see [`ScalarField::excess`]) so
//! fields whose values crowd their minimum keep full relative precision.

use std::fmt::Write as _;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::format::sig17;
use crate::geometry::Point;
use crate::report::{CheckReport, Verdict, WorstCase};
use crate::zoo::ScalarField;

/// Inner iteration cap of [`prox`].
pub const PROX_MAX_ITER: usize = 500;

/// Default stationarity tolerance of the prox subproblem.
pub const PROX_TOL: f64 = 1e-10;

/// `argmin_y f(y) + ‖y − x‖² / (2λ)`.
///
/// Gradient descent on the subproblem with Barzilai–Borwein trial steps and
/// Armijo backtracking. It stops when the subproblem gradient is below `tol`
/// or certifies `‖y − y*‖ ≤ tol·(1 + ‖y‖)` through strong convexity. Near a
/// kink of `f` the gradient need not vanish; the iteration then stops once
/// no descent step exists or the iterates stop moving.
pub fn prox(field: &dyn ScalarField, lambda: f64, x: &Point, tol: f64) -> Result<Point> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("prox step {lambda} must be positive")));
    }
    let alpha = field.semiconvexity();
    if alpha > 0.0 && lambda * alpha >= 1.0 {
        return Err(Error::StepTooLarge {
            lambda,
            limit: 1.0 / alpha,
        });
    }
    if !field.in_domain(x) {
        return Err(Error::OutOfDomain(x.x, x.y));
    }
    let objective = |y: &Point| field.excess(y) + (y - x).norm_squared() / (2.0 * lambda);
    let gradient = |y: &Point| field.subgradient(y) + (y - x) / lambda;

    let mut y = *x;
    let mut phi = objective(&y);
    let mut g = gradient(&y);
    let mut step = match field.gradient_lipschitz() {
        Some(l) => lambda / (1.0 + lambda * l),
        None => lambda,
    };
    // the subproblem is (1/λ)-strongly convex, so ‖y − y*‖ ≤ λ‖∇‖
    let converged = |y: &Point, gn: f64| gn <= tol || lambda * gn <= tol * (1.0 + y.norm());
    for _ in 0..PROX_MAX_ITER {
        let gn = g.norm();
        if converged(&y, gn) {
            return Ok(y);
        }
        let mut s = step;
        let accepted = loop {
            let trial = y - g * s;
            let phi_t = objective(&trial);
            let g_t = gradient(&trial);
            let sufficient = phi_t <= phi - 1e-4 * s * gn * gn;
            // below round-off in the objective, fall back on the gradient norm
            let roundoff = phi_t <= phi + 4.0 * f64::EPSILON * phi.abs() && g_t.norm() < gn;
            if sufficient || roundoff {
                break Some((trial, phi_t, g_t, s));
            }
            s *= 0.5;
            if s < 1e-20 * lambda.max(1.0) {
                break None;
            }
        };
        let Some((y_new, phi_new, g_new, s_used)) = accepted else {
            return Ok(y);
        };
        let dy = y_new - y;
        // iterates pinned against a kink of f stop moving before ∇ vanishes
        if dy.norm() <= 1e-14 * (1.0 + y.norm()) {
            return Ok(y_new);
        }
        let dg = g_new - g;
        let curv = dy.dot(&dg);
        step = if curv > 0.0 {
            dy.norm_squared() / curv
        } else {
            2.0 * s_used
        };
        y = y_new;
        phi = phi_new;
        g = g_new;
    }
    if converged(&y, g.norm()) {
        Ok(y)
    } else {
        Err(Error::NoConvergence {
            iterations: PROX_MAX_ITER,
        })
    }
}

/// Iterates of a proximal or gradient scheme.
#[derive(Clone, Debug, Default)]
pub struct IterateRun {
    pub points: Vec<Point>,
    /// `f(Y_k)`.
    pub values: Vec<f64>,
    /// `f(Y_k) − min f`.
    pub excess: Vec<f64>,
    /// Step parameter that produced `Y_k` (NaN at `k = 0`).
    pub steps: Vec<f64>,
    /// `‖Y_k − Y_{k−1}‖` (0 at `k = 0`).
    pub disp: Vec<f64>,
    pub cumlen: Vec<f64>,
    /// Smallest certificate margin involving `Y_k`.
    pub cert_margin: Vec<f64>,
}

impl IterateRun {
    fn start(field: &dyn ScalarField, x0: &Point) -> Self {
        let mut run = IterateRun::default();
        run.push(field, *x0, f64::NAN);
        run
    }

    fn push(&mut self, field: &dyn ScalarField, y: Point, step: f64) {
        let d = self.points.last().map_or(0.0, |p| (y - p).norm());
        let total = self.cumlen.last().copied().unwrap_or(0.0) + d;
        self.points.push(y);
        self.values.push(field.value(&y));
        self.excess.push(field.excess(&y));
        self.steps.push(step);
        self.disp.push(d);
        self.cumlen.push(total);
        self.cert_margin.push(f64::INFINITY);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cumlen.last().copied().unwrap_or(0.0)
    }

    /// CSV with header `k,y1,y2,f,step,disp,cumlen,cert_margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,y1,y2,f,step,disp,cumlen,cert_margin\n");
        for k in 0..self.len() {
            let p = self.points[k];
            writeln!(
                out,
                "{k},{},{},{},{},{},{},{}",
                sig17(p.x),
                sig17(p.y),
                sig17(self.values[k]),
                sig17(self.steps[k]),
                sig17(self.disp[k]),
                sig17(self.cumlen[k]),
                sig17(self.cert_margin[k])
            )
            .unwrap();
        }
        out
    }
}

/// Estimate of `lim f(Y_k) − min f`: the last value minus a geometric
/// extrapolation of the last (up to ten) value gaps.
pub fn extrapolated_limit(excess: &[f64]) -> f64 {
    let last = *excess.last().expect("nonempty run");
    let gaps: Vec<f64> = excess.windows(2).map(|w| w[0] - w[1]).collect();
    let tail: Vec<f64> = gaps.iter().rev().take(10).rev().copied().collect();
    let Some(&g_last) = tail.last() else {
        return last;
    };
    if g_last <= 0.0 {
        return last;
    }
    let ratios: Vec<f64> = tail.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    if ratios.is_empty() {
        return last;
    }
    let q = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if !(0.0..1.0).contains(&q) {
        return last;
    }
    last - g_last * q / (1.0 - q)
}

/// Geometric extrapolation of the iterates' limit point.
pub fn extrapolated_point(points: &[Point]) -> Point {
    let n = points.len();
    let last = points[n - 1];
    if n < 3 {
        return last;
    }
    let d1 = points[n - 1] - points[n - 2];
    let d0 = points[n - 2] - points[n - 3];
    if d0.norm() == 0.0 || d1.norm() == 0.0 {
        return last;
    }
    let q = d1.norm() / d0.norm();
    if q >= 1.0 {
        return last;
    }
    last + d1 * (q / (1.0 - q))
}

/// Step-size schedule of a proximal run.
pub enum Schedule<'a> {
    Constant(f64),
    List(&'a [f64]),
}

impl Schedule<'_> {
    fn at(&self, k: usize) -> f64 {
        match self {
            Schedule::Constant(l) => *l,
            Schedule::List(ls) => ls[k.min(ls.len() - 1)],
        }
    }
}

/// `Y^{k+1} = prox_{λ_k} Y^k` for `steps` steps, with the per-step
/// certificate `‖Y^{k+1} − Y^k‖ ≤ φ(f(Y^k) − L) − φ(f(Y^{k+1}) − L)` and the
/// terminal certificate `‖Y^∞ − Y^k‖ ≤ φ(f(Y^k) − L)`.
///
/// A violated certificate makes the report FAIL with the offending index
/// as `r`; see [`CheckReport::into_cert_result`].
pub fn proximal_run(
    field: &dyn ScalarField,
    x0: &Point,
    schedule: Schedule<'_>,
    phi: &dyn Fn(f64) -> f64,
    steps: usize,
    tol: f64,
) -> Result<(IterateRun, CheckReport)> {
    let mut run = IterateRun::start(field, x0);
    for k in 0..steps {
        let lambda = schedule.at(k);
        let y = prox(field, lambda, &run.points[k], PROX_TOL)?;
        run.push(field, y, lambda);
    }
    let limit_value = extrapolated_limit(&run.excess);
    let limit_point = extrapolated_point(&run.points);
    let level = |k: usize| phi((run.excess[k] - limit_value).max(0.0));
    let mut worst = WorstCase::new();
    for k in 0..run.len() {
        let terminal = level(k) - (limit_point - run.points[k]).norm();
        let mut margin = terminal;
        if k + 1 < run.len() {
            let step = level(k) - level(k + 1) - run.disp[k + 1];
            margin = margin.min(step);
        }
        run.cert_margin[k] = margin;
        let p = run.points[k];
        worst.offer(&[p.x, p.y], k as f64, margin);
    }
    let report = worst.report("proximal_certificate", tol);
    Ok((run, report))
}

impl CheckReport {
    /// `Err(CERT_FAIL)` for a failed certificate report.
    pub fn into_cert_result(self) -> Result<CheckReport> {
        match self.verdict {
            Verdict::Fail => Err(Error::CertFail {
                index: self.witness.r as usize,
                margin: self.witness.margin,
            }),
            _ => Ok(self),
        }
    }

    /// `Err(DESCENT_VIOLATION)` for a failed descent report.
    pub fn into_descent_result(self) -> Result<CheckReport> {
        match self.verdict {
            Verdict::Fail => Err(Error::DescentViolation {
                index: self.witness.r as usize,
                margin: self.witness.margin,
            }),
            _ => Ok(self),
        }
    }
}

/// Step-size rule of an explicit gradient run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Start from `1/L` (or 1) and halve until
    /// `f(x⁺) ≤ f(x) − (t/2)‖∇f(x)‖²`.
    Backtracking,
}

/// Outcome of [`gradient_run`]: the descent condition per step and the
/// cumulative length bound.
#[derive(Clone, Debug)]
pub struct GradientReports {
    pub descent: CheckReport,
    pub length: CheckReport,
}

/// `Y^{k+1} = Y^k − t_k ∇f(Y^k)`, checking
/// `β‖∇f(Y^k)‖‖Y^{k+1} − Y^k‖ ≤ f(Y^k) − f(Y^{k+1})` per step and
/// `Σ‖Y^{k+1} − Y^k‖ ≤ (φ(f(Y^0)) − φ(f(Y^K)))/β`.
pub fn gradient_run(
    field: &dyn ScalarField,
    x0: &Point,
    rule: StepRule,
    beta: f64,
    phi: &dyn Fn(f64) -> f64,
    steps: usize,
    tol: f64,
) -> Result<(IterateRun, GradientReports)> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!("beta {beta} outside (0, 1]")));
    }
    let lip = field.gradient_lipschitz();
    if let (StepRule::Fixed(t), Some(l)) = (rule, lip) {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("step {t} must be positive")));
        }
        if beta > 1.0 - l * t / 2.0 + 1e-15 {
            return Err(Error::InvalidArgument(format!(
                "beta {beta} exceeds 1 − Lt/2 = {}",
                1.0 - l * t / 2.0
            )));
        }
    }
    let mut run = IterateRun::start(field, x0);
    let mut descent = WorstCase::new();
    for k in 0..steps {
        let y = run.points[k];
        if !field.in_domain(&y) {
            return Err(Error::OutOfDomain(y.x, y.y));
        }
        let g: Vector2<f64> = field.subgradient(&y);
        let gn = g.norm();
        let f0 = run.excess[k];
        if gn == 0.0 || f0 == 0.0 {
            run.push(field, y, 0.0);
            continue;
        }
        let t = match rule {
            StepRule::Fixed(t) => t,
            StepRule::Backtracking => {
                let mut t = lip.map_or(1.0, |l| 1.0 / l);
                while field.excess(&(y - g * t)) > f0 - 0.5 * t * gn * gn {
                    t *= 0.5;
                    if t < 1e-300 {
                        return Err(Error::Stalled { t: k as f64 });
                    }
                }
                t
            }
        };
        let next = y - g * t;
        run.push(field, next, t);
        let drop = f0 - run.excess[k + 1];
        let margin = drop - beta * gn * run.disp[k + 1];
        // relative to the current value so tiny late steps weigh equally
        descent.offer(&[y.x, y.y], k as f64, margin / f0);
    }
    let bound = (phi(run.excess[0]) - phi(*run.excess.last().unwrap())) / beta;
    let len_margin = bound - run.length();
    for k in 0..run.len() {
        run.cert_margin[k] = len_margin;
    }
    let last = *run.points.last().unwrap();
    let mut length = WorstCase::new();
    length.offer(&[last.x, last.y], steps as f64, len_margin);
    Ok((
        run,
        GradientReports {
            descent: descent.report("expgrad", 1e-12),
            length: length.report("gradient_length", tol),
        },
    ))
}

/// Checks at every sample `(x, t)`, with `x⁺ = x − t∇f(x)`:
/// the descent lemma `f(x⁺) ≤ f(x) + ⟨∇f(x), x⁺ − x⟩ + (L/2)‖x⁺ − x‖²`,
/// `(1 − Lt/2)‖x⁺ − x‖‖∇f(x)‖ ≤ f(x) − f(x⁺)` and
/// `‖∇f(x⁺)‖ ≤ (Lt + 1)‖∇f(x)‖`.
pub fn step_estimates_check(field: &dyn ScalarField, samples: &[(Point, f64)], tol: f64) -> Result<CheckReport> {
    let l = field
        .gradient_lipschitz()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no Lipschitz gradient", field.name())))?;
    let mut worst = WorstCase::new();
    for (x, t) in samples {
        let g = field.subgradient(x);
        let xp = x - g * *t;
        let fx = field.excess(x);
        let fp = field.excess(&xp);
        let d = xp - x;
        let lemma = fx + g.dot(&d) + 0.5 * l * d.norm_squared() - fp;
        let first = (fx - fp) - (1.0 - l * t / 2.0) * d.norm() * g.norm();
        let second = (l * t + 1.0) * g.norm() - field.subgradient(&xp).norm();
        worst.offer(&[x.x, x.y], *t, lemma.min(first).min(second));
    }
    Ok(worst.report("step_estimates", tol))
}
