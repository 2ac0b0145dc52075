//! Subgradient curves `ẋ = −∂⁰f(x)`, their lengths, and piecewise curves.
//!
//! Smooth fields use an embedded Dormand–Prince 5(4) pair. A step is kept
//! only if the embedded error estimate is small and the local energy
//! identity `f(x_i) − f(x_{i+1}) = ∫ ‖ẋ‖²` holds (trapezoid rule) to a
//! relative `tol`. Nonsmooth fields take implicit proximal-Euler steps
//! `x_{i+1} = prox_h(x_i)` with step-doubling control.

use std::fmt::Write as _;

use nalgebra::Vector2;

use crate::algorithms::{prox, PROX_TOL};
use crate::error::{Error, Result};
use crate::format::sig17;
use crate::geometry::Point;
use crate::zoo::ScalarField;

/// Slopes below this count as stationary.
pub const STATIONARY_SLOPE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// Integrate over `[0, T]`.
    Time(f64),
    /// Integrate until `f − min f` reaches this level.
    Level(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    RungeKutta,
    ProxEuler,
}

#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub tol: f64,
    pub max_steps: usize,
    /// Time cap for level stops.
    pub max_time: f64,
    pub initial_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-6,
            max_steps: 200_000,
            max_time: 1e6,
            initial_step: 1e-3,
        }
    }
}

impl FlowOptions {
    pub fn with_tol(tol: f64) -> Self {
        FlowOptions {
            tol,
            ..FlowOptions::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Point>,
    /// `f(x_i)`.
    pub f: Vec<f64>,
    /// `f(x_i) − min f`.
    pub excess: Vec<f64>,
    /// `‖∂⁰f(x_i)‖`.
    pub speed: Vec<f64>,
    pub cumlen: Vec<f64>,
    pub integrator: Integrator,
}

impl Trajectory {
    fn start(field: &dyn ScalarField, x0: Point, integrator: Integrator) -> Self {
        let mut tr = Trajectory {
            t: Vec::new(),
            x: Vec::new(),
            f: Vec::new(),
            excess: Vec::new(),
            speed: Vec::new(),
            cumlen: Vec::new(),
            integrator,
        };
        tr.push(field, 0.0, x0);
        tr
    }

    fn push(&mut self, field: &dyn ScalarField, t: f64, x: Point) {
        let v = field.subgradient(&x).norm();
        // Prox-Euler nodes form a polygon whose speed can drop to zero inside
        // a step, so chords replace the trapezoid rule there.
        let len = match (self.t.last(), self.x.last(), self.speed.last(), self.cumlen.last()) {
            (Some(t0), Some(x0), Some(v0), Some(l0)) => match self.integrator {
                Integrator::RungeKutta => l0 + 0.5 * (t - t0) * (v0 + v),
                Integrator::ProxEuler => l0 + (x - x0).norm(),
            },
            _ => 0.0,
        };
        self.t.push(t);
        self.x.push(x);
        self.f.push(field.value(&x));
        self.excess.push(field.excess(&x));
        self.speed.push(v);
        self.cumlen.push(len);
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last_point(&self) -> Point {
        *self.x.last().unwrap()
    }

    /// `|(f_0 − f_K) − Σ ½(v_i² + v_{i+1}²)Δt|`.
    pub fn energy_residual(&self) -> f64 {
        let drop = self.excess[0] - self.excess[self.len() - 1];
        let dissipated: f64 = (1..self.len())
            .map(|i| 0.5 * (self.t[i] - self.t[i - 1]) * (self.speed[i - 1].powi(2) + self.speed[i].powi(2)))
            .sum();
        (drop - dissipated).abs()
    }

    /// `[inf f, sup f]` over the nodes, in excess coordinates.
    pub fn value_range(&self) -> (f64, f64) {
        let lo = self.excess.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// CSV with header `t,x1,x2,f,speed,cumlen`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,f,speed,cumlen\n");
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                sig17(self.t[i]),
                sig17(self.x[i].x),
                sig17(self.x[i].y),
                sig17(self.f[i]),
                sig17(self.speed[i]),
                sig17(self.cumlen[i])
            )
            .unwrap();
        }
        out
    }
}

/// Final `cumlen`: trapezoid rule on the speeds for Runge–Kutta paths,
/// chord sum for prox-Euler paths.
pub fn curve_length(traj: &Trajectory) -> f64 {
    traj.cumlen.last().copied().unwrap_or(0.0)
}

/// `Σ ‖x_{i+1} − x_i‖`.
pub fn chordal_length(traj: &Trajectory) -> f64 {
    traj.x.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

pub fn integrate_flow(field: &dyn ScalarField, x0: &Point, stop: Stop, tol: f64) -> Result<Trajectory> {
    integrate_flow_with(field, x0, stop, &FlowOptions::with_tol(tol))
}

pub fn integrate_flow_with(field: &dyn ScalarField, x0: &Point, stop: Stop, opts: &FlowOptions) -> Result<Trajectory> {
    if !(1e-12..=1e-3).contains(&opts.tol) {
        return Err(Error::InvalidArgument(format!(
            "tol {} outside [1e-12, 1e-3]",
            opts.tol
        )));
    }
    if !field.in_domain(x0) {
        return Err(Error::OutOfDomain(x0.x, x0.y));
    }
    match stop {
        Stop::Time(t) if !(t >= 0.0 && t.is_finite()) => {
            return Err(Error::InvalidArgument(format!("horizon {t} must be finite and ≥ 0")))
        }
        Stop::Level(r) if !(r > 0.0) => return Err(Error::InvalidArgument(format!("stop level {r} must be positive"))),
        _ => {}
    }
    if field.is_smooth() {
        runge_kutta(field, *x0, stop, opts)
    } else {
        prox_euler(field, *x0, stop, opts)
    }
}

fn horizon(stop: Stop, opts: &FlowOptions) -> f64 {
    match stop {
        Stop::Time(t) => t,
        Stop::Level(_) => opts.max_time,
    }
}

fn level_reached(stop: Stop, excess: f64) -> bool {
    matches!(stop, Stop::Level(r) if excess <= r)
}

/// Bisection on the step size `h ∈ (0, h_max]` of `step` until
/// `f − min f` hits the stop level.
fn bisect_level<F>(field: &dyn ScalarField, r: f64, h_max: f64, step: F) -> Result<(f64, Point)>
where
    F: Fn(f64) -> Result<Point>,
{
    let (mut lo, mut hi) = (0.0, h_max);
    let mut best = (h_max, step(h_max)?);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let x = step(mid)?;
        let e = field.excess(&x);
        if e <= r {
            hi = mid;
            best = (mid, x);
        } else {
            lo = mid;
        }
        if (e - r).abs() <= 1e-12 * r.max(f64::MIN_POSITIVE) || hi - lo <= 1e-16 * h_max {
            if e <= r || (e - r).abs() <= 1e-12 * r {
                best = (mid, x);
            }
            break;
        }
    }
    Ok(best)
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: fifth-order point and error estimate.
fn dp_step(field: &dyn ScalarField, x: &Point, k1: &Vector2<f64>, h: f64) -> (Point, f64) {
    let mut k = [Vector2::zeros(); 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut y = *x;
        for (j, kj) in k.iter().enumerate().take(s) {
            y += kj * (h * A[s][j]);
        }
        debug_assert!(C[s] >= 0.0);
        k[s] = -field.subgradient(&y);
    }
    let mut x5 = *x;
    let mut err = Vector2::zeros();
    for s in 0..7 {
        x5 += k[s] * (h * B5[s]);
        err += k[s] * (h * (B5[s] - B4[s]));
    }
    (x5, err.norm())
}

fn runge_kutta(field: &dyn ScalarField, x0: Point, stop: Stop, opts: &FlowOptions) -> Result<Trajectory> {
    let mut tr = Trajectory::start(field, x0, Integrator::RungeKutta);
    let t_end = horizon(stop, opts);
    if level_reached(stop, tr.excess[0]) {
        return Ok(tr);
    }
    let mut h = opts.initial_step;
    let mut steps = 0;
    loop {
        let i = tr.len() - 1;
        let (t, x, e, v) = (tr.t[i], tr.x[i], tr.excess[i], tr.speed[i]);
        if v < STATIONARY_SLOPE || t >= t_end {
            return Ok(tr);
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Stalled { t });
        }
        h = h.min(t_end - t);
        let k1 = -field.subgradient(&x);
        let (xn, err) = dp_step(field, &x, &k1, h);
        if !field.in_domain(&xn) {
            return Err(Error::OutOfDomain(xn.x, xn.y));
        }
        let en = field.excess(&xn);
        let vn = field.subgradient(&xn).norm();
        let drop = e - en;
        let residual = (drop - 0.5 * h * (v * v + vn * vn)).abs();
        let rk_tol = 1e-4 * opts.tol * (1.0 + x.norm());
        let energy_tol = opts.tol * drop.max(0.0);
        let rk_ok = err <= rk_tol;
        let energy_ok = drop >= 0.0 && residual <= energy_tol;
        if rk_ok && energy_ok {
            if let Stop::Level(r) = stop {
                if en <= r {
                    let (hs, xs) = bisect_level(field, r, h, |hh| Ok(dp_step(field, &x, &k1, hh).0))?;
                    tr.push(field, t + hs, xs);
                    return Ok(tr);
                }
            }
            tr.push(field, t + h, xn);
        }
        let fac_rk = if err > 0.0 { 0.9 * (rk_tol / err).powf(0.2) } else { 4.0 };
        let fac_en = if residual > 0.0 && drop > 0.0 {
            0.9 * (energy_tol / residual).sqrt()
        } else if drop < 0.0 {
            0.25
        } else {
            4.0
        };
        h *= fac_rk.min(fac_en).clamp(0.1, 4.0);
        if h < 1e-14 * (1.0 + t) {
            return Err(Error::Stalled { t });
        }
    }
}

fn prox_euler(field: &dyn ScalarField, x0: Point, stop: Stop, opts: &FlowOptions) -> Result<Trajectory> {
    let mut tr = Trajectory::start(field, x0, Integrator::ProxEuler);
    let t_end = horizon(stop, opts);
    if level_reached(stop, tr.excess[0]) {
        return Ok(tr);
    }
    let mut h = opts.initial_step;
    let mut steps = 0;
    loop {
        let i = tr.len() - 1;
        let (t, x, v) = (tr.t[i], tr.x[i], tr.speed[i]);
        if v < STATIONARY_SLOPE || t >= t_end {
            return Ok(tr);
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Stalled { t });
        }
        h = h.min(t_end - t);
        let full = prox(field, h, &x, PROX_TOL)?;
        let half = prox(field, 0.5 * h, &x, PROX_TOL)?;
        let two = prox(field, 0.5 * h, &half, PROX_TOL)?;
        // prox_h(x) = x only at minimizers; anything else is an inner-solver stall
        if half == x || two == half {
            return Err(Error::Stalled { t });
        }
        let err = (full - two).norm();
        let pos_tol = opts.tol * (1.0 + x.norm());
        if err <= pos_tol {
            if let Stop::Level(r) = stop {
                if field.excess(&half) <= r {
                    let (hs, xs) = bisect_level(field, r, 0.5 * h, |hh| prox(field, hh, &x, PROX_TOL))?;
                    tr.push(field, t + hs, xs);
                    return Ok(tr);
                }
                if field.excess(&two) <= r {
                    tr.push(field, t + 0.5 * h, half);
                    let (hs, xs) = bisect_level(field, r, 0.5 * h, |hh| prox(field, hh, &half, PROX_TOL))?;
                    tr.push(field, t + 0.5 * h + hs, xs);
                    return Ok(tr);
                }
            }
            tr.push(field, t + 0.5 * h, half);
            tr.push(field, t + h, two);
        }
        // first-order scheme: local error ∝ h²
        let fac = if err > 0.0 { 0.9 * (pos_tol / err).sqrt() } else { 4.0 };
        h *= fac.clamp(0.1, 4.0);
        if h < 1e-14 * (1.0 + t) {
            return Err(Error::Stalled { t });
        }
    }
}

/// Segments whose value ranges overlap in at most one point.
#[derive(Clone, Debug)]
pub struct PiecewiseTrajectory {
    pub segments: Vec<Trajectory>,
    /// `[inf f, sup f]` per segment, in excess coordinates.
    pub ranges: Vec<(f64, f64)>,
}

impl PiecewiseTrajectory {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(curve_length).sum()
    }
}

pub fn compose_piecewise(segments: Vec<Trajectory>) -> Result<PiecewiseTrajectory> {
    let ranges: Vec<(f64, f64)> = segments.iter().map(Trajectory::value_range).collect();
    for i in 0..ranges.len() {
        for j in i + 1..ranges.len() {
            let (a, b) = (ranges[i], ranges[j]);
            let overlap = a.1.min(b.1) - a.0.max(b.0);
            let slack = 1e-12 * a.1.abs().max(b.1.abs());
            if overlap > slack {
                return Err(Error::Overlap { first: i, second: j });
            }
        }
    }
    Ok(PiecewiseTrajectory { segments, ranges })
}
