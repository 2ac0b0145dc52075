//! Slope profiles `u(r) = 1/s(r)` and desingularization functions
//! `φ(r) = ∫₀^r ū`.
//!
//! Between grid levels `ū` is interpolated in log–log coordinates: with
//! `s = ln r` and `h(s) = r·ū(r)`, `ln h` is a monotone cubic (PCHIP) in `s`
//! and `φ` integrates `h` over `s`. Pure power laws make `ln h` affine, so
//! their `φ` is exact up to rounding. Below the smallest level a fitted
//! analytic tail supplies the missing mass.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::format::sig17;
use crate::geometry::Point;
use crate::zoo::ScalarField;

use super::level::level_slopes;

/// Levels used by the tail fit.
pub const TAIL_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailModel {
    /// `ū ≈ a·r^b`.
    Power,
    /// `ū ≈ a / (r·(−ln r)^β)`.
    LogPower,
    /// Whichever of the two fits with the smaller residual.
    Auto,
    /// No tail: `φ` is measured from the smallest level.
    None,
}

impl std::str::FromStr for TailModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" | "power-fit" => Ok(TailModel::Power),
            "log-power" | "log-power-fit" => Ok(TailModel::LogPower),
            "auto" => Ok(TailModel::Auto),
            "none" => Ok(TailModel::None),
            _ => Err(Error::Parse(format!("unknown tail model {s:?}"))),
        }
    }
}

/// Fitted tail below the smallest level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    /// `Power`, `LogPower` or `None`.
    pub model: TailModel,
    pub coefficient: f64,
    /// `b` for the power model, `β` for the log-power model.
    pub exponent: f64,
    /// RMS residual of the fit in log coordinates.
    pub residual: f64,
    pub integrable: bool,
}

impl TailFit {
    /// Antiderivative of the tail model.
    fn antiderivative(&self, r: f64) -> f64 {
        let (a, e) = (self.coefficient, self.exponent);
        match self.model {
            TailModel::Power if (e + 1.0).abs() > 1e-12 => a * r.powf(e + 1.0) / (e + 1.0),
            TailModel::Power => a * r.ln(),
            TailModel::LogPower if (e - 1.0).abs() > 1e-12 => a * (-r.ln()).powf(1.0 - e) / (e - 1.0),
            TailModel::LogPower => -a * (-r.ln()).ln(),
            _ => 0.0,
        }
    }

    /// `ū(r)` from the model.
    fn density(&self, r: f64) -> f64 {
        let (a, e) = (self.coefficient, self.exponent);
        match self.model {
            TailModel::Power => a * r.powf(e),
            TailModel::LogPower => a / (r * (-r.ln()).powf(e)),
            _ => 0.0,
        }
    }

    /// `∫₀^r ū` when the tail is integrable.
    fn mass(&self, r: f64) -> f64 {
        match self.model {
            TailModel::Power | TailModel::LogPower if self.integrable => self.antiderivative(r),
            _ => 0.0,
        }
    }
}

/// Least squares `y ≈ c + m·x`; returns `(c, m, rms residual)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let m = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - m * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c - m * x).powi(2)).sum();
    (c, m, (rss / n).sqrt())
}

fn fit_tail(r: &[f64], ubar: &[f64], model: TailModel) -> TailFit {
    let m = r.len().min(TAIL_POINTS);
    let rs = &r[r.len() - m..];
    let us = &ubar[ubar.len() - m..];
    let none = TailFit {
        model: TailModel::None,
        coefficient: 0.0,
        exponent: 0.0,
        residual: 0.0,
        integrable: true,
    };
    if m < 2 {
        return none;
    }
    let power = || {
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = us.iter().map(|u| u.ln()).collect();
        let (c, b, res) = line_fit(&xs, &ys);
        TailFit {
            model: TailModel::Power,
            coefficient: c.exp(),
            exponent: b,
            residual: res,
            integrable: b > -1.0 + 1e-9,
        }
    };
    let log_power = || {
        if rs[0] >= 1.0 {
            return None;
        }
        let xs: Vec<f64> = rs.iter().map(|r| (-r.ln()).ln()).collect();
        let ys: Vec<f64> = rs.iter().zip(us).map(|(r, u)| (r * u).ln()).collect();
        let (c, mb, res) = line_fit(&xs, &ys);
        Some(TailFit {
            model: TailModel::LogPower,
            coefficient: c.exp(),
            exponent: -mb,
            residual: res,
            integrable: -mb > 1.0 + 1e-9,
        })
    };
    match model {
        TailModel::None => none,
        TailModel::Power => power(),
        TailModel::LogPower => log_power().unwrap_or_else(power),
        TailModel::Auto => {
            let p = power();
            match log_power() {
                Some(l) if l.residual < p.residual => l,
                _ => p,
            }
        }
    }
}

/// Slope profile on a decreasing level grid, optionally with `φ`.
#[derive(Clone, Debug)]
pub struct LevelProfile {
    pub r: Vec<f64>,
    /// Minimal slope on each level.
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    /// Point attaining the minimal slope (NaN for tabulated profiles).
    pub argmin: Vec<Point>,
    /// Running-max majorant of `u`; empty before [`build_phi`].
    pub ubar: Vec<f64>,
    /// `φ(r_j)`; empty before [`build_phi`].
    pub phi: Vec<f64>,
    pub tail: Option<TailFit>,
    /// PCHIP slopes of `ln(r·ū)` against `ln r`.
    knots: Vec<f64>,
}

impl LevelProfile {
    /// A profile from a tabulated `u` on a decreasing grid.
    pub fn from_table(r: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if r.len() != u.len() || r.len() < 2 {
            return Err(Error::InvalidArgument("profile needs ≥ 2 matching levels".into()));
        }
        if r.windows(2).any(|w| !(w[1] < w[0])) || r.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidArgument("levels must be positive and decreasing".into()));
        }
        if u.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("u must be positive and finite".into()));
        }
        let s = u.iter().map(|u| 1.0 / u).collect();
        let argmin = vec![Point::new(f64::NAN, f64::NAN); r.len()];
        Ok(LevelProfile {
            r,
            s,
            u,
            argmin,
            ubar: Vec::new(),
            phi: Vec::new(),
            tail: None,
            knots: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn has_phi(&self) -> bool {
        !self.phi.is_empty()
    }

    /// Whether `φ(0+) = 0` is finite, i.e. the tail is integrable.
    pub fn integrable(&self) -> bool {
        self.tail.map(|t| t.integrable).unwrap_or(false)
    }

    /// CSV with header `r,s,u,ubar,phi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,s,u,ubar,phi\n");
        for j in 0..self.len() {
            let ub = self.ubar.get(j).copied().unwrap_or(f64::NAN);
            let ph = self.phi.get(j).copied().unwrap_or(f64::NAN);
            writeln!(
                out,
                "{},{},{},{},{}",
                sig17(self.r[j]),
                sig17(self.s[j]),
                sig17(self.u[j]),
                sig17(ub),
                sig17(ph)
            )
            .unwrap();
        }
        out
    }

    /// Index `i` with `r_{i+1} ≤ r ≤ r_i`.
    fn interval(&self, r: f64) -> usize {
        let (mut lo, mut hi) = (0, self.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.r[mid] >= r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// `ln(r·ū)` on interval `i` at `s = ln r` (Hermite cubic).
    fn ln_h(&self, i: usize, s: f64) -> f64 {
        let (s0, s1) = (self.r[i + 1].ln(), self.r[i].ln());
        let (y0, y1) = ((self.r[i + 1] * self.ubar[i + 1]).ln(), (self.r[i] * self.ubar[i]).ln());
        let (d0, d1) = (self.knots[i + 1], self.knots[i]);
        let w = s1 - s0;
        let t = (s - s0) / w;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * w * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * w * d1
    }

    /// `∫ ū` from `r_{i+1}` to `r` on interval `i`.
    fn partial(&self, i: usize, r: f64) -> f64 {
        let (a, b) = (self.r[i + 1].ln(), r.ln());
        if b <= a {
            return 0.0;
        }
        let scale = r * self.ubar[i].max(self.ubar[i + 1]) * (b - a);
        quadrature::integrate(|s| self.ln_h(i, s).exp(), a, b, 1e-15 * scale).integral
    }

    /// `φ(r)` on and off the grid: interpolation inside, the tail model
    /// below the smallest level, linear extension above the largest.
    pub fn phi_at(&self, r: f64) -> f64 {
        assert!(self.has_phi(), "phi_at needs build_phi");
        let last = self.len() - 1;
        if r >= self.r[0] {
            return self.phi[0] + self.ubar[0] * (r - self.r[0]);
        }
        if r < self.r[last] {
            let tail = self.tail.unwrap();
            if !(r > 0.0) {
                return if tail.integrable { 0.0 } else { f64::NEG_INFINITY };
            }
            return self.phi[last] - (tail.antiderivative(self.r[last]) - tail.antiderivative(r));
        }
        let i = self.interval(r);
        self.phi[i + 1] + self.partial(i, r)
    }

    /// `φ′(r) = ū(r)`.
    pub fn dphi_at(&self, r: f64) -> f64 {
        assert!(self.has_phi(), "dphi_at needs build_phi");
        let last = self.len() - 1;
        if r >= self.r[0] {
            return self.ubar[0];
        }
        if r < self.r[last] {
            return self.tail.unwrap().density(r);
        }
        let i = self.interval(r);
        self.ln_h(i, r.ln()).exp() / r
    }
}

/// Minimal slopes on each level of a decreasing grid, `n` parameters each.
pub fn slope_profile(field: &dyn ScalarField, grid: &[f64], n: usize) -> Result<LevelProfile> {
    slope_profile_with(field, grid, n, Exec::default())
}

pub fn slope_profile_with(field: &dyn ScalarField, grid: &[f64], n: usize, exec: Exec) -> Result<LevelProfile> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "slope profile needs a decreasing grid of ≥ 2 levels".into(),
        ));
    }
    let per_level: Vec<_> = exec
        .map_slice(grid, |&r| level_slopes(field, r, n))
        .into_iter()
        .collect::<Result<_>>()?;
    let s: Vec<f64> = per_level.iter().map(|l| l.min_slope).collect();
    let mut p = LevelProfile::from_table(grid.to_vec(), s.iter().map(|s| 1.0 / s).collect())?;
    p.s = s;
    p.argmin = per_level.iter().map(|l| l.argmin).collect();
    Ok(p)
}

/// PCHIP slopes (Fritsch–Carlson) of `y` against increasing `x`.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        return vec![delta[0]; 2];
    }
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        } else if delta[i - 1] == 0.0 && delta[i] == 0.0 {
            d[i] = 0.0;
        } else if delta[i - 1] == delta[i] {
            d[i] = delta[i];
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let e = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if e.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && e.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            e
        }
    };
    d[0] = end(x[1] - x[0], x[2] - x[1], delta[0], delta[1]);
    d[n - 1] = end(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Majorant, `φ` and tail. Never fails; a divergent tail leaves `φ`
/// measured from the smallest level and `integrable() == false`.
pub fn build_phi_relative(profile: &LevelProfile, tail: TailModel) -> LevelProfile {
    let mut p = profile.clone();
    let n = p.len();
    let mut ubar = Vec::with_capacity(n);
    let mut run = 0.0f64;
    for &u in &p.u {
        run = run.max(u);
        ubar.push(run);
    }
    p.ubar = ubar;
    // slopes in increasing-s order, stored back in grid order
    let xs: Vec<f64> = p.r.iter().rev().map(|r| r.ln()).collect();
    let ys: Vec<f64> = p.r.iter().zip(&p.ubar).rev().map(|(r, u)| (r * u).ln()).collect();
    let mut d = pchip_slopes(&xs, &ys);
    d.reverse();
    p.knots = d;
    let fit = fit_tail(&p.r, &p.ubar, tail);
    p.tail = Some(fit);
    let mut phi = vec![0.0; n];
    phi[n - 1] = fit.mass(p.r[n - 1]);
    for i in (0..n - 1).rev() {
        phi[i] = phi[i + 1] + p.partial(i, p.r[i]);
    }
    p.phi = phi;
    p
}

/// As [`build_phi_relative`], but a non-integrable tail is an error.
pub fn build_phi(profile: &LevelProfile, tail: TailModel) -> Result<LevelProfile> {
    let p = build_phi_relative(profile, tail);
    let fit = p.tail.unwrap();
    if !fit.integrable {
        return Err(Error::DivergentTail { exponent: fit.exponent });
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Integrability {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Octaves examined by [`integrability_test`].
pub const OCTAVES: usize = 10;

/// Contribution of each dyadic octave below `r_0` to `∫ u`, from a
/// decreasing grid, integrating `u` as a power law between levels.
pub fn octave_contributions(r: &[f64], u: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for i in 0..r.len().saturating_sub(1) {
        let (r0, r1, u0, u1) = (r[i], r[i + 1], u[i], u[i + 1]);
        let b = (u0 / u1).ln() / (r0 / r1).ln();
        let piece = if (b + 1.0).abs() < 1e-12 {
            r0 * u0 * (r0 / r1).ln()
        } else {
            (r0 * u0 - r1 * u1) / (b + 1.0)
        };
        let octave = ((r[0] / r1).log2() - 1e-9).floor().max(0.0) as usize;
        if out.len() <= octave {
            out.resize(octave + 1, 0.0);
        }
        out[octave] += piece;
    }
    out
}

/// CONVERGENT if the last ten octave contributions decay with every ratio
/// below 0.95, DIVERGENT if they never decrease, else INCONCLUSIVE.
pub fn integrability_test(r: &[f64], u: &[f64]) -> Integrability {
    let c = octave_contributions(r, u);
    if c.len() < OCTAVES + 1 {
        return Integrability::Inconclusive;
    }
    let tail = &c[c.len() - OCTAVES - 1..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&q| q < 0.95) {
        Integrability::Convergent
    } else if ratios.iter().all(|&q| q >= 1.0 - 1e-9) {
        Integrability::Divergent
    } else {
        Integrability::Inconclusive
    }
}
