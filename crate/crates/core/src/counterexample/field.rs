//! The convex function with prescribed sublevel sets `[f ≤ λ_k] = T_k`.
//!
//! Between consecutive levels the sublevel sets are Minkowski blends,
//! `σ_λ = t σ_{T_k} + (1 − t) σ_{T_{k+1}}` with `λ = λ_{k+1} + t g_k`, and
//! `f(x) = max_u λ_x(u)` where `λ_x(u)` solves `⟨x,u⟩ = σ_λ(u)`. Outside `T_0`
//! the field continues as `λ_0 + dist(x, T_0)`; on the limit disk it equals
//! `λ_∞`.

use std::sync::Arc;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{refined_max, ConvexBody, Point, UnitDirection};
use crate::zoo::ScalarField;

use super::levels::{assign_levels, log_add, PrescribedLevels};
use super::rings::{build_rings, NestedBodies};

/// Generations built by [`CexField::standard`] unless told otherwise.
pub const DEFAULT_NMAX: usize = 32;

/// Direction grid used per evaluation.
pub const DEFAULT_DIRS: usize = 1024;

/// Where a point sits relative to the nested bodies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Outside,
    /// `x ∈ T_k \ T_{k+1}`, with `T_{K+1}` the limit disk.
    Bracket(usize),
    Limit,
}

/// A full evaluation: value in log-excess form plus the active direction.
#[derive(Clone, Copy, Debug)]
pub struct CexEval {
    pub location: Location,
    /// `ln(f(x) − λ_∞)`; `−∞` on the limit disk.
    pub ln_excess: f64,
    /// Maximizing direction `θ*`.
    pub angle: f64,
    /// Blend weight `t ∈ [0, 1]` inside the bracket.
    pub t: f64,
    /// `ln ‖∂⁰f(x)‖`.
    pub ln_grad: f64,
}

#[derive(Clone, Debug)]
pub struct CexField {
    bodies: Arc<NestedBodies>,
    levels: Arc<PrescribedLevels>,
    dirs: usize,
}

impl CexField {
    pub fn new(bodies: NestedBodies, levels: PrescribedLevels) -> Result<Self> {
        if levels.last_index() != bodies.last_index() {
            return Err(Error::InvalidArgument(format!(
                "{} levels for {} bodies",
                levels.last_index() + 1,
                bodies.len()
            )));
        }
        Ok(CexField {
            bodies: Arc::new(bodies),
            levels: Arc::new(levels),
            dirs: DEFAULT_DIRS,
        })
    }

    /// The construction through generation `nmax` with `λ_0 = 1`, `λ_1 = ½`.
    pub fn standard(nmax: usize) -> Result<Self> {
        let bodies = build_rings(nmax)?;
        let levels = assign_levels(&bodies, 1.0, 0.5)?;
        Self::new(bodies, levels)
    }

    pub fn with_dirs(mut self, dirs: usize) -> Self {
        self.dirs = dirs.max(16);
        self
    }

    pub fn dirs(&self) -> usize {
        self.dirs
    }

    pub fn bodies(&self) -> &NestedBodies {
        &self.bodies
    }

    pub fn levels(&self) -> &PrescribedLevels {
        &self.levels
    }

    /// Number of brackets, the last one closing onto the limit disk.
    pub fn bracket_count(&self) -> usize {
        self.bodies.len()
    }

    /// `σ_{T_k}(u)` with `T_{K+1}` the limit disk.
    pub fn support(&self, k: usize, u: &UnitDirection) -> f64 {
        if k <= self.bodies.last_index() {
            self.bodies.body(k).support(u)
        } else {
            self.bodies.limit_radius()
        }
    }

    /// Support point of `T_k` (or of the limit disk for `k = K + 1`).
    pub fn support_point(&self, k: usize, u: &UnitDirection) -> Point {
        if k <= self.bodies.last_index() {
            self.bodies.body(k).support_point(u).expect("closed-form body")
        } else {
            u.vector() * self.bodies.limit_radius()
        }
    }

    fn member(&self, k: usize, x: &Point) -> bool {
        if k <= self.bodies.last_index() {
            self.bodies.body(k).contains_exact(x).expect("closed-form body")
        } else {
            x.norm() <= self.bodies.limit_radius()
        }
    }

    /// Binary search for the bracket holding `x`.
    pub fn locate(&self, x: &Point) -> Location {
        if !self.member(0, x) {
            return Location::Outside;
        }
        let mut lo = 0;
        let mut hi = self.bodies.len();
        if self.member(hi, x) {
            return Location::Limit;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.member(mid, x) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Location::Bracket(lo)
    }

    /// Evaluates `f` once the bracket is known: the largest blend weight
    /// `t = max_u (⟨x,u⟩ − σ_{k+1}(u)) / (σ_k(u) − σ_{k+1}(u))`.
    pub fn evaluate(&self, x: &Point) -> CexEval {
        match self.locate(x) {
            Location::Outside => {
                let d = x.norm() - 1.0;
                let e0 = self.levels.ln_excess(0);
                CexEval {
                    location: Location::Outside,
                    ln_excess: log_add(e0, d.ln()),
                    angle: UnitDirection::of(x).angle(),
                    t: 1.0,
                    ln_grad: 0.0,
                }
            }
            Location::Limit => CexEval {
                location: Location::Limit,
                ln_excess: f64::NEG_INFINITY,
                angle: 0.0,
                t: 0.0,
                ln_grad: f64::NEG_INFINITY,
            },
            Location::Bracket(k) => {
                let best = refined_max(self.dirs, Exec::Sequential, |a| {
                    let u = UnitDirection::new(a);
                    let lo = self.support(k + 1, &u);
                    (u.dot(x) - lo) / (self.support(k, &u) - lo)
                });
                let t = best.value.clamp(0.0, 1.0);
                let ln_g = self.levels.ln_gap(k);
                let ln_next = self.next_ln_excess(k);
                let ln_excess = ln_g + (t + (ln_next - ln_g).exp()).ln();
                let u = UnitDirection::new(best.angle);
                let width = self.support(k, &u) - self.support(k + 1, &u);
                CexEval {
                    location: Location::Bracket(k),
                    ln_excess,
                    angle: best.angle,
                    t,
                    ln_grad: ln_g - width.ln(),
                }
            }
        }
    }

    fn next_ln_excess(&self, k: usize) -> f64 {
        if k < self.levels.last_index() {
            self.levels.ln_excess(k + 1)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `ln(f(x) − λ_∞)`.
    pub fn ln_excess(&self, x: &Point) -> f64 {
        self.evaluate(x).ln_excess
    }

    /// `f(x)`.
    pub fn eval_cex(&self, x: &Point) -> f64 {
        match self.locate(x) {
            Location::Outside => self.levels.lambda0() + x.norm() - 1.0,
            _ => self.levels.lambda_inf() + self.ln_excess(x).exp(),
        }
    }

    /// Direction-by-direction evaluation: for each `u` a binary search over
    /// `k` comparing `σ_{T_k}(u)` with `⟨x,u⟩`, a linear solve inside the
    /// bracket, and a maximum over the refined grid. Returns `ln(f − λ_∞)`
    /// for `x ∈ T_0`.
    pub fn ln_excess_per_direction(&self, x: &Point) -> f64 {
        let best = refined_max(self.dirs, Exec::Sequential, |a| {
            self.direction_ln_excess(x, &UnitDirection::new(a))
        });
        best.value
    }

    fn direction_ln_excess(&self, x: &Point, u: &UnitDirection) -> f64 {
        let s = u.dot(x);
        let last = self.bodies.len();
        if s <= self.support(last, u) {
            return f64::NEG_INFINITY;
        }
        if s >= self.support(0, u) {
            return self.levels.ln_excess(0);
        }
        // σ_lo(u) ≥ s > σ_hi(u)
        let (mut lo, mut hi) = (0, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.support(mid, u) >= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let top = self.support(lo, u);
        let bottom = self.support(lo + 1, u);
        let t = (s - bottom) / (top - bottom);
        let ln_g = self.levels.ln_gap(lo);
        ln_g + (t + (self.next_ln_excess(lo) - ln_g).exp()).ln()
    }

    /// Minimal-norm subgradient `n(θ*) (λ_k − λ_{k+1}) / (σ_k(u*) − σ_{k+1}(u*))`.
    pub fn grad_cex(&self, x: &Point) -> Result<Vector2<f64>> {
        let ev = self.evaluate(x);
        match ev.location {
            Location::Limit => Err(Error::UndefinedAtMin),
            Location::Outside => Ok(x / x.norm()),
            Location::Bracket(_) => Ok(UnitDirection::new(ev.angle).vector() * ev.ln_grad.exp()),
        }
    }

    /// Point of the level `λ_∞ + e^{ln_e}` in direction `θ`: the support point
    /// of the blended sublevel set.
    pub fn level_point_ln(&self, ln_e: f64, u: &UnitDirection) -> Point {
        if ln_e >= self.levels.ln_excess(0) {
            let extra = ln_e.exp() - self.levels.excess(0);
            return u.vector() * (1.0 + extra);
        }
        let k = self.level_bracket(ln_e);
        let ln_g = self.levels.ln_gap(k);
        let ln_next = self.next_ln_excess(k);
        // t = (e − e_{k+1}) / g_k
        let t = if ln_next == f64::NEG_INFINITY {
            (ln_e - ln_g).exp()
        } else {
            -(ln_e - ln_g).exp() * (ln_next - ln_e).exp_m1()
        };
        let t = t.clamp(0.0, 1.0);
        self.support_point(k, u) * t + self.support_point(k + 1, u) * (1.0 - t)
    }

    /// Bracket `k` with `e_{k+1} < e ≤ e_k`.
    pub fn level_bracket(&self, ln_e: f64) -> usize {
        let last = self.levels.last_index();
        if ln_e <= self.levels.ln_excess(last) {
            return last;
        }
        let (mut lo, mut hi) = (0, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.levels.ln_excess(mid) >= ln_e {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// The sublevel set `[f ≤ λ_∞ + e^{ln_e}]` as a blend body.
    pub fn sublevel_body(&self, ln_e: f64) -> ConvexBody {
        let last = self.levels.last_index();
        if ln_e >= self.levels.ln_excess(0) {
            let extra = ln_e.exp() - self.levels.excess(0);
            return ConvexBody::disk(1.0 + extra);
        }
        let k = self.level_bracket(ln_e);
        let ln_next = self.next_ln_excess(k);
        let ln_g = self.levels.ln_gap(k);
        let t = if ln_next == f64::NEG_INFINITY {
            (ln_e - ln_g).exp()
        } else {
            -(ln_e - ln_g).exp() * (ln_next - ln_e).exp_m1()
        };
        let lower = if k < last {
            self.bodies.body(k + 1).clone()
        } else {
            self.bodies.limit_body()
        };
        ConvexBody::blend(self.bodies.body(k).clone(), lower, t.clamp(0.0, 1.0))
    }
}

impl ScalarField for CexField {
    fn name(&self) -> String {
        format!("cex:{}", self.bodies.nmax())
    }

    fn value(&self, x: &Point) -> f64 {
        self.eval_cex(x)
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        self.grad_cex(x).unwrap_or_else(|_| Vector2::zeros())
    }

    fn min_value(&self) -> f64 {
        self.levels.lambda_inf()
    }

    fn excess(&self, x: &Point) -> f64 {
        match self.locate(x) {
            Location::Outside => self.levels.excess(0) + x.norm() - 1.0,
            _ => self.ln_excess(x).exp(),
        }
    }

    fn argmin_radius(&self) -> f64 {
        self.bodies.limit_radius()
    }

    fn semiconvexity(&self) -> f64 {
        0.0
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn level_point(&self, r: f64, angle: f64) -> Option<Point> {
        if !(r > 0.0) {
            return None;
        }
        Some(self.level_point_ln(r.ln(), &UnitDirection::new(angle)))
    }

    fn sublevel_body(&self, r: f64) -> Option<ConvexBody> {
        (r > 0.0).then(|| CexField::sublevel_body(self, r.ln()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field() -> CexField {
        CexField::standard(8).unwrap()
    }

    #[test]
    fn boundary_points_sit_on_their_level() {
        let f = field();
        for k in [0usize, 1, 3, 9, 20, 39] {
            for a in [0.1, 1.0, 2.5, 4.0, 6.0] {
                let u = UnitDirection::new(a);
                let x = f.support_point(k, &u);
                let got = f.ln_excess(&x);
                let want = f.levels().ln_excess(k);
                assert!((got - want).abs() < 1e-9, "k={k} a={a}: {got} vs {want}");
            }
        }
        let k = 1;
        let x = f.support_point(k, &UnitDirection::new(0.7));
        assert!((f.eval_cex(&x) - f.levels().lambda(k)).abs() < 1e-9);
    }

    #[test]
    fn origin_is_a_minimizer() {
        let f = field();
        assert_eq!(f.eval_cex(&Point::zeros()), f.levels().lambda_inf());
        assert!(matches!(f.grad_cex(&Point::zeros()), Err(Error::UndefinedAtMin)));
    }

    #[test]
    fn blend_points_sit_on_interpolated_levels() {
        let f = field();
        for k in [0usize, 2, 5, 11, 30] {
            let mid_e = crate::counterexample::levels::log_add(f.levels().ln_excess(k + 1), f.levels().ln_excess(k))
                - 2f64.ln();
            for a in [0.3, 2.0, 5.5] {
                let x = f.level_point_ln(mid_e, &UnitDirection::new(a));
                let got = f.ln_excess(&x);
                assert!((got - mid_e).abs() < 1e-8, "k={k} a={a}");
            }
        }
    }

    #[test]
    fn fast_and_per_direction_evaluations_agree() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let rho = rng.gen_range(0.05..1.0);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = Point::new(a.cos(), a.sin()) * rho;
            let fast = f.ln_excess(&x);
            let slow = f.ln_excess_per_direction(&x);
            if fast.is_finite() {
                assert!((fast - slow).abs() < 1e-9 * fast.abs().max(1.0), "{x:?}");
            } else {
                assert_eq!(slow, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn extension_outside_the_unit_disk() {
        let f = field();
        let x = Point::new(2.0, 0.0);
        assert!((f.eval_cex(&x) - 2.0).abs() < 1e-15);
        assert_eq!(f.grad_cex(&x).unwrap(), Vector2::new(1.0, 0.0));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let rho = rng.gen_range(0.45..0.98);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = Point::new(a.cos(), a.sin()) * rho;
            let g = f.grad_cex(&x).unwrap();
            let h = 1e-7 * g.norm().recip().min(1.0);
            let fd = Vector2::new(
                (f.eval_cex(&(x + Vector2::new(h, 0.0))) - f.eval_cex(&(x - Vector2::new(h, 0.0)))) / (2.0 * h),
                (f.eval_cex(&(x + Vector2::new(0.0, h))) - f.eval_cex(&(x - Vector2::new(0.0, h)))) / (2.0 * h),
            );
            // skip points whose stencil straddles a kink of f
            let kink = {
                let a = f.evaluate(&(x + Vector2::new(h, 0.0))).angle;
                let b = f.evaluate(&(x - Vector2::new(h, 0.0))).angle;
                (a - b).abs() > 1e-3
            };
            if kink || !matches!(f.locate(&x), Location::Bracket(0)) {
                continue;
            }
            assert!((fd - g).norm() <= 1e-4 * g.norm(), "{x:?}: {fd:?} vs {g:?}");
            checked += 1;
        }
    }

    #[test]
    fn disk_chain_gradient_is_radial() {
        // T_0 is the unit disk and T_1 = C_{3,1}; along the arc the sets are
        // locally concentric disks
        let f = field();
        let a = 5.5;
        let u = UnitDirection::new(a);
        let x = u.vector() * 0.99;
        let g = f.grad_cex(&x).unwrap();
        let rho1 = f.support(1, &u);
        let want = f.levels().gap(0) / (1.0 - rho1);
        assert!((g.norm() - want).abs() < 1e-9 * want);
        assert!((g.normalize() - u.vector()).norm() < 1e-7);
    }

    #[test]
    fn level_points_follow_the_blend() {
        let f = field();
        let r = f.levels().excess(4) * 0.7 + f.levels().excess(5) * 0.3;
        for u in UnitDirection::grid(64) {
            let p = ScalarField::level_point(&f, r, u.angle()).unwrap();
            let e = ScalarField::excess(&f, &p);
            assert!((e - r).abs() <= 1e-9 * r);
        }
    }
}
