//! Scalar fields on the plane and a zoo of entries with closed-form oracles.

use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{refined_max, ConvexBody, Point, UnitDirection};

/// A lower semicontinuous function `ℝ² → ℝ ∪ {+∞}` with its minimal-norm
/// subgradient and optional closed-form oracles.
///
/// Level arguments `r` of the oracles are measured above the minimum value,
/// i.e. `r = f(x) − min f`.
pub trait ScalarField: Send + Sync {
    fn name(&self) -> String;

    fn value(&self, x: &Point) -> f64;

    /// Minimal-norm element `∂⁰f(x)` of the Fréchet subdifferential.
    fn subgradient(&self, x: &Point) -> Vector2<f64>;

    fn in_domain(&self, x: &Point) -> bool {
        x.x.is_finite() && x.y.is_finite()
    }

    fn min_value(&self) -> f64 {
        0.0
    }

    /// `f(x) − min f`. Fields whose values crowd the minimum beyond `f64`
    /// resolution override this with a direct evaluation.
    fn excess(&self, x: &Point) -> f64 {
        self.value(x) - self.min_value()
    }

    /// Radius of the disk of minimizers centred at the origin (0 for a point).
    fn argmin_radius(&self) -> f64 {
        0.0
    }

    /// Semiconvexity modulus: `f + (α/2)‖·‖²` is convex on the unit ball.
    fn semiconvexity(&self) -> f64;

    /// Whether `∂⁰f` is continuous, so explicit integrators apply.
    fn is_smooth(&self) -> bool;

    fn is_convex(&self) -> bool {
        self.semiconvexity() == 0.0
    }

    /// Lipschitz constant of the gradient on the unit ball, when finite.
    fn gradient_lipschitz(&self) -> Option<f64> {
        None
    }

    /// `u(r) = 1 / inf{‖∂⁰f(x)‖ : f(x) − min f = r}`.
    fn slope_oracle(&self, _r: f64) -> Option<f64> {
        None
    }

    /// Desingularization `φ(r) = ∫₀^r u`.
    fn phi_oracle(&self, _r: f64) -> Option<f64> {
        None
    }

    fn prox_oracle(&self, _lambda: f64, _x: &Point) -> Option<Point> {
        None
    }

    fn flow_oracle(&self, _x0: &Point, _t: f64) -> Option<Point> {
        None
    }

    /// Exact point on the level `[f − min f = r]` for a curve parameter
    /// `angle ∈ [0, 2π)`, when the field can parametrize its level curves
    /// directly. The parameter need not be the polar angle.
    fn level_point(&self, _r: f64, _angle: f64) -> Option<Point> {
        None
    }

    /// The sublevel set `[f − min f ≤ r]` as an exact body, when known.
    fn sublevel_body(&self, _r: f64) -> Option<ConvexBody> {
        None
    }
}

/// `(f(x), ∂⁰f(x))` with a domain check.
pub fn eval_grad(field: &dyn ScalarField, x: &Point) -> Result<(f64, Vector2<f64>)> {
    if !field.in_domain(x) {
        return Err(Error::OutOfDomain(x.x, x.y));
    }
    Ok((field.value(x), field.subgradient(x)))
}

/// Radii used by [`strong_slope`] unless the caller supplies a schedule.
pub fn default_slope_radii() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7]
}

/// Plateau estimate of `|∇f|(x) = limsup (f(x) − f(y))⁺ / ‖x − y‖`.
///
/// For each radius the supremum over the circle is taken on `samples`
/// directions with a golden-section refinement. The schedule stops once two
/// successive estimates agree to 1e−4 relative; the result is the larger of
/// the last two estimates.
pub fn strong_slope(field: &dyn ScalarField, x: &Point, radii: &[f64], samples: usize) -> Result<f64> {
    if !field.in_domain(x) {
        return Err(Error::OutOfDomain(x.x, x.y));
    }
    if samples < 32 || radii.is_empty() {
        return Err(Error::InvalidArgument(
            "strong_slope needs at least 32 samples and one radius".into(),
        ));
    }
    let fx = field.value(x);
    let mut estimates: Vec<f64> = Vec::with_capacity(radii.len());
    for &rho in radii {
        let best = refined_max(samples, Exec::Sequential, |a| {
            let y = x + UnitDirection::new(a).vector() * rho;
            if !field.in_domain(&y) {
                return 0.0;
            }
            ((fx - field.value(&y)) / rho).max(0.0)
        });
        estimates.push(best.value);
        let k = estimates.len();
        if k >= 2 {
            let (a, b) = (estimates[k - 2], estimates[k - 1]);
            if (a - b).abs() <= 1e-4 * a.abs().max(b.abs()) {
                break;
            }
        }
    }
    let k = estimates.len();
    Ok(if k >= 2 {
        estimates[k - 2].max(estimates[k - 1])
    } else {
        estimates[0]
    })
}

/// `f(x) = ‖x‖^p`, `p ∈ (1, 4]`.
#[derive(Clone, Debug)]
pub struct Power {
    p: f64,
}

impl Power {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 4.0) {
            return Err(Error::InvalidArgument(format!("power exponent {p} not in (1, 4]")));
        }
        Ok(Self { p })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }
}

impl ScalarField for Power {
    fn name(&self) -> String {
        format!("power:{}", self.p)
    }

    fn value(&self, x: &Point) -> f64 {
        x.norm().powf(self.p)
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        let t = x.norm();
        if t == 0.0 {
            return Vector2::zeros();
        }
        x * (self.p * t.powf(self.p - 2.0))
    }

    fn semiconvexity(&self) -> f64 {
        0.0
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn gradient_lipschitz(&self) -> Option<f64> {
        (self.p >= 2.0).then_some(self.p * (self.p - 1.0))
    }

    fn slope_oracle(&self, r: f64) -> Option<f64> {
        Some(r.powf(-(self.p - 1.0) / self.p) / self.p)
    }

    fn phi_oracle(&self, r: f64) -> Option<f64> {
        Some(r.powf(1.0 / self.p))
    }

    fn sublevel_body(&self, r: f64) -> Option<ConvexBody> {
        (r > 0.0).then(|| ConvexBody::disk(r.powf(1.0 / self.p)))
    }

    fn prox_oracle(&self, lambda: f64, x: &Point) -> Option<Point> {
        (self.p == 2.0).then(|| x / (1.0 + 2.0 * lambda))
    }

    fn flow_oracle(&self, x0: &Point, t: f64) -> Option<Point> {
        let r0 = x0.norm();
        if r0 == 0.0 {
            return Some(*x0);
        }
        let p = self.p;
        let r = if p == 2.0 {
            r0 * (-2.0 * t).exp()
        } else {
            let base = r0.powf(2.0 - p) - p * (2.0 - p) * t;
            if base <= 0.0 {
                0.0
            } else {
                base.powf(1.0 / (2.0 - p))
            }
        };
        Some(x0 * (r / r0))
    }
}

/// `f(x) = ½⟨Ax, x⟩` with `A` symmetric positive definite.
#[derive(Clone, Debug)]
pub struct Quad {
    a: Matrix2<f64>,
    eig: SymmetricEigen<f64, nalgebra::U2>,
}

impl Quad {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        let a = Matrix2::new(a11, a12, a12, a22);
        let eig = SymmetricEigen::new(a);
        if !(eig.eigenvalues.min() > 0.0) {
            return Err(Error::InvalidArgument(
                "quadratic form must be positive definite".into(),
            ));
        }
        Ok(Self { a, eig })
    }

    pub fn diag(a11: f64, a22: f64) -> Result<Self> {
        Self::new(a11, 0.0, a22)
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        self.a
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.eigenvalues.min()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig.eigenvalues.max()
    }
}

impl ScalarField for Quad {
    fn name(&self) -> String {
        let a = &self.a;
        if a[(0, 1)] == 0.0 {
            format!("quad:{},{}", a[(0, 0)], a[(1, 1)])
        } else {
            format!("quad:{},{},{}", a[(0, 0)], a[(0, 1)], a[(1, 1)])
        }
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(self.a * x))
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        self.a * x
    }

    fn semiconvexity(&self) -> f64 {
        0.0
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn gradient_lipschitz(&self) -> Option<f64> {
        Some(self.lambda_max())
    }

    fn slope_oracle(&self, r: f64) -> Option<f64> {
        Some(1.0 / (2.0 * r * self.lambda_min()).sqrt())
    }

    fn phi_oracle(&self, r: f64) -> Option<f64> {
        Some((2.0 * r / self.lambda_min()).sqrt())
    }

    fn prox_oracle(&self, lambda: f64, x: &Point) -> Option<Point> {
        (Matrix2::identity() + self.a * lambda).try_inverse().map(|m| m * x)
    }

    fn flow_oracle(&self, x0: &Point, t: f64) -> Option<Point> {
        let v = self.eig.eigenvectors;
        let d = Matrix2::from_diagonal(&self.eig.eigenvalues.map(|l| (-l * t).exp()));
        Some(v * d * v.transpose() * x0)
    }
}

/// `f(x) = ‖x‖`.
#[derive(Clone, Debug, Default)]
pub struct Norm;

impl ScalarField for Norm {
    fn name(&self) -> String {
        "norm".into()
    }

    fn value(&self, x: &Point) -> f64 {
        x.norm()
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        let t = x.norm();
        if t == 0.0 {
            Vector2::zeros()
        } else {
            x / t
        }
    }

    fn semiconvexity(&self) -> f64 {
        0.0
    }

    fn is_smooth(&self) -> bool {
        false
    }

    fn slope_oracle(&self, _r: f64) -> Option<f64> {
        Some(1.0)
    }

    fn phi_oracle(&self, r: f64) -> Option<f64> {
        Some(r)
    }

    fn sublevel_body(&self, r: f64) -> Option<ConvexBody> {
        (r > 0.0).then(|| ConvexBody::disk(r))
    }

    fn prox_oracle(&self, lambda: f64, x: &Point) -> Option<Point> {
        let t = x.norm();
        Some(if t <= lambda {
            Point::zeros()
        } else {
            x * (1.0 - lambda / t)
        })
    }

    fn flow_oracle(&self, x0: &Point, t: f64) -> Option<Point> {
        let r = x0.norm();
        Some(if r <= t { Point::zeros() } else { x0 * (1.0 - t / r) })
    }
}

/// `f(x) = exp(−‖x‖^{−α})`, `f(0) = 0`, `α ∈ (0, 1)`: C∞ and flat at the origin.
#[derive(Clone, Debug)]
pub struct Flat {
    alpha: f64,
    semiconvexity: f64,
    lipschitz: f64,
}

impl Flat {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("flat exponent {alpha} not in (0, 1)")));
        }
        let mut f = Self {
            alpha,
            semiconvexity: 0.0,
            lipschitz: 0.0,
        };
        // curvature bounds on the unit ball: radial g'' and tangential g'/t
        let n = 20_000;
        let mut min_curv = 0.0f64;
        let mut max_curv = 0.0f64;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let (_, d1, d2) = f.radial(t);
            min_curv = min_curv.min(d2);
            max_curv = max_curv.max(d2.abs()).max(d1 / t);
        }
        f.semiconvexity = (-min_curv) * (1.0 + 1e-6);
        f.lipschitz = max_curv * (1.0 + 1e-6);
        Ok(f)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(g, g', g'')` for the radial profile `g(t) = exp(−t^{−α})`.
    fn radial(&self, t: f64) -> (f64, f64, f64) {
        let a = self.alpha;
        if t <= 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let s = t.powf(-a);
        if s > 740.0 {
            return (0.0, 0.0, 0.0);
        }
        let g = (-s).exp();
        let d1 = a * s / t * g;
        let d2 = a * g * s / (t * t) * (a * s - (a + 1.0));
        (g, d1, d2)
    }
}

impl ScalarField for Flat {
    fn name(&self) -> String {
        format!("flat:{}", self.alpha)
    }

    fn value(&self, x: &Point) -> f64 {
        self.radial(x.norm()).0
    }

    fn subgradient(&self, x: &Point) -> Vector2<f64> {
        let t = x.norm();
        if t == 0.0 {
            return Vector2::zeros();
        }
        x * (self.radial(t).1 / t)
    }

    fn semiconvexity(&self) -> f64 {
        self.semiconvexity
    }

    fn is_smooth(&self) -> bool {
        true
    }

    fn is_convex(&self) -> bool {
        false
    }

    fn gradient_lipschitz(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn slope_oracle(&self, r: f64) -> Option<f64> {
        let l = -r.ln();
        Some(1.0 / (self.alpha * r * l.powf((self.alpha + 1.0) / self.alpha)))
    }

    fn phi_oracle(&self, r: f64) -> Option<f64> {
        Some((-r.ln()).powf(-1.0 / self.alpha))
    }

    fn sublevel_body(&self, r: f64) -> Option<ConvexBody> {
        (r > 0.0 && r < 1.0).then(|| ConvexBody::disk((-r.ln()).powf(-1.0 / self.alpha)))
    }
}

/// A named field with human-readable closed forms.
pub struct ZooEntry {
    pub name: String,
    pub field: Arc<dyn ScalarField>,
    pub metadata: Vec<String>,
}

/// Parses a field spec: `power:<p>`, `quad:<a11>,<a22>`,
/// `quad:<a11>,<a12>,<a22>`, `norm`, `flat:<alpha>`, `cex` or `cex:<nmax>`.
pub fn parse_field(spec: &str) -> Result<Arc<dyn ScalarField>> {
    let (kind, args) = match spec.split_once(':') {
        Some((k, a)) => (k.trim(), a.trim()),
        None => (spec.trim(), ""),
    };
    let nums = || -> Result<Vec<f64>> {
        if args.is_empty() {
            return Ok(Vec::new());
        }
        args.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {s:?} in field spec {spec:?}")))
            })
            .collect()
    };
    let v = nums()?;
    let field: Arc<dyn ScalarField> = match (kind, v.as_slice()) {
        ("power", [p]) => Arc::new(Power::new(*p)?),
        ("quad", [a, b]) => Arc::new(Quad::diag(*a, *b)?),
        ("quad", [a, b, c]) => Arc::new(Quad::new(*a, *b, *c)?),
        ("norm", []) => Arc::new(Norm),
        ("flat", [a]) => Arc::new(Flat::new(*a)?),
        ("cex", []) => Arc::new(crate::counterexample::CexField::standard(
            crate::counterexample::DEFAULT_NMAX,
        )?),
        ("cex", [n]) if n.fract() == 0.0 && *n >= 4.0 => {
            Arc::new(crate::counterexample::CexField::standard(*n as usize)?)
        }
        _ => return Err(Error::Parse(format!("unknown field spec {spec:?}"))),
    };
    Ok(field)
}

/// The built-in entries with their closed forms.
pub fn catalog() -> Vec<(String, Vec<String>)> {
    vec![
        (
            "power:<p>".into(),
            vec![
                "f = |x|^p, p in (1,4]".into(),
                "u(r) = r^(-(p-1)/p)/p".into(),
                "phi(r) = r^(1/p)".into(),
            ],
        ),
        (
            "quad:<a11>,<a22> | quad:<a11>,<a12>,<a22>".into(),
            vec![
                "f = <Ax,x>/2, A symmetric positive definite".into(),
                "u(r) = 1/sqrt(2 r lambda_min)".into(),
                "phi(r) = sqrt(2 r / lambda_min)".into(),
            ],
        ),
        (
            "norm".into(),
            vec!["f = |x|".into(), "u(r) = 1".into(), "phi(r) = r".into()],
        ),
        (
            "flat:<alpha>".into(),
            vec![
                "f = exp(-|x|^(-alpha)), alpha in (0,1)".into(),
                "u(r) = 1/(alpha r (-log r)^((alpha+1)/alpha))".into(),
                "phi(r) = (-log r)^(-1/alpha)".into(),
            ],
        ),
        (
            "cex | cex:<nmax>".into(),
            vec![
                "convex field with prescribed nested sublevel sets".into(),
                "argmin = disk of radius r = lim R_n; no desingularization exists".into(),
            ],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_grad(f: &dyn ScalarField, x: &Point) -> Vector2<f64> {
        let h = 1e-6;
        let e1 = Vector2::new(h, 0.0);
        let e2 = Vector2::new(0.0, h);
        Vector2::new(
            (f.value(&(x + e1)) - f.value(&(x - e1))) / (2.0 * h),
            (f.value(&(x + e2)) - f.value(&(x - e2))) / (2.0 * h),
        )
    }

    fn entries() -> Vec<Box<dyn ScalarField>> {
        vec![
            Box::new(Power::new(1.5).unwrap()),
            Box::new(Power::new(2.0).unwrap()),
            Box::new(Power::new(3.0).unwrap()),
            Box::new(Quad::diag(1.0, 4.0).unwrap()),
            Box::new(Quad::new(2.0, 0.5, 1.0).unwrap()),
            Box::new(Norm),
            Box::new(Flat::new(0.5).unwrap()),
        ]
    }

    fn random_in_ball(rng: &mut ChaCha8Rng, rmin: f64) -> Point {
        let a = rng.gen::<f64>() * std::f64::consts::TAU;
        let r = rmin + (1.0 - rmin) * rng.gen::<f64>().sqrt();
        Point::new(a.cos(), a.sin()) * r
    }

    #[test]
    fn eval_grad_examples() {
        let q = Quad::diag(1.0, 1.0).unwrap();
        let (v, g) = eval_grad(&q, &Point::new(1.0, 0.0)).unwrap();
        assert_eq!(v, 0.5);
        assert_eq!(g, Vector2::new(1.0, 0.0));
        let p = Power::new(2.0).unwrap();
        let (v, g) = eval_grad(&p, &Point::new(1.0, 0.0)).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(g, Vector2::new(2.0, 0.0));
        let fl = Flat::new(0.5).unwrap();
        let t: f64 = 0.3;
        let (v, g) = eval_grad(&fl, &Point::new(0.0, t)).unwrap();
        let e = (-1.0 / t.sqrt()).exp();
        assert!((v - e).abs() < 1e-15);
        assert!((g.norm() - 0.5 * t.powf(-1.5) * e).abs() < 1e-14);
        assert!(matches!(
            eval_grad(&p, &Point::new(f64::NAN, 0.0)),
            Err(Error::OutOfDomain(..))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in entries() {
            for _ in 0..100 {
                let x = random_in_ball(&mut rng, 0.05);
                let g = f.subgradient(&x);
                let fd = fd_grad(f.as_ref(), &x);
                assert!(
                    (g - fd).norm() <= 1e-6 * (1.0 + g.norm()),
                    "{} at {x:?}: {g:?} vs {fd:?}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn strong_slope_examples() {
        let p = Power::new(2.0).unwrap();
        let radii = default_slope_radii();
        let s = strong_slope(&p, &Point::new(1.0, 0.0), &radii, 64).unwrap();
        assert!((s - 2.0).abs() < 1e-3);
        assert_eq!(strong_slope(&p, &Point::zeros(), &radii, 64).unwrap(), 0.0);
        let s = strong_slope(&Norm, &Point::new(0.3, 0.4), &radii, 64).unwrap();
        assert!((s - 1.0).abs() < 1e-3);
        assert_eq!(strong_slope(&Norm, &Point::zeros(), &radii, 64).unwrap(), 0.0);
    }

    #[test]
    fn strong_slope_matches_subgradient_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let radii = default_slope_radii();
        for f in entries() {
            for _ in 0..100 {
                let x = random_in_ball(&mut rng, 0.05);
                let g = f.subgradient(&x).norm();
                let s = strong_slope(f.as_ref(), &x, &radii, 64).unwrap();
                assert!((s - g).abs() <= 1e-3 * (1.0 + g), "{}: {s} vs {g}", f.name());
            }
        }
    }

    #[test]
    fn semiconvexity_inequality_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in entries() {
            let alpha = f.semiconvexity();
            for _ in 0..10_000 {
                let x = random_in_ball(&mut rng, 0.0);
                let y = random_in_ball(&mut rng, 0.0);
                let lhs = f.value(&y) - f.value(&x);
                let rhs = f.subgradient(&x).dot(&(y - x)) - alpha * (x - y).norm_squared();
                assert!(lhs >= rhs - 1e-12, "{}: {lhs} < {rhs}", f.name());
            }
        }
    }

    #[test]
    fn flat_is_genuinely_nonconvex() {
        let f = Flat::new(0.5).unwrap();
        assert!(f.semiconvexity() > 0.0);
        assert!(!f.is_convex());
    }

    #[test]
    fn power_lojasiewicz_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [1.5, 2.0, 2.5, 3.0, 4.0] {
            let f = Power::new(p).unwrap();
            for _ in 0..100 {
                let x = random_in_ball(&mut rng, 0.01);
                let lhs = f.subgradient(&x).norm();
                let rhs = p * f.value(&x).powf((p - 1.0) / p);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            }
        }
    }

    #[test]
    fn oracles_agree_with_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for f in entries() {
            for _ in 0..100 {
                let r: f64 = 10f64.powf(-6.0 * rng.gen::<f64>()) * 0.3;
                let (Some(phi), Some(u)) = (f.phi_oracle(r), f.slope_oracle(r)) else {
                    continue;
                };
                let h = 1e-6 * r;
                let d = (f.phi_oracle(r + h).unwrap() - f.phi_oracle(r - h).unwrap()) / (2.0 * h);
                assert!((d - u).abs() <= 1e-6 * u, "{}: {d} vs {u}", f.name());
                assert!(phi > 0.0);
            }
        }
    }

    #[test]
    fn flow_oracles_solve_the_gradient_ode() {
        let x0 = Point::new(0.6, -0.3);
        for f in entries() {
            let Some(x1) = f.flow_oracle(&x0, 0.1) else { continue };
            let h = 1e-6;
            let xa = f.flow_oracle(&x0, 0.1 + h).unwrap();
            let xb = f.flow_oracle(&x0, 0.1 - h).unwrap();
            let vel = (xa - xb) / (2.0 * h);
            let g = f.subgradient(&x1);
            assert!((vel + g).norm() <= 1e-6 * (1.0 + g.norm()), "{}", f.name());
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(parse_field("power:2.0").unwrap().name(), "power:2");
        assert_eq!(parse_field("quad:1,4").unwrap().name(), "quad:1,4");
        assert_eq!(parse_field("flat:0.5").unwrap().name(), "flat:0.5");
        assert_eq!(parse_field("norm").unwrap().name(), "norm");
        assert!(parse_field("power:5").is_err());
        assert!(parse_field("quad:1,-1").is_err());
        assert!(parse_field("banana").is_err());
    }
}
