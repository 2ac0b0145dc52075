//! Desingularization from a growth condition `f ≥ m(dist(·, argmin))` with
//! `m⁻¹(s) = (−ln s)^{−1/α}`: `φ(ρ) = ∫₀^ρ m⁻¹(s)/s ds`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct GrowthPhi {
    alpha: f64,
}

pub fn growth_phi(alpha: f64) -> Result<GrowthPhi> {
    if alpha >= 1.0 {
        return Err(Error::Divergent { alpha });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "growth exponent {alpha} must be positive"
        )));
    }
    Ok(GrowthPhi { alpha })
}

impl GrowthPhi {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `L^{1−1/α} / (1/α − 1)` with `L = −ln ρ`.
    pub fn closed_form(&self, rho: f64) -> f64 {
        let a = 1.0 / self.alpha;
        (-rho.ln()).powf(1.0 - a) / (a - 1.0)
    }

    /// Quadrature of the defining integral after `t = −ln s`, which turns it
    /// into `∫_L^∞ t^{−1/α} dt` with `L = −ln ρ`. The half-line is cut into
    /// doubling intervals `[2^j L, 2^{j+1} L]`, each integrated by
    /// double-exponential quadrature; once the pieces shrink geometrically
    /// the remainder is summed as a geometric series.
    pub fn phi(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("ρ = {rho} must lie in (0, 1)")));
        }
        let a = 1.0 / self.alpha;
        let l = -rho.ln();
        let mut total = 0.0;
        let mut prev = f64::NAN;
        let mut lo = l;
        for _ in 0..4000 {
            let hi = 2.0 * lo;
            let piece = quadrature::integrate(|t: f64| t.powf(-a), lo, hi, 1e-16 * lo.powf(1.0 - a)).integral;
            total += piece;
            let q = piece / prev;
            if q > 0.0 && q < 1.0 && piece * q / (1.0 - q) <= 1e-15 * total {
                return Ok(total + piece * q / (1.0 - q));
            }
            prev = piece;
            lo = hi;
        }
        Ok(total + prev * 2f64.powf(1.0 - a) / (1.0 - 2f64.powf(1.0 - a)))
    }
}
