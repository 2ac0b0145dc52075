//! Level values for the nested bodies.
//!
//! The gaps `g_k = λ_k − λ_{k+1}` obey `K_k g_k = ½ g_{k−1}` and shrink by a
//! factor of roughly 60 per body, so after a dozen bodies `λ_k` is no longer
//! distinguishable from its limit in `f64`. Gaps and excesses
//! `e_k = λ_k − λ_∞` are therefore stored as natural logarithms.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{refined_max, ConvexBody, UnitDirection, DEFAULT_GRID};

use super::rings::NestedBodies;

/// Denominators below this violate strict nesting.
pub const DEGENERATE_GAP: f64 = 1e-14;

/// `K = max_u (σ_prev − σ_mid)/(σ_mid − σ_next)` over a refined grid.
pub fn torralba_ratio(
    prev: &ConvexBody,
    mid: &ConvexBody,
    next: &ConvexBody,
    grid: usize,
    index: usize,
) -> Result<f64> {
    let min_gap = (0..grid)
        .map(|j| {
            let u = UnitDirection::new(std::f64::consts::TAU * j as f64 / grid as f64);
            mid.support(&u) - next.support(&u)
        })
        .fold(f64::INFINITY, f64::min);
    if min_gap < DEGENERATE_GAP {
        return Err(Error::Degenerate { index, gap: min_gap });
    }
    let best = refined_max(grid, Exec::Sequential, |t| {
        let u = UnitDirection::new(t);
        let s = mid.support(&u);
        (prev.support(&u) - s) / (s - next.support(&u))
    });
    Ok(best.value)
}

/// Torralba constant `K_k` of body `k ≥ 1`.
pub fn torralba_k(bodies: &NestedBodies, k: usize, grid: usize) -> Result<f64> {
    if k == 0 || k >= bodies.last_index() {
        return Err(Error::Range {
            index: k,
            max: bodies.last_index().saturating_sub(1),
        });
    }
    torralba_ratio(bodies.body(k - 1), bodies.body(k), bodies.body(k + 1), grid, k)
}

/// Strictly decreasing levels `λ_k` paired with the bodies `T_k`.
#[derive(Clone, Debug)]
pub struct PrescribedLevels {
    lambda0: f64,
    lambda1: f64,
    lambda_inf: f64,
    /// `K_k` at index `k`; index 0 holds NaN.
    k_consts: Vec<f64>,
    /// `ln g_k` for `k = 0..=K`, where `g_K = e_K` closes onto the limit disk.
    ln_gaps: Vec<f64>,
    /// `ln e_k` for `k = 0..=K`.
    ln_excess: Vec<f64>,
}

impl PrescribedLevels {
    /// Index of the last level.
    pub fn last_index(&self) -> usize {
        self.ln_excess.len() - 1
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// `λ_∞ = lim λ_k`, the minimum value of the field.
    pub fn lambda_inf(&self) -> f64 {
        self.lambda_inf
    }

    /// `λ_k` in `f64`; collapses onto `λ_∞` after a few generations.
    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda_inf + self.excess(k)
    }

    /// `ln(λ_k − λ_∞)`.
    pub fn ln_excess(&self, k: usize) -> f64 {
        self.ln_excess[k]
    }

    pub fn excess(&self, k: usize) -> f64 {
        self.ln_excess[k].exp()
    }

    /// `ln(λ_k − λ_{k+1})`; at the last index the gap to `λ_∞`.
    pub fn ln_gap(&self, k: usize) -> f64 {
        self.ln_gaps[k]
    }

    pub fn gap(&self, k: usize) -> f64 {
        self.ln_gaps[k].exp()
    }

    /// `K_k` for `1 ≤ k < K`.
    pub fn torralba(&self, k: usize) -> f64 {
        self.k_consts[k]
    }

    pub fn torralba_constants(&self) -> &[f64] {
        &self.k_consts
    }

    /// Rebuilds levels from persisted constants.
    pub fn from_parts(lambda0: f64, lambda1: f64, k_consts: Vec<f64>) -> Result<Self> {
        if !(lambda0 > lambda1 && lambda1 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need λ0 > λ1 > 0, got {lambda0}, {lambda1}"
            )));
        }
        if k_consts.len() < 2 {
            return Err(Error::InvalidArgument("need at least one Torralba constant".into()));
        }
        for (k, &kk) in k_consts.iter().enumerate().skip(1) {
            if !(kk.is_finite() && kk > 0.0) {
                return Err(Error::Degenerate { index: k, gap: kk });
            }
        }
        // levels 0..=last, with last = k_consts.len()
        let last = k_consts.len();
        let mut ln_gaps = Vec::with_capacity(last + 1);
        ln_gaps.push((lambda0 - lambda1).ln());
        for kk in &k_consts[1..] {
            let prev = *ln_gaps.last().unwrap();
            ln_gaps.push(prev - (2.0 * kk).ln());
        }
        // geometric closure from T_last to the limit disk: ratio q = 1/(2K_{last−1})
        let q = 1.0 / (2.0 * k_consts[last - 1]);
        let closing = ln_gaps[last - 1] + q.ln() - (-q).ln_1p();
        ln_gaps.push(closing);
        let mut ln_excess = vec![0.0; last + 1];
        ln_excess[last] = closing;
        for k in (0..last).rev() {
            ln_excess[k] = log_add(ln_gaps[k], ln_excess[k + 1]);
        }
        let lambda_inf = lambda0 - ln_excess[0].exp();
        let levels = PrescribedLevels {
            lambda0,
            lambda1,
            lambda_inf,
            k_consts,
            ln_gaps,
            ln_excess,
        };
        levels.check_admissible()?;
        Ok(levels)
    }

    /// `0 < K_k (λ_k − λ_{k+1}) < λ_{k−1} − λ_k` for every interior index.
    fn check_admissible(&self) -> Result<()> {
        for k in 1..self.k_consts.len() {
            let lhs = self.k_consts[k].ln() + self.ln_gaps[k];
            if !(lhs.is_finite() && lhs < self.ln_gaps[k - 1]) {
                return Err(Error::Degenerate {
                    index: k,
                    gap: self.gap(k),
                });
            }
        }
        Ok(())
    }

    /// Residual `|ln(K_k g_k) − ln(½ g_{k−1})|` of the recursion.
    pub fn recursion_residual(&self, k: usize) -> f64 {
        (self.k_consts[k].ln() + self.ln_gaps[k] - (0.5f64.ln() + self.ln_gaps[k - 1])).abs()
    }
}

/// `ln(e^a + e^b)` for `a ≥ b` or either order.
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Applies the recursion `K_k (λ_k − λ_{k+1}) = ½ (λ_{k−1} − λ_k)` to the
/// built bodies, with `K_k` from a grid of `grid` directions.
pub fn assign_levels(bodies: &NestedBodies, lambda0: f64, lambda1: f64) -> Result<PrescribedLevels> {
    assign_levels_with(bodies, lambda0, lambda1, DEFAULT_GRID, Exec::default())
}

pub fn assign_levels_with(
    bodies: &NestedBodies,
    lambda0: f64,
    lambda1: f64,
    grid: usize,
    exec: Exec,
) -> Result<PrescribedLevels> {
    if !(lambda0 > lambda1 && lambda1 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need λ0 > λ1 > 0, got {lambda0}, {lambda1}"
        )));
    }
    let inner = bodies.last_index() - 1;
    let ks = exec.map(inner, |i| torralba_k(bodies, i + 1, grid));
    let mut k_consts = vec![f64::NAN];
    for k in ks {
        k_consts.push(k?);
    }
    PrescribedLevels::from_parts(lambda0, lambda1, k_consts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::rings::build_rings;

    #[test]
    fn concentric_disks_give_k_two() {
        let k = torralba_ratio(
            &ConvexBody::disk(1.0),
            &ConvexBody::disk(0.5),
            &ConvexBody::disk(0.25),
            256,
            1,
        )
        .unwrap();
        assert!((k - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blend_chain_gives_constant_k() {
        let a = ConvexBody::hull(&[
            crate::geometry::Point::new(1.0, 0.0),
            crate::geometry::Point::new(0.0, 2.0),
            crate::geometry::Point::new(-1.5, -1.0),
        ]);
        let b = ConvexBody::disk(0.1);
        let chain: Vec<_> = [1.0, 0.6, 0.3]
            .iter()
            .map(|&t| ConvexBody::blend(a.clone(), b.clone(), t))
            .collect();
        let k = torralba_ratio(&chain[0], &chain[1], &chain[2], 512, 1).unwrap();
        assert!((k - 0.4 / 0.3).abs() < 1e-9);
    }

    #[test]
    fn degenerate_nesting_is_reported() {
        let d = ConvexBody::disk(0.5);
        let err = torralba_ratio(&ConvexBody::disk(1.0), &d, &d, 64, 3).unwrap_err();
        assert!(matches!(err, Error::Degenerate { index: 3, .. }));
    }

    #[test]
    fn grid_k_matches_a_dense_scan() {
        let b = build_rings(8).unwrap();
        for k in [2usize, 7, 12, 20] {
            let fast = torralba_k(&b, k, DEFAULT_GRID).unwrap();
            let (p, m, n) = (b.body(k - 1), b.body(k), b.body(k + 1));
            let dense = (0..1_000_000)
                .map(|j| {
                    let u = UnitDirection::new(std::f64::consts::TAU * j as f64 / 1e6);
                    let s = m.support(&u);
                    (p.support(&u) - s) / (s - n.support(&u))
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(fast >= dense - 1e-9 * dense, "k={k}: {fast} < {dense}");
            assert!(fast - dense <= 1e-6 * dense, "k={k}: {fast} ≫ {dense}");
        }
    }

    #[test]
    fn first_recursion_step() {
        let b = build_rings(6).unwrap();
        let lv = assign_levels(&b, 1.0, 0.5).unwrap();
        let k1 = torralba_k(&b, 1, DEFAULT_GRID).unwrap();
        assert!((lv.lambda(1) - 0.5).abs() < 1e-15);
        assert!((lv.lambda(2) - (0.5 - 0.25 / k1)).abs() < 1e-14);
    }

    #[test]
    fn disk_chain_gaps_shrink_by_a_quarter() {
        let k = vec![f64::NAN, 2.0, 2.0, 2.0, 2.0];
        let lv = PrescribedLevels::from_parts(1.0, 0.5, k).unwrap();
        for j in 1..5 {
            assert!((lv.gap(j) / lv.gap(j - 1) - 0.25).abs() < 1e-14);
        }
        // λ_∞ = λ0 − (λ0−λ1)·4/3
        assert!((lv.lambda_inf() - (1.0 - 0.5 * 4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn levels_decrease_and_gaps_sum() {
        let b = build_rings(30).unwrap();
        let lv = assign_levels(&b, 1.0, 0.5).unwrap();
        assert_eq!(lv.last_index(), b.last_index());
        for k in 1..=lv.last_index() {
            assert!(lv.ln_excess(k) < lv.ln_excess(k - 1));
        }
        for k in 1..lv.last_index() {
            assert!(lv.recursion_residual(k) < 1e-12);
        }
        let total: f64 = (0..=lv.last_index()).map(|k| lv.gap(k)).sum();
        assert!((total - (lv.lambda0() - lv.lambda_inf())).abs() < 1e-15);
        assert!(lv.lambda_inf() > 0.0 && lv.lambda_inf() < 0.5);
    }

    #[test]
    fn bad_levels_rejected() {
        let b = build_rings(4).unwrap();
        assert!(assign_levels(&b, 0.5, 1.0).is_err());
        assert!(assign_levels(&b, 1.0, 0.0).is_err());
    }
}
