//! The nested polygon-arc bodies and their closed-form distances.
//!
//! Generation `n ≥ 3` starts from the circle of radius `R_n` and shrinks it in
//! `n + 1` stages. Stage `m ≤ n` is the hull of the first `m` edges of the
//! regular `n`-gon inscribed in the circle of radius `μ_n^m R_n`, closed by
//! the arc of that circle. Stage `n + 1` is the circle of radius
//! `R_{n+1} = μ_n^{n+1} R_n cos(π/n)`. With `μ_n = 1 − 1/n³` the radii
//! converge to a positive limit `r`, while consecutive Hausdorff distances
//! sum like the harmonic series.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{hausdorff_dist_with, ConvexBody, DEFAULT_GRID};

/// Largest generation [`build_rings`] accepts.
pub const MAX_GENERATION: usize = 200;

/// Stage `(n, m)` of the construction; `(2, 3)` tags the unit disk `T_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingParams {
    pub n: u32,
    pub m: u32,
}

impl RingParams {
    pub fn mu(&self) -> f64 {
        shrink_factor(self.n)
    }

    /// Radius `ρ = μ_n^m R_n` of the polygon-arc stage.
    pub fn rho(&self, generation_radius: f64) -> f64 {
        self.mu().powi(self.m as i32) * generation_radius
    }
}

/// `μ_n = 1 − 1/n³`.
pub fn shrink_factor(n: u32) -> f64 {
    1.0 - 1.0 / (n as f64).powi(3)
}

/// `μ_n^{n+1} cos(π/n)`, the ratio `R_{n+1} / R_n`.
pub fn generation_ratio(n: u32) -> f64 {
    shrink_factor(n).powi(n as i32 + 1) * (PI / n as f64).cos()
}

/// The sequence `T_0 ⊃ T_1 ⊃ …` in lexicographic `(n, m)` order.
#[derive(Clone, Debug)]
pub struct NestedBodies {
    bodies: Vec<ConvexBody>,
    tags: Vec<RingParams>,
    /// `R_n` for `n = 3..=nmax+1`, stored at index `n − 3`.
    radii: Vec<f64>,
    nmax: usize,
    limit_radius: f64,
}

/// Builds every body through generation `nmax`.
pub fn build_rings(nmax: usize) -> Result<NestedBodies> {
    if !(4..=MAX_GENERATION).contains(&nmax) {
        return Err(Error::InvalidArgument(format!(
            "nmax {nmax} outside 4..={MAX_GENERATION}"
        )));
    }
    let mut bodies = vec![ConvexBody::disk(1.0)];
    let mut tags = vec![RingParams { n: 2, m: 3 }];
    let mut radii = vec![1.0];
    for n in 3..=nmax as u32 {
        let big_r = *radii.last().unwrap();
        for m in 1..=n {
            let p = RingParams { n, m };
            bodies.push(ConvexBody::PolygonArc {
                n,
                m,
                rho: p.rho(big_r),
            });
            tags.push(p);
        }
        let next = big_r * generation_ratio(n);
        bodies.push(ConvexBody::disk(next));
        tags.push(RingParams { n, m: n + 1 });
        radii.push(next);
    }
    let limit_radius = radii.last().unwrap() * tail_product(nmax as u32 + 1);
    Ok(NestedBodies {
        bodies,
        tags,
        radii,
        nmax,
        limit_radius,
    })
}

/// `Π_{n ≥ from} μ_n^{n+1} cos(π/n)`: summed in log form over two million
/// factors, with the `(1 + π²/2)/N` estimate for the remainder.
pub fn tail_product(from: u32) -> f64 {
    let stop = from as u64 + 2_000_000;
    let mut log_sum = 0.0f64;
    // smallest terms first
    for n in (from as u64..stop).rev() {
        let nf = n as f64;
        log_sum += (nf + 1.0) * (-1.0 / (nf * nf * nf)).ln_1p() + (PI / nf).cos().ln();
    }
    let rest = -(1.0 + PI * PI / 2.0) / stop as f64;
    (log_sum + rest).exp()
}

impl NestedBodies {
    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    /// Index of the last built body.
    pub fn last_index(&self) -> usize {
        self.bodies.len() - 1
    }

    pub fn body(&self, k: usize) -> &ConvexBody {
        &self.bodies[k]
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    pub fn tag(&self, k: usize) -> RingParams {
        self.tags[k]
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    /// The limit radius `r = lim R_n`; the minimizer disk of the field.
    pub fn limit_radius(&self) -> f64 {
        self.limit_radius
    }

    /// The limit disk `∩ T_k`.
    pub fn limit_body(&self) -> ConvexBody {
        ConvexBody::disk(self.limit_radius)
    }

    /// `R_n` for `3 ≤ n ≤ nmax + 1`.
    pub fn generation_radius(&self, n: u32) -> Option<f64> {
        (n >= 3).then(|| self.radii.get(n as usize - 3).copied()).flatten()
    }

    /// Index of the first body of generation `n`, i.e. of stage `(n, 1)`.
    pub fn generation_start(&self, n: u32) -> Option<usize> {
        if n < 3 || n as usize > self.nmax {
            return None;
        }
        Some(1 + (3..n).map(|j| j as usize + 1).sum::<usize>())
    }

    /// Index of the circle `C_{n−1,n}` that generation `n` starts from.
    fn generation_anchor(&self, n: u32) -> Option<usize> {
        self.generation_start(n).map(|s| s - 1)
    }

    /// `Dist(C_{n,1}, C_{n−1,n}) + Σ_{m=2}^{n+1} Dist(C_{n,m}, C_{n,m−1})`,
    /// measured with support-function Hausdorff distances.
    pub fn generation_dist_sum(&self, n: u32) -> Result<f64> {
        self.generation_dist_sum_with(n, DEFAULT_GRID, Exec::default())
    }

    pub fn generation_dist_sum_with(&self, n: u32, grid: usize, exec: Exec) -> Result<f64> {
        let start = self.generation_anchor(n).ok_or(Error::Range {
            index: n as usize,
            max: self.nmax,
        })?;
        let end = start + n as usize + 1;
        let dists = exec.map(end - start, |i| {
            hausdorff_dist_with(
                &self.bodies[start + i],
                &self.bodies[start + i + 1],
                grid,
                Exec::Sequential,
            )
        });
        Ok(dists.iter().sum())
    }

    /// `Σ_{m=1}^{n+1} μ_n^{m−1} R_n (1 − μ_n cos(π/n))`.
    pub fn generation_sum_closed_form(&self, n: u32) -> Result<f64> {
        let big_r = self.generation_radius(n).ok_or(Error::Range {
            index: n as usize,
            max: self.nmax,
        })?;
        Ok(generation_sum_formula(n, big_r))
    }

    /// Closed-form `Dist(T_k, T_{k+1})` for consecutive bodies.
    pub fn step_distance_closed_form(&self, k: usize) -> Result<f64> {
        if k >= self.last_index() {
            return Err(Error::Range {
                index: k,
                max: self.last_index().saturating_sub(1),
            });
        }
        let next = self.tags[k + 1];
        let big_r = self.generation_radius(next.n).unwrap();
        let mu = next.mu();
        Ok(mu.powi(next.m as i32 - 1) * big_r * (1.0 - mu * (PI / next.n as f64).cos()))
    }
}

/// `Σ_{m=1}^{n+1} μ^{m−1} R (1 − μ cos(π/n))` in geometric-series form.
pub fn generation_sum_formula(n: u32, generation_radius: f64) -> f64 {
    let mu = shrink_factor(n);
    let gap = 1.0 - mu * (PI / n as f64).cos();
    generation_radius * gap * (1.0 - mu.powi(n as i32 + 1)) / (1.0 - mu)
}
