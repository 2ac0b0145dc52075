//! Partial Hausdorff sums of the nested bodies and per-generation gradient
//! maxima.
//!
//! If the field satisfied a KŁ inequality with desingularization `φ`, the
//! sublevel map `λ ↦ [f ≤ λ]` would be `φ`-Lipschitz and the sums
//! `S_K = Σ_{k<K} Dist(T_k, T_{k+1})` would stay below `φ(λ_0) − φ(λ_∞)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{hausdorff_dist_with, UnitDirection, DEFAULT_GRID};

use super::field::{CexField, Location};
use super::rings::{generation_ratio, generation_sum_formula, NestedBodies};

#[derive(Clone, Debug, Serialize)]
pub struct WitnessRow {
    pub k: usize,
    pub n: u32,
    pub m: u32,
    pub dist: f64,
    pub partial_sum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationRow {
    pub n: u32,
    pub measured: f64,
    pub closed_form: f64,
    /// `π² r / (2n)`.
    pub harmonic: f64,
    /// Sum over generations `3..=n`.
    pub partial_sum: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessTable {
    pub rows: Vec<WitnessRow>,
    pub generations: Vec<GenerationRow>,
    pub limit_radius: f64,
    pub first_generation_sum: f64,
    /// Least-squares `c` in `S_N ≈ c (H_N − H_2)` over complete generations.
    pub fitted_c: f64,
    /// `π² r / 2`.
    pub reference_c: f64,
    /// First body count whose partial sum exceeds three first-generation sums.
    pub triple_at: Option<usize>,
}

/// `H_n − H_2`.
pub fn harmonic_excess(n: u32) -> f64 {
    (3..=n).map(|j| 1.0 / j as f64).sum()
}

/// No-intercept least-squares slope of `ys` against `xs`.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let den: f64 = xs.iter().map(|x| x * x).sum();
    num / den
}

/// Partial sums `S_1..S_count` over the first `count` consecutive pairs.
pub fn kl_failure_witness(bodies: &NestedBodies, count: usize) -> Result<WitnessTable> {
    kl_failure_witness_with(bodies, count, DEFAULT_GRID, Exec::default())
}

pub fn kl_failure_witness_with(bodies: &NestedBodies, count: usize, grid: usize, exec: Exec) -> Result<WitnessTable> {
    if count == 0 || count > bodies.last_index() {
        return Err(Error::Range {
            index: count,
            max: bodies.last_index(),
        });
    }
    let dists = exec.map(count, |k| {
        hausdorff_dist_with(bodies.body(k), bodies.body(k + 1), grid, Exec::Sequential)
    });
    let mut rows = Vec::with_capacity(count);
    let mut sum = 0.0;
    for (k, d) in dists.iter().enumerate() {
        sum += d;
        let tag = bodies.tag(k + 1);
        rows.push(WitnessRow {
            k,
            n: tag.n,
            m: tag.m,
            dist: *d,
            partial_sum: sum,
        });
    }
    let r = bodies.limit_radius();
    let mut generations = Vec::new();
    let mut gen_total = 0.0;
    let mut n = 3u32;
    while let Some(start) = bodies.generation_start(n) {
        // pairs start−1 → start … start+n−1 → start+n
        let end = start + n as usize;
        if end > count {
            break;
        }
        let measured: f64 = dists[start - 1..end].iter().sum();
        gen_total += measured;
        generations.push(GenerationRow {
            n,
            measured,
            closed_form: bodies.generation_sum_closed_form(n)?,
            harmonic: PI * PI * r / (2.0 * n as f64),
            partial_sum: gen_total,
        });
        n += 1;
    }
    let first_generation_sum = bodies.generation_sum_closed_form(3)?;
    let (hs, ss): (Vec<f64>, Vec<f64>) = generations
        .iter()
        .map(|g| (harmonic_excess(g.n), g.partial_sum))
        .unzip();
    let fitted_c = if hs.is_empty() {
        f64::NAN
    } else {
        fit_through_origin(&hs, &ss)
    };
    let triple_at = rows
        .iter()
        .position(|row| row.partial_sum > 3.0 * first_generation_sum)
        .map(|i| i + 1);
    Ok(WitnessTable {
        rows,
        generations,
        limit_radius: r,
        first_generation_sum,
        fitted_c,
        reference_c: PI * PI * r / 2.0,
        triple_at,
    })
}

/// Closed-form generation sums for `n = 3..=nmax`, continuing the radius
/// recursion past the range where bodies are built.
pub fn generation_sums_closed_form(nmax: u32) -> Vec<(u32, f64)> {
    let mut big_r = 1.0;
    let mut out = Vec::with_capacity(nmax.saturating_sub(2) as usize);
    for n in 3..=nmax {
        out.push((n, generation_sum_formula(n, big_r)));
        big_r *= generation_ratio(n);
    }
    out
}

/// `ln max ‖∂⁰f‖` over the brackets entering generation `n`, sampled at
/// midpoint levels along `samples` directions.
pub fn generation_gradient_max(field: &CexField, n: u32, samples: usize) -> Result<f64> {
    let bodies = field.bodies();
    let start = bodies.generation_start(n).ok_or(Error::Range {
        index: n as usize,
        max: bodies.nmax(),
    })?;
    let levels = field.levels();
    let mut best = f64::NEG_INFINITY;
    for k in start - 1..start + n as usize {
        let ln_mid = super::levels::log_add(levels.ln_excess(k), levels.ln_excess(k + 1)) - 2f64.ln();
        for u in UnitDirection::grid(samples) {
            let x = field.level_point_ln(ln_mid, &u);
            let ev = field.evaluate(&x);
            if matches!(ev.location, Location::Bracket(_)) {
                best = best.max(ev.ln_grad);
            }
        }
    }
    Ok(best)
}
