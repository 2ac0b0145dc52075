//! Selections through the `R`-valleys of successive levels.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Point;
use crate::report::{CheckReport, Witness};
use crate::zoo::ScalarField;

use super::level::level_slopes;

/// Allowed relative length change under grid refinement.
pub const STABILITY: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct Talweg {
    pub r: Vec<f64>,
    pub points: Vec<Point>,
    pub length: f64,
    /// Length on the grid with geometric midpoints inserted.
    pub refined_length: f64,
    pub report: CheckReport,
}

/// Polyline through the valleys `{‖∂⁰f‖ ≤ R·s(r)}` of each level of a
/// decreasing grid. The first point minimizes the slope on the top level;
/// each later point is the valley point nearest to its predecessor.
pub fn talweg_path(field: &dyn ScalarField, factor: f64, grid: &[f64], n: usize) -> Result<(Vec<Point>, f64)> {
    if !(factor > 1.0) {
        return Err(Error::InvalidArgument(format!("valley factor {factor} must exceed 1")));
    }
    let levels: Vec<_> = Exec::default()
        .map_slice(grid, |&r| level_slopes(field, r, n))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut path: Vec<Point> = Vec::with_capacity(grid.len());
    for ls in &levels {
        let cap = factor * ls.min_slope;
        let pick = match path.last() {
            None => Some(ls.argmin),
            Some(prev) => ls
                .points
                .iter()
                .zip(&ls.slopes)
                .filter(|(_, &s)| s <= cap)
                .map(|(p, _)| *p)
                .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm())),
        };
        path.push(pick.ok_or(Error::EmptyValley { level: ls.r })?);
    }
    let length = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    Ok((path, length))
}

/// Talweg plus a stability verdict: PASS iff the length is finite and
/// changes by less than 1% when geometric midpoints are added to the grid.
pub fn extract_talweg(field: &dyn ScalarField, factor: f64, grid: &[f64], n: usize) -> Result<Talweg> {
    let (points, length) = talweg_path(field, factor, grid, n)?;
    let mut fine = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        fine.push(w[0]);
        fine.push((w[0] * w[1]).sqrt());
    }
    fine.extend(grid.last());
    let (_, refined_length) = talweg_path(field, factor, &fine, n)?;
    let change = (refined_length - length).abs();
    let margin = if length.is_finite() && refined_length.is_finite() {
        STABILITY * length.max(f64::MIN_POSITIVE) - change
    } else {
        f64::NEG_INFINITY
    };
    let report = CheckReport::from_margin(
        "talweg",
        Witness {
            x: vec![length, refined_length],
            r: grid.last().copied().unwrap_or(f64::NAN),
            margin,
        },
        0.0,
    );
    Ok(Talweg {
        r: grid.to_vec(),
        points,
        length,
        refined_length,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::level::geometric_grid;
    use crate::zoo::{Power, Quad};

    #[test]
    fn power_talweg_is_radial() {
        let grid = geometric_grid(1.0, 20, 0.5).unwrap();
        let t = extract_talweg(&Power::new(2.0).unwrap(), 2.0, &grid, 256).unwrap();
        let want = 1.0 - grid.last().unwrap().sqrt();
        assert!((t.length - want).abs() <= 1e-9);
        assert!(t.report.passed());
    }

    #[test]
    fn slow_axis_talweg_meets_its_phi_bound() {
        let f = Quad::diag(1.0, 100.0).unwrap();
        let grid = geometric_grid(0.5, 16, 0.5).unwrap();
        let t = extract_talweg(&f, 1.1, &grid, 512).unwrap();
        for p in &t.points {
            assert!(p.y.abs() <= 0.05 * p.x.abs());
        }
        // φ(r) = √(2r/λ_min)
        let bound = (2.0 * grid[0]).sqrt() - (2.0 * grid.last().unwrap()).sqrt();
        assert!(t.length <= bound + 1e-6);
        assert!(t.report.passed());
    }

    #[test]
    fn factor_must_exceed_one() {
        assert!(talweg_path(&Power::new(2.0).unwrap(), 1.0, &[0.5, 0.25], 16).is_err());
    }
}
