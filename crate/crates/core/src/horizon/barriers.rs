//! Mean-convex and mean-concave tubes and coordinate spheres.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ConformalFactor;
use crate::submanifold::{Shape, Submanifold};
use crate::vector::{add_scaled, dist, dot, norm, scale, unit};

use super::functional::{conformal_law_residual, node_states};
use super::grid::UnsGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRange {
    pub a_min: f64,
    pub a_max: f64,
    pub samples: usize,
}

impl ScanRange {
    /// Log-spaced radii from `a_min` to `a_max`.
    pub fn radii(&self) -> Result<Vec<f64>> {
        if !(self.a_min > 0.0 && self.a_max > self.a_min && self.samples >= 2) {
            return Err(Error::Domain(format!("bad scan range {:?}", self)));
        }
        let ratio = (self.a_max / self.a_min).ln();
        Ok((0..self.samples)
            .map(|i| self.a_min * (ratio * i as f64 / (self.samples - 1) as f64).exp())
            .collect())
    }
}

/// min and max of the g-mean curvature over the tube of radius `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub a: f64,
    pub min_h: f64,
    pub max_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    pub epsilon: f64,
    /// Tubes of radius ≤ c_inner ε are strictly mean-concave (H < 0).
    pub c_inner: f64,
    /// Tubes of radius in [c_outer ε, r_outer] are strictly mean-convex.
    pub c_outer: f64,
    pub r_outer: f64,
    /// Coordinate spheres about the centroid of radius ≥ r_end are mean-convex.
    pub r_end: f64,
    pub rows: Vec<ScanRow>,
    pub sphere_rows: Vec<ScanRow>,
}

impl BarrierReport {
    pub fn window(&self) -> (f64, f64) {
        (self.c_inner * self.epsilon, self.c_outer * self.epsilon)
    }
}

pub fn scan_tubes<F: ConformalFactor>(field: &F, grid: &UnsGrid, radii: &[f64]) -> Result<Vec<ScanRow>> {
    radii
        .iter()
        .map(|&a| {
            let psi = vec![a; grid.len()];
            let states = node_states(field, grid, &psi)?;
            let h = conformal_law_residual(field, grid, &psi, &states);
            let (min_h, max_h) = h.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
            Ok(ScanRow { a, min_h, max_h })
        })
        .collect()
}

/// Directions ±e_i and (±e_i ± e_j)/√2.
fn sphere_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            out.push(scale(&unit(n, i), s));
        }
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let v = add_scaled(&scale(&unit(n, i), si), sj, &unit(n, j));
                out.push(scale(&v, std::f64::consts::FRAC_1_SQRT_2));
            }
        }
    }
    out
}

/// g-mean curvature of coordinate spheres |x − center| = ρ.
pub fn scan_spheres<F: ConformalFactor>(field: &F, center: &[f64], radii: &[f64]) -> Result<Vec<ScanRow>> {
    let n = field.dims().n();
    let nf = n as f64;
    let p = 2.0 * (nf - 1.0) / (nf - 2.0);
    let dirs = sphere_directions(n);
    radii
        .par_iter()
        .map(|&rho| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for d in &dirs {
                let (u, g) = field.value_and_grad(&add_scaled(center, rho, d))?;
                let h = u.powf(-2.0 / (nf - 2.0)) * ((nf - 1.0) / rho + p * dot(&g, d) / u);
                lo = lo.min(h);
                hi = hi.max(h);
            }
            Ok(ScanRow { a: rho, min_h: lo, max_h: hi })
        })
        .collect()
}

/// Locate the barrier constants from a scan of constant-radius tubes over
/// `range` (in absolute radius) and of coordinate spheres about the centroid.
pub fn scan_barriers<F: ConformalFactor>(field: &F, grid: &UnsGrid, epsilon: f64, range: ScanRange) -> Result<BarrierReport> {
    let s = grid.submanifold();
    if range.a_max >= s.reach() {
        return Err(Error::ReachExceeded { radius: range.a_max, reach: s.reach() });
    }
    let rows = scan_tubes(field, grid, &range.radii()?)?;
    let inner_end = rows.iter().position(|r| r.max_h >= 0.0).unwrap_or(rows.len());
    if inner_end == 0 {
        return Err(Error::BarrierNotFound(format!(
            "tube of radius {:.6e} is not mean-concave; lower a_min",
            rows[0].a
        )));
    }
    if inner_end == rows.len() {
        return Err(Error::BarrierNotFound("no mean-convex tube in the scanned range".into()));
    }
    let c_inner = rows[inner_end - 1].a / epsilon;
    let outer_start = rows[inner_end..]
        .iter()
        .position(|r| r.min_h > 0.0)
        .map(|i| i + inner_end)
        .ok_or_else(|| Error::BarrierNotFound("mean curvature never becomes positive on every tube".into()))?;
    let c_outer = rows[outer_start].a / epsilon;
    let outer_end = rows[outer_start..].iter().position(|r| r.min_h <= 0.0).map(|i| i + outer_start).unwrap_or(rows.len());
    let r_outer = rows[outer_end - 1].a;

    let center = s.centroid();
    let extent = extent(s, &center);
    let rho_min = extent + rows[outer_start].a;
    let rho_max = 100.0 * (extent + rows[outer_start].a).max(1.0);
    let sphere_rows = scan_spheres(field, &center, &ScanRange { a_min: rho_min, a_max: rho_max, samples: 60 }.radii()?)?;
    let tail = sphere_rows.iter().rposition(|r| r.min_h <= 0.0);
    let r_end = match tail {
        None => sphere_rows[0].a,
        Some(i) if i + 1 < sphere_rows.len() => sphere_rows[i + 1].a,
        Some(_) => return Err(Error::BarrierNotFound("coordinate spheres are not mean-convex in the scanned range".into())),
    };
    Ok(BarrierReport { epsilon, c_inner, c_outer, r_outer, r_end, rows, sphere_rows })
}

/// Largest distance from `center` to a point of S.
fn extent(s: &Submanifold, center: &[f64]) -> f64 {
    match s.shape() {
        Shape::PointSet { points } => points.iter().map(|p| dist(p, center)).fold(0.0, f64::max),
        _ => {
            let r2: f64 = s.blocks().iter().map(|b| b.radius * b.radius).sum();
            r2.sqrt() + norm(center)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ConformalField;
    use crate::horizon::grid::{Resolution, SymmetryMode};
    use crate::model::{compute_a_hat, DimensionPair};
    use crate::submanifold::Submanifold;

    #[test]
    fn schwarzschild_barriers_bracket_the_horizon() {
        let s = Submanifold::point_set(DimensionPair::new(3, 0).unwrap(), vec![vec![0.0; 3]]).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(1, 8, 8), SymmetryMode::Full).unwrap();
        let eps = 0.1;
        let field = ConformalField::new(s, eps).unwrap();
        let rep = scan_barriers(&field, &g, eps, ScanRange { a_min: 0.005, a_max: 2.0, samples: 101 }).unwrap();
        assert!(rep.c_inner < 1.0 && rep.c_outer > 1.0);
        assert!(rep.c_outer / rep.c_inner < 1.2);
        assert!((rep.r_outer - 2.0).abs() < 1e-12);
        let last = rep.sphere_rows.last().unwrap();
        assert!(last.min_h > 0.0);
    }

    #[test]
    fn circle_barrier_signs() {
        let dims = DimensionPair::new(4, 1).unwrap();
        let s = Submanifold::round_sphere(dims, 1.0).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(1, 1, 32), SymmetryMode::Reduced1d).unwrap();
        let eps = 0.05;
        let field = ConformalField::new(s, eps).unwrap();
        let a_hat = compute_a_hat(dims).unwrap();
        let rep = scan_barriers(&field, &g, eps, ScanRange { a_min: a_hat * eps / 20.0, a_max: 0.95, samples: 200 }).unwrap();
        assert!(rep.c_inner < a_hat && a_hat < rep.c_outer);
        let at = |c: f64| scan_tubes(&field, &g, &[c * eps]).unwrap()[0];
        assert!(at(rep.c_inner).max_h < 0.0);
        assert!(at(rep.c_outer).min_h > 0.0);
    }

    #[test]
    fn fails_without_sign_change() {
        let s = Submanifold::point_set(DimensionPair::new(3, 0).unwrap(), vec![vec![0.0; 3]]).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(1, 8, 8), SymmetryMode::Full).unwrap();
        let field = ConformalField::new(s, 0.1).unwrap();
        let r = scan_barriers(&field, &g, 0.1, ScanRange { a_min: 0.2, a_max: 1.0, samples: 10 });
        assert!(matches!(r, Err(Error::BarrierNotFound(_))));
    }
}
