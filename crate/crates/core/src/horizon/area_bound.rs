//! Outer-minimizing sanity check: inside a coordinate ball N, the horizon
//! should have no more g-area than ∂N.

use crate::error::{Error, Result};
use crate::field::ConformalFactor;
use crate::special::sphere_area;
use crate::vector::{add_scaled, dist};

use super::functional::{local_element, node_states, Exponents};
use super::grid::{Resolution, SymmetryMode, UnsGrid};
use super::solver::HorizonGraph;
use crate::model::DimensionPair;
use crate::submanifold::Submanifold;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaBoundCheck {
    pub horizon_area_inside: f64,
    pub boundary_area: f64,
    pub holds: bool,
}

/// g-area of the coordinate sphere |x − center| = radius.
pub fn coordinate_sphere_area<F: ConformalFactor>(field: &F, center: &[f64], radius: f64) -> Result<f64> {
    let n = field.dims().n();
    let (az, col) = match n {
        3 | 4 => (48, 24),
        5 | 6 => (16, 8),
        _ => return Err(Error::Resolution(format!("coordinate sphere quadrature supports n <= 6, got {n}"))),
    };
    let dims = DimensionPair::new(n, 0)?;
    let s = Submanifold::point_set(dims, vec![center.to_vec()])?;
    let grid = UnsGrid::build(&s, Resolution::new(1, az, col), SymmetryMode::Full)?;
    let p = 2.0 * (n as f64 - 1.0) / (n as f64 - 2.0);
    let mut total = 0.0;
    for node in grid.nodes() {
        let u = field.value_and_grad(&add_scaled(center, radius, &node.omega))?.0;
        total += node.weight * u.powf(p);
    }
    Ok(total * radius.powi(n as i32 - 1) * (sphere_area(n - 1) / grid.fiber_weight_of_base(0)))
}

/// Compare the g-area of the part of `horizon` inside the ball B(center, radius)
/// with the g-area of the boundary sphere.
pub fn local_area_bound_check<F: ConformalFactor>(field: &F, horizon: &HorizonGraph, center: &[f64], radius: f64) -> Result<AreaBoundCheck> {
    if !(radius > 0.0 && radius.is_finite()) || center.len() != field.dims().n() {
        return Err(Error::Domain("degenerate probe ball".into()));
    }
    let grid = &horizon.grid;
    let s = grid.submanifold();
    if s.distance(center)? <= radius {
        return Err(Error::Domain("probe ball meets the submanifold".into()));
    }
    let states = node_states(field, grid, &horizon.psi)?;
    let ex = Exponents::of(grid);
    let mut inside = 0.0;
    for (j, node) in grid.nodes().iter().enumerate() {
        if dist(&node.point(horizon.psi[j]), center) < radius {
            inside += local_element(&ex, grid, j, &horizon.psi, states[j], |_, _| {});
        }
    }
    let boundary_area = coordinate_sphere_area(field, center, radius)?;
    Ok(AreaBoundCheck { horizon_area_inside: inside, boundary_area, holds: inside <= boundary_area })
}
