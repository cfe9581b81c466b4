//! Structured grids on the unit normal bundle UNS.
//!
//! A node is a pair (base point x ∈ S, unit normal ω ∈ UN_xS). Fibre
//! coordinates are hyperspherical angles (θ₁, …, θ_{k−1}, φ) on S^k with
//! k = n − m − 1, taken with respect to a parallel normal frame, so the
//! tube metric is diagonal in these coordinates.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::sin_power_integral;
use crate::special::sphere_area;
use crate::submanifold::{Shape, Submanifold};
use crate::vector::{add_scaled, unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    Full,
    /// ψ depends only on the angle between ω and the outward radial direction.
    Reduced1d,
}

/// Node counts. `azimuth` and extra colatitudes are ignored in reduced mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub base: usize,
    pub azimuth: usize,
    pub colatitude: usize,
}

impl Resolution {
    pub fn new(base: usize, azimuth: usize, colatitude: usize) -> Self {
        Self { base, azimuth, colatitude }
    }
}

/// How a neighbour difference enters |∇ψ|² in the tube metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StencilKind {
    /// Fibre angle with unit-sphere scale factor `scale`; metric ψ² scale².
    Fiber { scale: f64 },
    /// Base angle on a circle of radius `scale`; metric (scale (1 + ψκ))².
    Base { scale: f64, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub kind: StencilKind,
    /// (neighbour node, coordinate spacing)
    pub neighbors: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub base_index: usize,
    pub fiber_index: usize,
    pub component: usize,
    pub base_point: Vec<f64>,
    pub omega: Vec<f64>,
    /// Quadrature weight of the node on UNS (base measure × unit fibre measure).
    pub weight: f64,
    /// Horizontal stretch factors (κ, multiplicity): J(ψ) = ψ^k Π (1 + ψκ)^mult.
    pub stretch: Vec<(f64, f64)>,
    pub stencils: Vec<Stencil>,
    /// Unit fibre coordinates ξ with ω = Σ ξ_i f_i.
    pub fiber_coords: Vec<f64>,
}

impl GridNode {
    /// Tube area density relative to the UNS measure at normal distance `psi`.
    pub fn jacobian(&self, fiber_dim: usize, psi: f64) -> f64 {
        let mut j = psi.powi(fiber_dim as i32);
        for &(kappa, mult) in &self.stretch {
            j *= (1.0 + psi * kappa).powf(mult);
        }
        j
    }

    /// d/dψ ln J(ψ), which equals the Euclidean mean curvature of the tube at this node.
    pub fn log_jacobian_derivative(&self, fiber_dim: usize, psi: f64) -> f64 {
        let mut d = fiber_dim as f64 / psi;
        for &(kappa, mult) in &self.stretch {
            d += mult * kappa / (1.0 + psi * kappa);
        }
        d
    }

    pub fn point(&self, psi: f64) -> Vec<f64> {
        add_scaled(&self.base_point, psi, &self.omega)
    }
}

/// Discretization of UNS.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsGrid {
    submanifold: Submanifold,
    mode: SymmetryMode,
    resolution: Resolution,
    nodes: Vec<GridNode>,
    base_count: usize,
    fiber_count: usize,
}

struct FiberNode {
    xi: Vec<f64>,
    weight: f64,
    /// per coordinate: (scale factor, index offsets handled by caller)
    scales: Vec<f64>,
    multi_index: Vec<usize>,
}

/// Product angular grid on S^k: k−1 colatitudes (midpoint nodes on [0, π])
/// and one periodic azimuth. Cell weights are exact sphere-area cells.
fn fiber_grid(k: usize, azimuth: usize, colatitude: usize) -> (Vec<FiberNode>, Vec<usize>) {
    let mut counts = vec![colatitude; k - 1];
    counts.push(azimuth);
    let dtheta = PI / colatitude as f64;
    let dphi = 2.0 * PI / azimuth as f64;
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = vec![0; k];
        let mut rem = flat;
        for d in (0..k).rev() {
            idx[d] = rem % counts[d];
            rem /= counts[d];
        }
        let mut xi = vec![0.0; k + 1];
        let mut sin_prod = 1.0;
        let mut weight = 1.0;
        let mut scales = Vec::with_capacity(k);
        for d in 0..k - 1 {
            let theta = (idx[d] as f64 + 0.5) * dtheta;
            xi[d] = sin_prod * theta.cos();
            scales.push(sin_prod);
            weight *= sin_power_integral(k - 1 - d, theta - 0.5 * dtheta, theta + 0.5 * dtheta);
            sin_prod *= theta.sin();
        }
        let phi = (idx[k - 1] as f64 + 0.5) * dphi;
        xi[k - 1] = sin_prod * phi.cos();
        xi[k] = sin_prod * phi.sin();
        scales.push(sin_prod);
        weight *= dphi;
        out.push(FiberNode { xi, weight, scales, multi_index: idx });
    }
    (out, counts)
}

fn flat_index(idx: &[usize], counts: &[usize]) -> usize {
    idx.iter().zip(counts).fold(0, |acc, (i, c)| acc * c + i)
}

/// Neighbour list along fibre coordinate `d` for a node with multi-index `idx`.
fn fiber_neighbors(idx: &[usize], counts: &[usize], d: usize, spacing: f64, periodic: bool) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let c = counts[d];
    for delta in [-1i64, 1] {
        let j = idx[d] as i64 + delta;
        let j = if periodic {
            j.rem_euclid(c as i64)
        } else if j < 0 || j >= c as i64 {
            continue;
        } else {
            j
        };
        let mut nb = idx.to_vec();
        nb[d] = j as usize;
        out.push((flat_index(&nb, counts), spacing));
    }
    out
}

impl UnsGrid {
    pub fn submanifold(&self) -> &Submanifold {
        &self.submanifold
    }

    pub fn mode(&self) -> SymmetryMode {
        self.mode
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn base_count(&self) -> usize {
        self.base_count
    }

    pub fn fiber_count(&self) -> usize {
        self.fiber_count
    }

    pub fn fiber_dim(&self) -> usize {
        self.submanifold.dims().fiber_dim()
    }

    pub fn component_count(&self) -> usize {
        self.nodes.iter().map(|n| n.component + 1).max().unwrap_or(0)
    }

    /// Node indices of each connected component, in order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.component_count()];
        for (i, n) in self.nodes.iter().enumerate() {
            out[n.component].push(i);
        }
        out
    }

    /// Σ of node weights per base node, i.e. base measure × |S^k|.
    pub fn fiber_weight_of_base(&self, base: usize) -> f64 {
        self.nodes.iter().filter(|n| n.base_index == base).map(|n| n.weight).sum()
    }

    pub fn build(s: &Submanifold, resolution: Resolution, mode: SymmetryMode) -> Result<Self> {
        let dims = s.dims();
        let n = dims.n();
        let k = dims.fiber_dim();
        let check = |count: usize, what: &str| {
            if count < 8 {
                Err(Error::Resolution(format!("{what} count {count} is below 8")))
            } else {
                Ok(())
            }
        };
        check(resolution.colatitude, "colatitude")?;
        match mode {
            SymmetryMode::Reduced1d => {
                let (base_point, normals, base_weight, stretch_mult, radius) = match s.shape() {
                    Shape::PointSet { points } if points.len() == 1 => {
                        let normals: Vec<Vec<f64>> = (0..n).map(|i| unit(n, i)).collect();
                        (points[0].clone(), normals, 1.0, 0.0, f64::INFINITY)
                    }
                    Shape::RoundSphere { radius } => {
                        let x = add_scaled(&vec![0.0; n], *radius, &unit(n, 0));
                        let frame = s.normal_frame(&x)?;
                        (x, frame.normals, s.total_measure(), dims.m() as f64, *radius)
                    }
                    _ => {
                        return Err(Error::Resolution(
                            "reduced_1d needs a single point or a single round sphere".into(),
                        ))
                    }
                };
                let count = resolution.colatitude;
                let dtheta = PI / count as f64;
                let shell = sphere_area(k - 1);
                let mut nodes = Vec::with_capacity(count);
                for j in 0..count {
                    let theta = (j as f64 + 0.5) * dtheta;
                    let omega = add_scaled(&vec![0.0; n], theta.cos(), &normals[0]);
                    let omega = add_scaled(&omega, theta.sin(), &normals[1]);
                    let weight = base_weight * shell * sin_power_integral(k - 1, theta - 0.5 * dtheta, theta + 0.5 * dtheta);
                    let stretch = if stretch_mult > 0.0 { vec![(theta.cos() / radius, stretch_mult)] } else { vec![] };
                    let neighbors = fiber_neighbors(&[j], &[count], 0, dtheta, false);
                    nodes.push(GridNode {
                        base_index: 0,
                        fiber_index: j,
                        component: 0,
                        base_point: base_point.clone(),
                        omega,
                        weight,
                        stretch,
                        stencils: vec![Stencil { kind: StencilKind::Fiber { scale: 1.0 }, neighbors }],
                        fiber_coords: vec![theta.cos(), theta.sin()],
                    });
                }
                Ok(Self { submanifold: s.clone(), mode, resolution, nodes, base_count: 1, fiber_count: count })
            }
            SymmetryMode::Full => {
                if k > 3 {
                    return Err(Error::Resolution(format!(
                        "full mode supports fibre dimension <= 3, got {k}; use reduced_1d where symmetric"
                    )));
                }
                check(resolution.azimuth, "azimuth")?;
                let (fibers, counts) = fiber_grid(k, resolution.azimuth, resolution.colatitude);
                let fcount = fibers.len();
                // (base point, parallel normal frame, base weight, horizontal data)
                struct Base {
                    point: Vec<f64>,
                    normals: Vec<Vec<f64>>,
                    weight: f64,
                    component: usize,
                    circle: Option<(f64, f64)>, // (radius, spacing)
                }
                let bases: Vec<Base> = match s.shape() {
                    Shape::PointSet { points } => points
                        .iter()
                        .enumerate()
                        .map(|(i, p)| Base {
                            point: p.clone(),
                            normals: (0..n).map(|j| unit(n, j)).collect(),
                            weight: 1.0,
                            component: i,
                            circle: None,
                        })
                        .collect(),
                    Shape::RoundSphere { radius } if dims.m() == 1 => {
                        check(resolution.base, "base")?;
                        let nb = resolution.base;
                        let dt = 2.0 * PI / nb as f64;
                        (0..nb)
                            .map(|b| {
                                let t = b as f64 * dt;
                                let mut x = vec![0.0; n];
                                x[0] = radius * t.cos();
                                x[1] = radius * t.sin();
                                let frame = s.normal_frame(&x)?;
                                Ok(Base { point: x, normals: frame.normals, weight: radius * dt, component: 0, circle: Some((*radius, dt)) })
                            })
                            .collect::<Result<_>>()?
                    }
                    _ => {
                        return Err(Error::Resolution(
                            "full mode supports point sets and circles (m = 1); use reduced_1d for round spheres".into(),
                        ))
                    }
                };
                let base_count = bases.len();
                let mut nodes = Vec::with_capacity(base_count * fcount);
                for (bi, base) in bases.iter().enumerate() {
                    for (fi, f) in fibers.iter().enumerate() {
                        let mut omega = vec![0.0; n];
                        for (c, v) in f.xi.iter().zip(&base.normals) {
                            omega = add_scaled(&omega, *c, v);
                        }
                        let offset = bi * fcount;
                        let mut stencils = Vec::new();
                        for d in 0..k {
                            let periodic = d == k - 1;
                            let spacing = if periodic { 2.0 * PI / counts[d] as f64 } else { PI / counts[d] as f64 };
                            let neighbors = fiber_neighbors(&f.multi_index, &counts, d, spacing, periodic)
                                .into_iter()
                                .map(|(j, h)| (offset + j, h))
                                .collect();
                            stencils.push(Stencil { kind: StencilKind::Fiber { scale: f.scales[d] }, neighbors });
                        }
                        let mut stretch = Vec::new();
                        if let Some((radius, dt)) = base.circle {
                            let kappa = f.xi[0] / radius;
                            stretch.push((kappa, 1.0));
                            let prev = (bi + base_count - 1) % base_count;
                            let next = (bi + 1) % base_count;
                            stencils.push(Stencil {
                                kind: StencilKind::Base { scale: radius, kappa },
                                neighbors: vec![(prev * fcount + fi, dt), (next * fcount + fi, dt)],
                            });
                        }
                        nodes.push(GridNode {
                            base_index: bi,
                            fiber_index: fi,
                            component: base.component,
                            base_point: base.point.clone(),
                            omega,
                            weight: base.weight * f.weight,
                            stretch,
                            stencils,
                            fiber_coords: f.xi.clone(),
                        });
                    }
                }
                Ok(Self { submanifold: s.clone(), mode, resolution, nodes, base_count, fiber_count: fcount })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DimensionPair;
    use crate::vector::{dot, norm};
    use approx::assert_relative_eq;

    fn point3() -> Submanifold {
        Submanifold::point_set(DimensionPair::new(3, 0).unwrap(), vec![vec![0.0; 3]]).unwrap()
    }

    #[test]
    fn lat_long_grid_on_s2() {
        let g = UnsGrid::build(&point3(), Resolution::new(1, 32, 16), SymmetryMode::Full).unwrap();
        assert_eq!(g.len(), 512);
        assert_relative_eq!(g.fiber_weight_of_base(0), 4.0 * PI, max_relative = 1e-14);
        for node in g.nodes() {
            assert_relative_eq!(norm(&node.omega), 1.0, max_relative = 1e-14);
            assert_eq!(node.stencils.len(), 2);
        }
    }

    #[test]
    fn reduced_circle_grid() {
        let s = Submanifold::round_sphere(DimensionPair::new(4, 1).unwrap(), 1.0).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(1, 1, 64), SymmetryMode::Reduced1d).unwrap();
        assert_eq!(g.len(), 64);
        let total: f64 = g.nodes().iter().map(|n| n.weight).sum();
        assert_relative_eq!(total, 2.0 * PI * 4.0 * PI, max_relative = 1e-13);
        let first = &g.nodes()[0];
        assert!(first.omega[0] > 0.99);
        assert_eq!(first.stencils[0].neighbors.len(), 1);
    }

    #[test]
    fn full_circle_grid_uses_parallel_frames() {
        let s = Submanifold::round_sphere(DimensionPair::new(4, 1).unwrap(), 1.0).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(8, 8, 8), SymmetryMode::Full).unwrap();
        assert_eq!(g.len(), 8 * 64);
        for node in g.nodes() {
            let frame = s.normal_frame(&node.base_point).unwrap();
            for t in &frame.tangents {
                assert!(dot(t, &node.omega).abs() < 1e-14);
            }
            assert_eq!(node.stencils.len(), 3);
        }
        assert_relative_eq!(g.fiber_weight_of_base(3), (2.0 * PI / 8.0) * 4.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn s3_fibres() {
        let s = Submanifold::point_set(DimensionPair::new(4, 0).unwrap(), vec![vec![0.0; 4]]).unwrap();
        let g = UnsGrid::build(&s, Resolution::new(1, 8, 8), SymmetryMode::Full).unwrap();
        assert_eq!(g.len(), 512);
        assert_relative_eq!(g.fiber_weight_of_base(0), 2.0 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn rejects_unsupported() {
        assert!(UnsGrid::build(&point3(), Resolution::new(1, 4, 16), SymmetryMode::Full).is_err());
        let s = Submanifold::point_set(DimensionPair::new(6, 0).unwrap(), vec![vec![0.0; 6]]).unwrap();
        assert!(matches!(UnsGrid::build(&s, Resolution::new(1, 8, 8), SymmetryMode::Full), Err(Error::Resolution(_))));
        let two = Submanifold::point_set(DimensionPair::new(3, 0).unwrap(), vec![vec![0.0; 3], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(UnsGrid::build(&two, Resolution::new(1, 8, 8), SymmetryMode::Reduced1d).is_err());
    }
}
