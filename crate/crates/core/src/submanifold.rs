//! Catalog of compact submanifolds S ⊂ ℝ^n: finite point sets, round
//! spheres and products of round spheres, with quadrature, nearest-point
//! projection, normal frames and tubular hypersurfaces.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::DimensionPair;
use crate::quadrature::{integrate, Panel};
use crate::special::sphere_area;
use crate::vector::{add_scaled, dist, dot, norm, unit};

/// One round-sphere factor S^k(r) living in coordinates `offset..offset + k + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereBlock {
    pub dim: usize,
    pub radius: f64,
    pub offset: usize,
}

impl SphereBlock {
    fn coords(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.dim + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    PointSet { points: Vec<Vec<f64>> },
    /// Sphere of radius `radius` in the first m + 1 coordinates.
    RoundSphere { radius: f64 },
    /// Product of spheres in consecutive coordinate blocks.
    ProductOfSpheres { blocks: Vec<SphereBlock> },
}

/// A compact embedded submanifold from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Submanifold {
    dims: DimensionPair,
    shape: Shape,
    reach: f64,
}

/// Result of a nearest-point query.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Set when several points of S are equally close (medial axis).
    pub ambiguous: bool,
}

/// Orthonormal frame adapted to T_xS ⊕ N_xS.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    pub base: Vec<f64>,
    pub tangents: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
}

impl NormalFrame {
    /// Largest deviation of the Gram matrix of all frame vectors from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let all: Vec<&Vec<f64>> = self.tangents.iter().chain(&self.normals).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureNode {
    /// A point of S carrying this node's weight.
    pub point: Vec<f64>,
    /// Mean of the symmetry orbit the node stands for; used for kernel gradients.
    pub mean_point: Vec<f64>,
    pub weight: f64,
}

/// Discretization of ∫_S · dy resolved for a target point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<QuadratureNode>,
    pub target_point: Option<Vec<f64>>,
}

impl QuadratureRule {
    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Returns `(∫ |x−y|^{−s} dy, ∇_x of it)` under this rule.
    pub fn kernel(&self, x: &[f64], s: f64) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for node in &self.nodes {
            let r2: f64 = x.iter().zip(&node.point).map(|(a, b)| (a - b) * (a - b)).sum();
            let k = r2.powf(-0.5 * s);
            value += node.weight * k;
            let g = -s * node.weight * k / r2;
            for (gi, (xi, yi)) in grad.iter_mut().zip(x.iter().zip(&node.mean_point)) {
                *gi += g * (xi - yi);
            }
        }
        (value, grad)
    }
}

/// Tubular hypersurface Tub(S, a).
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSurface {
    base: Submanifold,
    radius: f64,
}

impl TubeSurface {
    pub fn new(base: Submanifold, radius: f64) -> Result<Self> {
        base.check_radius(radius)?;
        Ok(Self { base, radius })
    }

    pub fn base(&self) -> &Submanifold {
        &self.base
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

const MAX_PANELS: usize = 4000;
const ON_S_TOL: f64 = 1e-9;

impl Submanifold {
    pub fn point_set(dims: DimensionPair, points: Vec<Vec<f64>>) -> Result<Self> {
        if dims.m() != 0 {
            return Err(Error::Domain("a point set has dimension m = 0".into()));
        }
        if points.is_empty() {
            return Err(Error::Domain("point set is empty".into()));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dims.n()) {
            return Err(Error::Domain(format!("point {p:?} is not in R^{}", dims.n())));
        }
        let mut min_sep = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                min_sep = min_sep.min(dist(p, q));
            }
        }
        if min_sep == 0.0 {
            return Err(Error::Domain("points must be pairwise distinct".into()));
        }
        Ok(Self { dims, shape: Shape::PointSet { points }, reach: 0.5 * min_sep })
    }

    pub fn round_sphere(dims: DimensionPair, radius: f64) -> Result<Self> {
        if dims.m() == 0 {
            return Err(Error::Domain("a round sphere needs m >= 1; use a point set for m = 0".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self { dims, shape: Shape::RoundSphere { radius }, reach: radius })
    }

    /// Product of spheres S^{k_1}(r_1) × … placed in consecutive coordinate blocks.
    pub fn product_of_spheres(dims: DimensionPair, factors: &[(usize, f64)]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("product needs at least one factor".into()));
        }
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(factors.len());
        for &(dim, radius) in factors {
            if dim == 0 {
                return Err(Error::Domain("product factors must have dimension >= 1".into()));
            }
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::Domain(format!("factor radius must be positive, got {radius}")));
            }
            blocks.push(SphereBlock { dim, radius, offset });
            offset += dim + 1;
        }
        let m: usize = blocks.iter().map(|b| b.dim).sum();
        if m != dims.m() {
            return Err(Error::Domain(format!("factor dimensions sum to {m}, expected m = {}", dims.m())));
        }
        if offset > dims.n() {
            return Err(Error::Domain(format!("factors need {offset} coordinates, only {} available", dims.n())));
        }
        let reach = blocks.iter().map(|b| b.radius).fold(f64::INFINITY, f64::min);
        Ok(Self { dims, shape: Shape::ProductOfSpheres { blocks }, reach })
    }

    pub fn dims(&self) -> DimensionPair {
        self.dims
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// Sphere factors; empty for point sets.
    pub fn blocks(&self) -> Vec<SphereBlock> {
        match &self.shape {
            Shape::PointSet { .. } => Vec::new(),
            Shape::RoundSphere { radius } => vec![SphereBlock { dim: self.dims.m(), radius: *radius, offset: 0 }],
            Shape::ProductOfSpheres { blocks } => blocks.clone(),
        }
    }

    fn block_span(&self) -> usize {
        self.blocks().iter().map(|b| b.dim + 1).sum()
    }

    /// H^m(S); counting measure for point sets.
    pub fn total_measure(&self) -> f64 {
        match &self.shape {
            Shape::PointSet { points } => points.len() as f64,
            _ => self.blocks().iter().map(|b| sphere_area(b.dim) * b.radius.powi(b.dim as i32)).product(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.shape {
            Shape::PointSet { points } => {
                let mut d: f64 = 0.0;
                for (i, p) in points.iter().enumerate() {
                    for q in &points[i + 1..] {
                        d = d.max(dist(p, q));
                    }
                }
                d
            }
            _ => 2.0 * self.blocks().iter().map(|b| b.radius * b.radius).sum::<f64>().sqrt(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match &self.shape {
            Shape::PointSet { points } => {
                let mut c = vec![0.0; self.dims.n()];
                for p in points {
                    for (ci, pi) in c.iter_mut().zip(p) {
                        *ci += pi / points.len() as f64;
                    }
                }
                c
            }
            _ => vec![0.0; self.dims.n()],
        }
    }

    /// Number of connected components (points, or 1 for sphere products).
    pub fn component_count(&self) -> usize {
        match &self.shape {
            Shape::PointSet { points } => points.len(),
            _ => 1,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dims.n() {
            Ok(())
        } else {
            Err(Error::Domain(format!("vector has length {}, expected {}", x.len(), self.dims.n())))
        }
    }

    pub(crate) fn check_radius(&self, a: f64) -> Result<()> {
        if !(a > 0.0) {
            return Err(Error::Domain(format!("tube radius must be positive, got {a}")));
        }
        if a >= self.reach {
            return Err(Error::ReachExceeded { radius: a, reach: self.reach });
        }
        Ok(())
    }

    /// Closest point of S to `x`. On the medial axis the tie is broken
    /// deterministically and `ambiguous` is set.
    pub fn nearest_point(&self, x: &[f64]) -> Result<Projection> {
        self.check_dim(x)?;
        match &self.shape {
            Shape::PointSet { points } => {
                let mut best: Option<(usize, f64)> = None;
                let mut ambiguous = false;
                for (i, p) in points.iter().enumerate() {
                    let d = dist(x, p);
                    match best {
                        None => best = Some((i, d)),
                        Some((j, bd)) => {
                            if d < bd {
                                best = Some((i, d));
                                ambiguous = false;
                            } else if d == bd {
                                ambiguous = true;
                                if lex_less(p, &points[j]) {
                                    best = Some((i, d));
                                }
                            }
                        }
                    }
                }
                let (i, d) = best.expect("point set is non-empty");
                Ok(Projection { point: points[i].clone(), distance: d, ambiguous })
            }
            _ => {
                let mut y = vec![0.0; self.dims.n()];
                let mut ambiguous = false;
                for b in self.blocks() {
                    let xb = &x[b.coords()];
                    let r = norm(xb);
                    if r == 0.0 {
                        ambiguous = true;
                        y[b.offset] = b.radius;
                    } else {
                        for (yi, xi) in y[b.coords()].iter_mut().zip(xb) {
                            *yi = b.radius * xi / r;
                        }
                    }
                }
                let distance = dist(x, &y);
                Ok(Projection { point: y, distance, ambiguous })
            }
        }
    }

    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.nearest_point(x)?.distance)
    }

    fn check_on_s(&self, x: &[f64]) -> Result<()> {
        let d = self.distance(x)?;
        let scale = 1.0 + norm(x);
        if d > ON_S_TOL * scale {
            return Err(Error::Domain(format!("point is at distance {d:e} from S")));
        }
        Ok(())
    }

    /// Orthonormal frame at `x ∈ S`. For sphere factors the first normals
    /// are the outward radial directions of each factor, followed by the
    /// coordinate axes not used by any factor.
    pub fn normal_frame(&self, x: &[f64]) -> Result<NormalFrame> {
        self.check_dim(x)?;
        self.check_on_s(x)?;
        let n = self.dims.n();
        let mut tangents = Vec::new();
        let mut normals = Vec::new();
        for b in self.blocks() {
            let xb = &x[b.coords()];
            let r = norm(xb);
            let mut radial = vec![0.0; n];
            for (k, i) in b.coords().enumerate() {
                radial[i] = xb[k] / r;
            }
            // drop the coordinate axis most aligned with the radial direction
            let drop = b
                .coords()
                .max_by(|&i, &j| radial[i].abs().total_cmp(&radial[j].abs()))
                .expect("block has coordinates");
            let mut basis = vec![radial.clone()];
            for i in b.coords().filter(|&i| i != drop) {
                let mut v = unit(n, i);
                for q in &basis {
                    let c = dot(&v, q);
                    v = add_scaled(&v, -c, q);
                }
                let l = norm(&v);
                let v: Vec<f64> = v.iter().map(|t| t / l).collect();
                basis.push(v.clone());
                tangents.push(v);
            }
            normals.push(radial);
        }
        for i in self.block_span()..n {
            normals.push(unit(n, i));
        }
        Ok(NormalFrame { base: x.to_vec(), tangents, normals })
    }

    fn check_unit_normal(&self, x: &[f64], omega: &[f64]) -> Result<()> {
        self.check_dim(omega)?;
        let l = norm(omega);
        if (l - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("normal vector has length {l}")));
        }
        let frame = self.normal_frame(x)?;
        if let Some(t) = frame.tangents.iter().find(|t| dot(t, omega).abs() > 1e-9) {
            return Err(Error::Domain(format!("vector is not normal to S (tangent component {:e})", dot(t, omega))));
        }
        Ok(())
    }

    /// The point x + aω of Tub(S, a).
    pub fn tube_point(&self, x: &[f64], omega: &[f64], a: f64) -> Result<Vec<f64>> {
        self.check_radius(a)?;
        self.check_unit_normal(x, omega)?;
        Ok(add_scaled(x, a, omega))
    }

    /// Quadrature rule for ∫_S f(|x−y|) dy resolving the kernel |x−y|^{−(n−2)}.
    pub fn sample_quadrature(&self, x: &[f64], tolerance: f64) -> Result<QuadratureRule> {
        self.sample_quadrature_with_exponent(x, self.dims.n() as f64 - 2.0, tolerance)
    }

    /// As [`Self::sample_quadrature`] for the kernel |x−y|^{−s}.
    pub fn sample_quadrature_with_exponent(&self, x: &[f64], s: f64, tolerance: f64) -> Result<QuadratureRule> {
        self.check_dim(x)?;
        let d = self.distance(x)?;
        if d == 0.0 {
            return Err(Error::Singularity { distance: 0.0 });
        }
        let nodes = match &self.shape {
            Shape::PointSet { points } => points
                .iter()
                .map(|p| QuadratureNode { point: p.clone(), mean_point: p.clone(), weight: 1.0 })
                .collect(),
            _ => {
                let geo = RingGeometry::new(self, x);
                let mut nodes = Vec::new();
                let mut alphas = Vec::new();
                geo.collect_nodes(0, geo.rest2, s, tolerance, 1.0, &mut alphas, &mut nodes)?;
                nodes
            }
        };
        Ok(QuadratureRule { nodes, target_point: Some(x.to_vec()) })
    }

    /// `(∫_S |x−y|^{−s} dy, gradient in x)` to relative accuracy `tolerance`.
    pub fn kernel_integral(&self, x: &[f64], s: f64, tolerance: f64) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x)?;
        match &self.shape {
            Shape::PointSet { points } => {
                let mut value = 0.0;
                let mut grad = vec![0.0; x.len()];
                for p in points {
                    let r2: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                    if r2 == 0.0 {
                        return Err(Error::Singularity { distance: 0.0 });
                    }
                    let k = r2.powf(-0.5 * s);
                    value += k;
                    for (g, (xi, pi)) in grad.iter_mut().zip(x.iter().zip(p)) {
                        *g -= s * k / r2 * (xi - pi);
                    }
                }
                Ok((value, grad))
            }
            Shape::RoundSphere { .. } => {
                let geo = RingGeometry::new(self, x);
                geo.single_block_integral(s, tolerance)
            }
            Shape::ProductOfSpheres { .. } => {
                let rule = self.sample_quadrature_with_exponent(x, s, tolerance)?;
                Ok(rule.kernel(x, s))
            }
        }
    }

    /// Mean curvature of Tub(S, a) at x + aω in the Euclidean metric, outward normal.
    pub fn euclid_tube_mean_curvature(&self, tube: &TubeSurface, x: &[f64], omega: &[f64]) -> Result<f64> {
        if tube.base() != self {
            return Err(Error::Domain("tube belongs to a different submanifold".into()));
        }
        self.check_unit_normal(x, omega)?;
        let a = tube.radius();
        let frame = self.normal_frame(x)?;
        Ok(self.tube_mean_curvature_in_frame(a, &frame, omega))
    }

    /// (n−m−1)/a + Σ_b k_b c_b / (r_b + a c_b), with c_b = ⟨ω, radial_b⟩.
    pub(crate) fn tube_mean_curvature_in_frame(&self, a: f64, frame: &NormalFrame, omega: &[f64]) -> f64 {
        let fiber = self.dims.fiber_dim() as f64;
        let mut h = fiber / a;
        for (b, radial) in self.blocks().iter().zip(&frame.normals) {
            let c = dot(omega, radial);
            h += b.dim as f64 * c / (b.radius + a * c);
        }
        h
    }

    /// OBJ mesh of a 2-parameter slice of Tub(S, a), projected to the first
    /// three coordinates. Vertices are written with 17 significant digits.
    pub fn export_tube_obj(&self, a: f64, segments: usize, rings: usize) -> Result<String> {
        self.check_radius(a)?;
        if segments < 3 || rings < 2 {
            return Err(Error::Resolution("mesh needs at least 3 segments and 2 rings".into()));
        }
        let n = self.dims.n();
        let mut out = String::new();
        let _ = writeln!(out, "# tube radius {a:.16e}, n = {n}, m = {}", self.dims.m());
        let mut vertex_base = 0usize;
        let surfaces: Vec<Box<dyn Fn(f64, f64) -> Vec<f64>>> = match &self.shape {
            Shape::PointSet { points } => points
                .iter()
                .map(|p| {
                    let p = p.clone();
                    Box::new(move |phi: f64, theta: f64| {
                        let mut v = p.clone();
                        v[0] += a * theta.cos();
                        v[1] += a * theta.sin() * phi.cos();
                        v[2] += a * theta.sin() * phi.sin();
                        v
                    }) as Box<dyn Fn(f64, f64) -> Vec<f64>>
                })
                .collect(),
            _ => {
                let blocks = self.blocks();
                let first = blocks[0];
                let span = self.block_span();
                // fibre direction complementary to every factor
                let off = if span < n { unit(n, span) } else { unit(n, blocks[1].offset + 1) };
                let mut rest_point = vec![0.0; n];
                for b in &blocks[1..] {
                    rest_point[b.offset] = b.radius;
                }
                vec![Box::new(move |t: f64, theta: f64| {
                    let mut radial = vec![0.0; n];
                    radial[first.offset] = t.cos();
                    radial[first.offset + 1] = t.sin();
                    let mut v = add_scaled(&rest_point, first.radius, &radial);
                    v = add_scaled(&v, a * theta.cos(), &radial);
                    add_scaled(&v, a * theta.sin(), &off)
                }) as Box<dyn Fn(f64, f64) -> Vec<f64>>]
            }
        };
        for surface in &surfaces {
            for j in 0..=rings {
                let theta = PI * j as f64 / rings as f64;
                for i in 0..segments {
                    let t = 2.0 * PI * i as f64 / segments as f64;
                    let v = surface(t, theta);
                    let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", v[0], v[1], v[2]);
                }
            }
            let idx = |i: usize, j: usize| vertex_base + j * segments + (i % segments) + 1;
            for j in 0..rings {
                for i in 0..segments {
                    let _ = writeln!(out, "f {} {} {}", idx(i, j), idx(i + 1, j), idx(i + 1, j + 1));
                    let _ = writeln!(out, "f {} {} {}", idx(i, j), idx(i + 1, j + 1), idx(i, j + 1));
                }
            }
            vertex_base += segments * (rings + 1);
        }
        Ok(out)
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    false
}

/// Reduction of the sphere-product integral to per-factor colatitudes
/// measured from the projection of the target point.
struct RingGeometry {
    x: Vec<f64>,
    blocks: Vec<SphereBlock>,
    /// |x_b| per factor
    rho: Vec<f64>,
    /// x̂_b embedded in ℝ^n (arbitrary axis when x_b = 0)
    axis: Vec<Vec<f64>>,
    /// a unit vector in the factor's plane orthogonal to `axis`
    side: Vec<Vec<f64>>,
    /// squared norm of the coordinates outside every factor
    rest2: f64,
}

impl RingGeometry {
    fn new(s: &Submanifold, x: &[f64]) -> Self {
        let n = x.len();
        let blocks = s.blocks();
        let mut rho = Vec::new();
        let mut axis = Vec::new();
        let mut side = Vec::new();
        for b in &blocks {
            let xb = &x[b.coords()];
            let r = norm(xb);
            let mut ax = vec![0.0; n];
            if r > 0.0 {
                for (k, i) in b.coords().enumerate() {
                    ax[i] = xb[k] / r;
                }
            } else {
                ax[b.offset] = 1.0;
            }
            let pick = b
                .coords()
                .min_by(|&i, &j| ax[i].abs().total_cmp(&ax[j].abs()))
                .expect("non-empty block");
            let mut sd = unit(n, pick);
            let c = dot(&sd, &ax);
            sd = add_scaled(&sd, -c, &ax);
            let l = norm(&sd);
            sd.iter_mut().for_each(|v| *v /= l);
            rho.push(r);
            axis.push(ax);
            side.push(sd);
        }
        let span: usize = blocks.iter().map(|b| b.dim + 1).sum();
        let rest2 = x[span..].iter().map(|v| v * v).sum();
        Self { x: x.to_vec(), blocks, rho, axis, side, rest2 }
    }

    /// Squared distance contribution of factor `i` at colatitude α,
    /// written as (ρ − r)² + 4 r ρ sin²(α/2) to avoid cancellation.
    fn block_term(&self, i: usize, alpha: f64) -> f64 {
        let r = self.blocks[i].radius;
        let rho = self.rho[i];
        let h = (0.5 * alpha).sin();
        (rho - r) * (rho - r) + 4.0 * r * rho * h * h
    }

    fn measure(&self, i: usize, alpha: f64) -> f64 {
        let b = self.blocks[i];
        sphere_area(b.dim - 1) * b.radius.powi(b.dim as i32) * alpha.sin().powi(b.dim as i32 - 1)
    }

    /// Minimal squared distance over factors `from..`, given the fixed part.
    fn min_d2(&self, from: usize, fixed: f64) -> f64 {
        fixed + (from..self.blocks.len()).map(|i| self.block_term(i, 0.0)).sum::<f64>()
    }

    /// Breakpoints on [0, π] graded toward α = 0, where the kernel peaks.
    fn breaks(&self, i: usize, d2_min: f64) -> Vec<f64> {
        let r = self.blocks[i].radius;
        let rho = self.rho[i];
        let mut breaks = vec![0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI];
        if rho > 0.0 {
            let width = d2_min.sqrt() / (r * rho).sqrt();
            let mut b = 0.5 * width;
            while b < 0.25 * PI {
                breaks.push(b);
                b *= 2.0;
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        breaks
    }

    /// Kernel integral over factors `from..` with the fixed squared distance `d2`.
    /// Components: ∫K_s, ∫K_{s+1}.
    fn inner(&self, from: usize, d2: f64, s: f64, tol: f64) -> Result<[f64; 2]> {
        if from == self.blocks.len() {
            return Ok([d2.powf(-0.5 * s), d2.powf(-0.5 * (s + 1.0))]);
        }
        let breaks = self.breaks(from, self.min_d2(from, d2));
        let mut failure = None;
        let r = integrate(
            |alpha| {
                let w = self.measure(from, alpha);
                match self.inner(from + 1, d2 + self.block_term(from, alpha), s, tol) {
                    Ok(v) => [w * v[0], w * v[1]],
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0, 0.0]
                    }
                }
            },
            &breaks,
            tol,
            0.0,
            MAX_PANELS,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r.value)
    }

    fn panels(&self, from: usize, d2: f64, s: f64, tol: f64) -> Result<Vec<Panel>> {
        let breaks = self.breaks(from, self.min_d2(from, d2));
        let mut failure = None;
        let r = integrate(
            |alpha| {
                let w = self.measure(from, alpha);
                match self.inner(from + 1, d2 + self.block_term(from, alpha), s, tol) {
                    Ok(v) => [w * v[0], w * v[1]],
                    Err(e) => {
                        failure.get_or_insert(e);
                        [0.0, 0.0]
                    }
                }
            },
            &breaks,
            tol,
            0.0,
            MAX_PANELS,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(r.panels)
    }

    #[allow(clippy::too_many_arguments)]
    fn collect_nodes(
        &self,
        level: usize,
        d2: f64,
        s: f64,
        tol: f64,
        weight: f64,
        alphas: &mut Vec<f64>,
        out: &mut Vec<QuadratureNode>,
    ) -> Result<()> {
        if level == self.blocks.len() {
            let n = self.x.len();
            let mut point = vec![0.0; n];
            let mut mean_point = vec![0.0; n];
            for (i, &alpha) in alphas.iter().enumerate() {
                let r = self.blocks[i].radius;
                point = add_scaled(&point, r * alpha.cos(), &self.axis[i]);
                point = add_scaled(&point, r * alpha.sin(), &self.side[i]);
                mean_point = add_scaled(&mean_point, r * alpha.cos(), &self.axis[i]);
            }
            out.push(QuadratureNode { point, mean_point, weight });
            return Ok(());
        }
        for panel in self.panels(level, d2, s, tol)? {
            for (alpha, w) in panel.nodes() {
                alphas.push(alpha);
                let next = d2 + self.block_term(level, alpha);
                self.collect_nodes(level + 1, next, s, tol, weight * w * self.measure(level, alpha), alphas, out)?;
                alphas.pop();
            }
        }
        Ok(())
    }

    /// Fast path for one factor: value and gradient without materializing nodes.
    fn single_block_integral(&self, s: f64, tol: f64) -> Result<(f64, Vec<f64>)> {
        let r = self.blocks[0].radius;
        let rho = self.rho[0];
        let d2_min = self.min_d2(0, self.rest2);
        if d2_min == 0.0 {
            return Err(Error::Singularity { distance: 0.0 });
        }
        let breaks = self.breaks(0, d2_min);
        let rest2 = self.rest2;
        // refine on ∫K_s and ∫K_{s+1}; accumulate the gradient moments alongside
        let res = integrate(
            |alpha| {
                let d2 = rest2 + self.block_term(0, alpha);
                let w = self.measure(0, alpha);
                let ks = d2.powf(-0.5 * s);
                let ks2 = ks / d2;
                [w * ks, w * ks / d2.sqrt(), w * ks2, w * (rho - r * alpha.cos()) * ks2]
            },
            &breaks,
            tol,
            0.0,
            MAX_PANELS,
        )?;
        let [value, _, rest_moment, axial_moment] = res.value;
        let span = self.blocks[0].dim + 1;
        let mut grad = vec![0.0; self.x.len()];
        for (i, g) in grad.iter_mut().enumerate() {
            if i >= span {
                *g = -s * self.x[i] * rest_moment;
            } else {
                *g = -s * self.axis[0][i] * axial_moment;
            }
        }
        Ok((value, grad))
    }
}
