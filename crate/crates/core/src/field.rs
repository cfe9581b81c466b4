//! The conformal factor u_ε(x) = 1 + ε^{n−m−2} ∫_S |x−y|^{−(n−2)} dy and the
//! geometric quantities of g_ε = u_ε^{4/(n−2)} δ derived from it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{compute_d, DimensionPair};
use crate::submanifold::Submanifold;
use crate::vector::{add_scaled, dot, norm, scale, sub, unit};

/// Default relative quadrature tolerance on u − 1.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Anything that can play the role of a positive conformal factor u with
/// metric u^{4/(n−2)} δ.
pub trait ConformalFactor: Sync {
    fn dims(&self) -> DimensionPair;

    /// `(u(x), ∇u(x))`.
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
}

/// Mean curvature in u^{4/(n−2)} δ of a hypersurface with Euclidean mean
/// curvature `h_euclid` and Euclidean unit normal `nu` at a point where u
/// and ∇u take the given values.
pub fn conformal_law(dims: DimensionPair, u: f64, grad_u: &[f64], h_euclid: f64, nu: &[f64]) -> f64 {
    let n = dims.n() as f64;
    u.powf(-2.0 / (n - 2.0)) * (h_euclid + 2.0 * (n - 1.0) / (n - 2.0) * dot(grad_u, nu) / u)
}

/// u ≡ 1.
#[derive(Debug, Clone, Copy)]
pub struct FlatFactor(pub DimensionPair);

impl ConformalFactor for FlatFactor {
    fn dims(&self) -> DimensionPair {
        self.0
    }

    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((1.0, vec![0.0; x.len()]))
    }
}

/// Blow-up model u_∞(ζ) = 1 + D_{n,m} dist(ζ, P)^{−(n−m−2)} around an affine
/// m-plane P through `origin` spanned by orthonormal `tangents`.
#[derive(Debug, Clone)]
pub struct ModelCylinderFactor {
    dims: DimensionPair,
    origin: Vec<f64>,
    tangents: Vec<Vec<f64>>,
    d: f64,
}

impl ModelCylinderFactor {
    pub fn new(dims: DimensionPair, origin: Vec<f64>, tangents: Vec<Vec<f64>>) -> Result<Self> {
        if tangents.len() != dims.m() {
            return Err(Error::Domain(format!("need {} tangent vectors, got {}", dims.m(), tangents.len())));
        }
        Ok(Self { dims, origin, tangents, d: compute_d(dims)? })
    }

    /// Component of ζ − origin orthogonal to the plane.
    pub fn normal_offset(&self, x: &[f64]) -> Vec<f64> {
        let mut v = sub(x, &self.origin);
        for t in &self.tangents {
            let c = dot(&v, t);
            v = add_scaled(&v, -c, t);
        }
        v
    }
}

impl ConformalFactor for ModelCylinderFactor {
    fn dims(&self) -> DimensionPair {
        self.dims
    }

    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.normal_offset(x);
        let d = norm(&v);
        if d == 0.0 {
            return Err(Error::Singularity { distance: 0.0 });
        }
        let g = self.dims.gamma() as f64;
        let q = self.d * d.powf(-g);
        Ok((1.0 + q, scale(&v, -g * q / (d * d))))
    }
}

/// u_ε for a catalog submanifold.
#[derive(Debug, Clone)]
pub struct ConformalField {
    submanifold: Submanifold,
    epsilon: f64,
    tolerance: f64,
    prefactor: f64,
}

/// Large-|x| fit of u − 1 ≈ A |x|^{−p}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticExpansion {
    pub coefficient: f64,
    pub exponent: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// ε^{n−m−2} H^m(S), the coefficient predicted by the expansion.
    pub expected_coefficient: f64,
}

impl ConformalField {
    pub fn new(submanifold: Submanifold, epsilon: f64) -> Result<Self> {
        Self::with_tolerance(submanifold, epsilon, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(submanifold: Submanifold, epsilon: f64, tolerance: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::Domain(format!("quadrature tolerance must lie in (0, 1), got {tolerance}")));
        }
        let prefactor = epsilon.powi(submanifold.dims().gamma() as i32);
        Ok(Self { submanifold, epsilon, tolerance, prefactor })
    }

    pub fn submanifold(&self) -> &Submanifold {
        &self.submanifold
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn kernel(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let s = self.submanifold.dims().n() as f64 - 2.0;
        self.submanifold.kernel_integral(x, s, self.tolerance)
    }

    pub fn evaluate_u(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 + self.prefactor * self.kernel(x)?.0)
    }

    /// ∇u by differentiating the kernel under the integral.
    pub fn evaluate_grad_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(scale(&self.kernel(x)?.1, self.prefactor))
    }

    /// Evaluate `(u, ∇u)` at many points in parallel, preserving order.
    pub fn evaluate_batch(&self, points: &[Vec<f64>]) -> Vec<Result<(f64, Vec<f64>)>> {
        points.par_iter().map(|x| self.value_and_grad(x)).collect()
    }

    /// H_{g_ε} = u^{−2/(n−2)} (H_δ + 2 (n−1)/(n−2) ∂_ν ln u).
    pub fn conformal_mean_curvature(&self, x: &[f64], h_euclid: f64, nu: &[f64]) -> Result<f64> {
        let (u, g) = self.value_and_grad(x)?;
        Ok(conformal_law(self.submanifold.dims(), u, &g, h_euclid, nu))
    }

    /// Normalized central-difference Laplacian of u; see [`laplacian_residual`].
    /// `step` defaults to 10⁻³ dist(x, S).
    pub fn harmonicity_residual(&self, x: &[f64], step: Option<f64>) -> Result<f64> {
        let d = self.submanifold.distance(x)?;
        let h = step.unwrap_or(1e-3 * d);
        let n = x.len() as f64;
        if !(h > 0.0) || h * n.sqrt() >= d {
            return Err(Error::Domain(format!("difference step {h} reaches S (distance {d})")));
        }
        laplacian_residual(|y| self.evaluate_u(y), x, h)
    }

    /// Least-squares fit of log(u − 1) against log r, averaging u − 1 over
    /// the 2n coordinate directions around the centroid of S.
    pub fn fit_asymptotic_coefficient(&self, radii: &[f64]) -> Result<AsymptoticExpansion> {
        let s = &self.submanifold;
        let diam = s.diameter();
        if radii.len() < 2 {
            return Err(Error::Domain("need at least two radii".into()));
        }
        if let Some(r) = radii.iter().find(|&&r| !(r > 0.0) || r < 10.0 * diam) {
            return Err(Error::Domain(format!("radius {r} is below 10 x diameter ({diam})")));
        }
        let n = s.dims().n();
        let c = s.centroid();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &r in radii {
            let mut mean = 0.0;
            for i in 0..n {
                for sign in [1.0, -1.0] {
                    let x = add_scaled(&c, sign * r, &unit(n, i));
                    mean += self.evaluate_u(&x)? - 1.0;
                }
            }
            mean /= 2.0 * n as f64;
            xs.push(r.ln());
            ys.push(mean.ln());
        }
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let residual =
            (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / k).sqrt();
        Ok(AsymptoticExpansion {
            coefficient: intercept.exp(),
            exponent: -slope,
            residual,
            expected_coefficient: self.prefactor * s.total_measure(),
        })
    }
}

impl ConformalFactor for ConformalField {
    fn dims(&self) -> DimensionPair {
        self.submanifold.dims()
    }

    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (k, g) = self.kernel(x)?;
        Ok((1.0 + self.prefactor * k, scale(&g, self.prefactor)))
    }
}

/// |Σ_i δ²_i f| / max_i |δ²_i f| with central second differences of step `h`
/// along each axis. Zero when every second difference vanishes.
pub fn laplacian_residual<F>(f: F, x: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let f0 = f(x)?;
    let mut sum = 0.0;
    let mut largest: f64 = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = f(&y)?;
        y[i] = x[i] - h;
        let fm = f(&y)?;
        y[i] = x[i];
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        sum += d2;
        largest = largest.max(d2.abs());
    }
    if largest == 0.0 {
        return Ok(0.0);
    }
    Ok(sum.abs() / largest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn point_field(eps: f64) -> ConformalField {
        let dims = DimensionPair::new(3, 0).unwrap();
        ConformalField::new(Submanifold::point_set(dims, vec![vec![0.0; 3]]).unwrap(), eps).unwrap()
    }

    fn circle_field(eps: f64, tol: f64) -> ConformalField {
        let dims = DimensionPair::new(4, 1).unwrap();
        ConformalField::with_tolerance(Submanifold::round_sphere(dims, 1.0).unwrap(), eps, tol).unwrap()
    }

    #[test]
    fn point_source_value() {
        let f = point_field(0.1);
        assert_relative_eq!(f.evaluate_u(&[0.1, 0.0, 0.0]).unwrap(), 2.0, max_relative = 1e-15);
        assert!(f.evaluate_u(&[1e9, 0.0, 0.0]).unwrap() - 1.0 < 1e-9);
        assert!(matches!(f.evaluate_u(&[0.0; 3]), Err(Error::Singularity { .. })));
    }

    #[test]
    fn point_source_gradient_is_radial() {
        let f = point_field(0.3);
        let x = [0.0, 0.4, 0.0];
        let g = f.evaluate_grad_u(&x).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
        assert_relative_eq!(g[1], -0.3 / (0.4 * 0.4), max_relative = 1e-14);
    }

    #[test]
    fn symmetric_pair_gradient_vanishes_on_bisector() {
        let dims = DimensionPair::new(3, 0).unwrap();
        let s = Submanifold::point_set(dims, vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let f = ConformalField::new(s, 0.2).unwrap();
        let g = f.evaluate_grad_u(&[0.0, 0.3, -0.7]).unwrap();
        assert!(g[0].abs() < 1e-16);
    }

    #[test]
    fn circle_value_against_closed_form() {
        let eps = 0.05;
        let f = circle_field(eps, 1e-9);
        let a = 0.08;
        let x = [(1.0 + a * 0.3) * 0.6, (1.0 + a * 0.3) * 0.8, a * 0.7f64.sqrt(), a * 0.2f64.sqrt()];
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let z2 = x[2] * x[2] + x[3] * x[3];
        let exact = 1.0 + eps * 2.0 * PI / (((rho - 1.0).powi(2) + z2) * ((rho + 1.0).powi(2) + z2)).sqrt();
        assert_relative_eq!(f.evaluate_u(&x).unwrap(), exact, max_relative = 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = circle_field(0.1, 1e-13);
        let x = [0.7, 0.9, 0.1, -0.2];
        let g = f.evaluate_grad_u(&x).unwrap();
        for i in 0..4 {
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (f.evaluate_u(&xp).unwrap() - f.evaluate_u(&xm).unwrap()) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn conformal_law_identity_and_horizon() {
        let dims = DimensionPair::new(3, 0).unwrap();
        let flat = FlatFactor(dims);
        let (u, g) = flat.value_and_grad(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(conformal_law(dims, u, &g, 1.2345, &[1.0, 0.0, 0.0]), 1.2345);
        for eps in [0.01, 0.1, 1.0] {
            let f = point_field(eps);
            let x = [0.0, 0.0, eps];
            let h = f.conformal_mean_curvature(&x, 2.0 / eps, &[0.0, 0.0, 1.0]).unwrap();
            assert!(h.abs() < 1e-12, "eps {eps}: H = {h}");
        }
    }

    #[test]
    fn conformal_law_reproduces_model_cylinder() {
        let dims = DimensionPair::new(4, 1).unwrap();
        let model = ModelCylinderFactor::new(dims, vec![0.0; 4], vec![vec![0.0, 1.0, 0.0, 0.0]]).unwrap();
        for a in [0.3, 1.0, PI / 2.0, 4.0] {
            let nu = [0.6, 0.0, 0.0, 0.8];
            let x = scale(&nu, a);
            let (u, g) = model.value_and_grad(&x).unwrap();
            let h = conformal_law(dims, u, &g, 2.0 / a, &nu);
            assert_relative_eq!(h, crate::model::cylinder_mean_curvature(dims, a).unwrap(), max_relative = 1e-13, epsilon = 1e-14);
        }
    }

    #[test]
    fn harmonicity() {
        let f = point_field(0.1);
        let x = [0.3, -0.2, 0.5];
        assert!(f.harmonicity_residual(&x, None).unwrap() < 1e-5);
        let c = circle_field(0.05, 1e-12);
        assert!(c.harmonicity_residual(&[0.9, 0.3, 0.2, 0.1], None).unwrap() < 1e-4);
        assert!(f.harmonicity_residual(&x, Some(1.0)).is_err());
        let affine = |y: &[f64]| Ok(3.0 + 2.0 * y[0] - 5.0 * y[1] + y[2]);
        assert_eq!(laplacian_residual(affine, &[0.5, 0.25, -1.0], 1.0 / 1024.0).unwrap(), 0.0);
    }

    #[test]
    fn asymptotic_fits() {
        let f = point_field(0.1);
        let fit = f.fit_asymptotic_coefficient(&[10.0, 20.0, 40.0]).unwrap();
        assert_relative_eq!(fit.coefficient, 0.1, max_relative = 1e-12);
        assert_relative_eq!(fit.exponent, 1.0, max_relative = 1e-12);
        let c = circle_field(0.05, 1e-10);
        let fit = c.fit_asymptotic_coefficient(&[40.0, 80.0, 160.0, 320.0]).unwrap();
        assert!((fit.coefficient / (0.05 * 2.0 * PI) - 1.0).abs() < 0.01);
        assert!((fit.exponent - 2.0).abs() < 0.05);
        assert!(c.fit_asymptotic_coefficient(&[1.0, 2.0]).is_err());
    }
}
