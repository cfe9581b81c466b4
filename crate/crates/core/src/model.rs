//! Flat-cylinder model: the constants C_{n,m}, D_{n,m}, the critical radius
//! â and the mean curvature of the model cylinders.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::special::gamma;

/// Ambient dimension `n` and submanifold dimension `m`, with `n - m >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DimensionPair {
    n: usize,
    m: usize,
}

impl DimensionPair {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        let fail = |reason: &str| Error::Dimension { n, m, reason: reason.to_string() };
        if n < 3 {
            return Err(fail("ambient dimension must be at least 3"));
        }
        if n < m + 3 {
            return Err(fail("codimension n - m must be at least 3"));
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// γ = n − m − 2, the decay exponent of the model conformal factor.
    pub fn gamma(&self) -> usize {
        self.n - self.m - 2
    }

    /// Dimension of the normal fibres' unit spheres, n − m − 1.
    pub fn fiber_dim(&self) -> usize {
        self.n - self.m - 1
    }

    /// Exponent 4/(n−2) of the conformal metric u^{4/(n−2)} δ.
    pub fn metric_exponent(&self) -> f64 {
        4.0 / (self.n as f64 - 2.0)
    }
}

/// Cached model constants for one dimension pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderModel {
    pub dims: DimensionPair,
    pub c: f64,
    pub d: f64,
    pub a_hat: f64,
}

impl CylinderModel {
    pub fn new(dims: DimensionPair) -> Result<Self> {
        Ok(Self { dims, c: compute_c(dims), d: compute_d(dims)?, a_hat: compute_a_hat(dims)? })
    }

    pub fn u_infinity(&self, a: f64) -> Result<f64> {
        u_infinity_on_cylinder(self.dims, a)
    }

    pub fn mean_curvature(&self, a: f64) -> Result<f64> {
        cylinder_mean_curvature(self.dims, a)
    }
}

/// C_{n,m} = (n−2)(n−m−1) / (2(n−1)(n−m−2)).
pub fn compute_c(dims: DimensionPair) -> f64 {
    let n = dims.n as f64;
    let m = dims.m as f64;
    (n - 2.0) * (n - m - 1.0) / (2.0 * (n - 1.0) * (n - m - 2.0))
}

/// ∫_{ℝ^m} (1 + |η|²)^{−s/2} dη = π^{m/2} Γ((s−m)/2) / Γ(s/2), finite for s > m.
pub fn kernel_moment(m: usize, s: f64) -> Result<f64> {
    if s <= m as f64 {
        return Err(Error::Divergent(format!(
            "∫_R^{m} (1+|η|²)^(-{s}/2) dη diverges for exponent {s} <= {m}"
        )));
    }
    let m = m as f64;
    Ok(PI.powf(m / 2.0) * gamma((s - m) / 2.0) / gamma(s / 2.0))
}

/// D_{n,m} = ∫_{ℝ^m} (1 + |η|²)^{−(n−2)/2} dη.
pub fn compute_d(dims: DimensionPair) -> Result<f64> {
    kernel_moment(dims.m, dims.n as f64 - 2.0)
}

/// â = (D (1 − C) / C)^{1/(n−m−2)}.
pub fn compute_a_hat(dims: DimensionPair) -> Result<f64> {
    let c = compute_c(dims);
    let d = compute_d(dims)?;
    let base = d * (1.0 - c) / c;
    let gamma = dims.gamma();
    Ok(match gamma {
        1 => base,
        2 => base.sqrt(),
        _ => base.powf(1.0 / gamma as f64),
    })
}

fn check_radius(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("cylinder radius must be positive and finite, got {a}")))
    }
}

/// u_∞ on the model cylinder of radius `a`: 1 + a^{−(n−m−2)} D_{n,m}.
pub fn u_infinity_on_cylinder(dims: DimensionPair, a: f64) -> Result<f64> {
    check_radius(a)?;
    Ok(1.0 + a.powi(-(dims.gamma() as i32)) * compute_d(dims)?)
}

/// Mean curvature of the radius-`a` cylinder around ℝ^m in u_∞^{4/(n−2)} δ.
pub fn cylinder_mean_curvature(dims: DimensionPair, a: f64) -> Result<f64> {
    check_radius(a)?;
    let n = dims.n as f64;
    let g = dims.gamma() as f64;
    let q = a.powi(-(dims.gamma() as i32)) * compute_d(dims)?;
    let ratio = q / (1.0 + q);
    Ok((1.0 + q).powf(-2.0 / (n - 2.0)) / a * ((g + 1.0) - 2.0 * g * (n - 1.0) / (n - 2.0) * ratio))
}
