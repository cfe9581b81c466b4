//! Blow-up of u_ε around a point of S and numerical convergence of the
//! rescaled integrals F_k(ζ) = ε^{γ−m} ∫_S |x + εζ − y|^{−γ} dy to the flat
//! limit F_∞(ζ) = ∫_{T_xS} |ζ − η|^{−γ} dη.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{kernel_moment, DimensionPair};
use crate::submanifold::{Shape, Submanifold};
use crate::vector::{add_scaled, dot, norm};

/// ζ ↦ x + εζ, with T_{x∞}ℝ^n identified with ℝ^n.
#[derive(Debug, Clone, PartialEq)]
pub struct RescalingMap {
    pub x_infinity: Vec<f64>,
    pub x: Vec<f64>,
    pub epsilon: f64,
}

impl RescalingMap {
    pub fn new(x_infinity: Vec<f64>, x: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { x_infinity, x, epsilon })
    }

    pub fn centered(x: Vec<f64>, epsilon: f64) -> Result<Self> {
        Self::new(x.clone(), x, epsilon)
    }

    pub fn apply(&self, zeta: &[f64]) -> Vec<f64> {
        add_scaled(&self.x, self.epsilon, zeta)
    }
}

/// F_k(ζ) for the map's scale ε.
pub fn evaluate_f_k(s: &Submanifold, map: &RescalingMap, gamma: f64, zeta: &[f64], tolerance: f64) -> Result<f64> {
    let m = s.dims().m() as f64;
    match s.shape() {
        Shape::PointSet { points } => {
            // evaluated in rescaled coordinates so that x = p gives |ζ|^{−γ} exactly
            let mut sum = 0.0;
            for p in points {
                let r2: f64 = zeta
                    .iter()
                    .zip(p.iter().zip(&map.x))
                    .map(|(z, (pi, xi))| {
                        let d = z - (pi - xi) / map.epsilon;
                        d * d
                    })
                    .sum();
                if r2 == 0.0 {
                    return Err(Error::Singularity { distance: 0.0 });
                }
                sum += r2.powf(-0.5 * gamma);
            }
            Ok(sum)
        }
        _ => {
            let y = map.apply(zeta);
            let (k, _) = s.kernel_integral(&y, gamma, tolerance)?;
            Ok(map.epsilon.powf(gamma - m) * k)
        }
    }
}

/// F_∞ at normal distance `d` from T_{x∞}S: d^{−(γ−m)} ∫_{ℝ^m}(1+|η|²)^{−γ/2} dη.
pub fn evaluate_f_infinity(dims: DimensionPair, d: f64, gamma: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {d}")));
    }
    f_infinity_sq(dims, d * d, gamma)
}

fn f_infinity_sq(dims: DimensionPair, d2: f64, gamma: f64) -> Result<f64> {
    let m = dims.m();
    if gamma <= m as f64 {
        return Err(Error::Divergent(format!("F_inf needs gamma > m, got gamma = {gamma}, m = {m}")));
    }
    let moment = if m == 0 { 1.0 } else { kernel_moment(m, gamma)? };
    Ok(d2.powf(-0.5 * (gamma - m as f64)) * moment)
}

/// Test region {|ζ| ≤ β₁, dist(ζ, T_{x∞}S) ≥ β₂} and its sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceWindow {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub grid: Vec<Vec<f64>>,
}

fn tangent_residual(tangents: &[Vec<f64>], zeta: &[f64]) -> Vec<f64> {
    let mut v = zeta.to_vec();
    for t in tangents {
        let c = dot(&v, t);
        v = add_scaled(&v, -c, t);
    }
    v
}

impl ConvergenceWindow {
    /// A deterministic lattice of test points: tangent offsets on a uniform
    /// grid, combined with each normal axis direction (both signs) at
    /// `per_axis` normal distances in [β₂, β₁].
    pub fn lattice(s: &Submanifold, x_infinity: &[f64], beta1: f64, beta2: f64, gamma: f64, per_axis: usize) -> Result<Self> {
        if !(beta2 > 0.0 && beta1 > beta2) {
            return Err(Error::Domain(format!("need 0 < beta2 < beta1, got {beta2}, {beta1}")));
        }
        let per_axis = per_axis.max(2);
        let frame = s.normal_frame(x_infinity)?;
        let lin = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
        };
        let mut tangent_offsets: Vec<Vec<f64>> = vec![vec![0.0; x_infinity.len()]];
        for t in &frame.tangents {
            let mut next = Vec::new();
            for base in &tangent_offsets {
                for c in lin(-beta1, beta1, per_axis) {
                    next.push(add_scaled(base, c, t));
                }
            }
            tangent_offsets = next;
        }
        let mut grid = Vec::new();
        for nu in &frame.normals {
            for sign in [1.0, -1.0] {
                for d in lin(beta2, beta1, per_axis) {
                    for base in &tangent_offsets {
                        let z = add_scaled(base, sign * d, nu);
                        if norm(&z) <= beta1 {
                            grid.push(z);
                        }
                    }
                }
            }
        }
        let window = Self { beta1, beta2, gamma, grid };
        window.validate(s, x_infinity)?;
        Ok(window)
    }

    pub fn validate(&self, s: &Submanifold, x_infinity: &[f64]) -> Result<()> {
        let frame = s.normal_frame(x_infinity)?;
        for z in &self.grid {
            if norm(z) > self.beta1 * (1.0 + 1e-12) {
                return Err(Error::Domain(format!("grid point {z:?} has |ζ| > beta1 = {}", self.beta1)));
            }
            let d = norm(&tangent_residual(&frame.tangents, z));
            if d < self.beta2 * (1.0 - 1e-12) {
                return Err(Error::Domain(format!("grid point {z:?} is within beta2 = {} of the tangent plane", self.beta2)));
            }
        }
        if self.grid.is_empty() {
            return Err(Error::Domain("convergence window has no grid points".into()));
        }
        Ok(())
    }
}

/// Sup-norm deviations at one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDeviation {
    pub epsilon: f64,
    pub sup_c0: f64,
    pub sup_c1: f64,
    pub metric_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointValue {
    pub epsilon: f64,
    pub index: usize,
    pub zeta: Vec<f64>,
    pub f_k: f64,
    pub f_infinity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelDeviation>,
    pub points: Vec<PointValue>,
}

impl ConvergenceReport {
    pub fn sup_c0_strictly_decreasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].sup_c0 < w[0].sup_c0)
    }

    pub fn sup_c1_strictly_decreasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].sup_c1 < w[0].sup_c1)
    }

    /// Largest F_k over all points and scales.
    pub fn max_f_k(&self) -> f64 {
        self.points.iter().map(|p| p.f_k).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Deviation of F_k from F_∞ over the window at each ε (base point x = x∞).
/// C¹ deviations use forward differences with step β₂/20 along every axis.
pub fn convergence_report(
    s: &Submanifold,
    x_infinity: &[f64],
    window: &ConvergenceWindow,
    epsilons: &[f64],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    window.validate(s, x_infinity)?;
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("epsilons must be non-empty and strictly decreasing".into()));
    }
    let dims = s.dims();
    let tangents = s.normal_frame(x_infinity)?.tangents;
    let f_inf = |z: &[f64]| {
        let v = tangent_residual(&tangents, z);
        f_infinity_sq(dims, dot(&v, &v), window.gamma)
    };
    let h = window.beta2 / 20.0;
    let metric_power = dims.metric_exponent();
    let n = dims.n();

    let mut levels = Vec::new();
    let mut points = Vec::new();
    for &eps in epsilons {
        let map = RescalingMap::centered(x_infinity.to_vec(), eps)?;
        let per_point: Vec<Result<(f64, f64, f64, f64)>> = window
            .grid
            .par_iter()
            .map(|z| {
                let fk = evaluate_f_k(s, &map, window.gamma, z, tolerance)?;
                let fi = f_inf(z)?;
                let mut c1: f64 = 0.0;
                let mut zp = z.clone();
                for i in 0..n {
                    zp[i] = z[i] + h;
                    let dk = (evaluate_f_k(s, &map, window.gamma, &zp, tolerance)? - fk) / h;
                    let di = (f_inf(&zp)? - fi) / h;
                    zp[i] = z[i];
                    c1 = c1.max((dk - di).abs());
                }
                Ok((fk, fi, c1, ((1.0 + fk).powf(metric_power) - (1.0 + fi).powf(metric_power)).abs()))
            })
            .collect();
        let mut level = LevelDeviation { epsilon: eps, sup_c0: 0.0, sup_c1: 0.0, metric_dev: 0.0 };
        for (index, (z, r)) in window.grid.iter().zip(per_point).enumerate() {
            let (fk, fi, c1, md) = r?;
            level.sup_c0 = level.sup_c0.max((fk - fi).abs());
            level.sup_c1 = level.sup_c1.max(c1);
            level.metric_dev = level.metric_dev.max(md);
            points.push(PointValue { epsilon: eps, index, zeta: z.clone(), f_k: fk, f_infinity: fi });
        }
        levels.push(level);
    }
    Ok(ConvergenceReport { levels, points })
}
