//! Discrete area of a normal graph over UNS and its gradient.
//!
//! For X = x + ψ(x, ω) ω the g-area is discretized as
//! A = Σ_j W_j u_j^p J_j (1 + Q_j)^{1/2}, p = 2(n−1)/(n−2), where J is the
//! tube density and Q_j the squared gradient of ψ in the tube metric
//! divided by ψ-dependent scale factors, built from one-sided neighbour
//! differences. The mean curvature residual is ∂A/∂ψ_i divided by the
//! g-area weight of the node and the g-length of a unit normal step.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ConformalFactor;
use crate::vector::dot;

use super::grid::{GridNode, StencilKind, UnsGrid};

/// u and ∂_ω u at a graph node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub u: f64,
    pub du: f64,
}

pub(crate) struct Exponents {
    pub p: f64,
    pub q: f64,
    pub k: usize,
}

impl Exponents {
    pub fn of(grid: &UnsGrid) -> Self {
        let n = grid.submanifold().dims().n() as f64;
        Self { p: 2.0 * (n - 1.0) / (n - 2.0), q: 2.0 * n / (n - 2.0), k: grid.fiber_dim() }
    }
}

pub(crate) fn node_state<F: ConformalFactor>(field: &F, node: &GridNode, psi: f64) -> Result<NodeState> {
    let (u, g) = field.value_and_grad(&node.point(psi))?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::Domain(format!("conformal factor {u} is not positive")));
    }
    Ok(NodeState { u, du: dot(&g, &node.omega) })
}

pub fn node_states<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64]) -> Result<Vec<NodeState>> {
    check_psi(grid, psi)?;
    grid.nodes().par_iter().zip(psi.par_iter()).map(|(node, &p)| node_state(field, node, p)).collect()
}

pub(crate) fn check_psi(grid: &UnsGrid, psi: &[f64]) -> Result<()> {
    if psi.len() != grid.len() {
        return Err(Error::Domain(format!("psi has {} entries for {} nodes", psi.len(), grid.len())));
    }
    let reach = grid.submanifold().reach();
    if let Some(bad) = psi.iter().find(|&&p| !(p > 0.0 && p < reach)) {
        return Err(Error::ReachExceeded { radius: *bad, reach });
    }
    Ok(())
}

/// Area element of node `j` and its partial derivatives with respect to the
/// ψ values it depends on, reported through `emit(index, derivative)`.
pub(crate) fn local_element(
    ex: &Exponents,
    grid: &UnsGrid,
    j: usize,
    psi: &[f64],
    state: NodeState,
    mut emit: impl FnMut(usize, f64),
) -> f64 {
    let node = &grid.nodes()[j];
    let pj = psi[j];
    let jac = node.jacobian(ex.k, pj);
    let phi = state.u.powf(ex.p) * jac;
    let dphi = phi * (ex.p * state.du / state.u + node.log_jacobian_derivative(ex.k, pj));
    let mut q = 0.0;
    let mut dq_self = 0.0;
    for st in &node.stencils {
        if st.neighbors.is_empty() {
            continue;
        }
        let (alpha, dalpha) = match st.kind {
            StencilKind::Fiber { scale } => {
                let a = 1.0 / (scale * scale * pj * pj);
                (a, -2.0 * a / pj)
            }
            StencilKind::Base { scale, kappa } => {
                let f = 1.0 + pj * kappa;
                let a = 1.0 / (scale * scale * f * f);
                (a, -2.0 * a * kappa / f)
            }
        };
        let c = st.neighbors.len() as f64;
        let mut s = 0.0;
        for &(nb, h) in &st.neighbors {
            let d = (psi[nb] - pj) / h;
            s += d * d / c;
        }
        q += alpha * s;
        dq_self += dalpha * s;
    }
    let root = (1.0 + q).sqrt();
    let w = node.weight;
    let half = w * phi / (2.0 * root);
    for st in &node.stencils {
        if st.neighbors.is_empty() {
            continue;
        }
        let alpha = match st.kind {
            StencilKind::Fiber { scale } => 1.0 / (scale * scale * pj * pj),
            StencilKind::Base { scale, kappa } => 1.0 / (scale * (1.0 + pj * kappa)).powi(2),
        };
        let c = st.neighbors.len() as f64;
        for &(nb, h) in &st.neighbors {
            let dq_nb = alpha * 2.0 * (psi[nb] - pj) / (h * h * c);
            emit(nb, half * dq_nb);
            dq_self -= dq_nb;
        }
    }
    emit(j, w * dphi * root + half * dq_self);
    w * phi * root
}

/// g-area weight times the g-length of a unit normal displacement.
pub(crate) fn residual_scale(ex: &Exponents, node: &GridNode, psi: f64, state: NodeState) -> f64 {
    node.weight * state.u.powf(ex.q) * node.jacobian(ex.k, psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEvaluation {
    pub area: f64,
    /// ∂A/∂ψ_i.
    pub gradient: Vec<f64>,
    /// Discrete g-mean curvature at each node.
    pub residual: Vec<f64>,
    pub states: Vec<NodeState>,
}

impl GraphEvaluation {
    pub fn sup_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub(crate) fn evaluate_with_states(grid: &UnsGrid, psi: &[f64], states: Vec<NodeState>) -> GraphEvaluation {
    let ex = Exponents::of(grid);
    let mut gradient = vec![0.0; grid.len()];
    let mut area = 0.0;
    for j in 0..grid.len() {
        area += local_element(&ex, grid, j, psi, states[j], |i, d| gradient[i] += d);
    }
    let residual = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| gradient[i] / residual_scale(&ex, node, psi[i], states[i]))
        .collect();
    GraphEvaluation { area, gradient, residual, states }
}

pub fn evaluate_graph<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64]) -> Result<GraphEvaluation> {
    let states = node_states(field, grid, psi)?;
    Ok(evaluate_with_states(grid, psi, states))
}

/// Discrete g-area of the normal graph ψ.
pub fn graph_area<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64]) -> Result<f64> {
    Ok(evaluate_graph(field, grid, psi)?.area)
}

/// Discrete g-mean curvature of the normal graph ψ at each node.
pub fn mean_curvature_residual<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64]) -> Result<Vec<f64>> {
    Ok(evaluate_graph(field, grid, psi)?.residual)
}

/// Mean curvature from the conformal law using the exact tube curvature at
/// each node. Agrees with the discrete residual when ψ is constant.
pub fn conformal_law_residual<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64], states: &[NodeState]) -> Vec<f64> {
    let ex = Exponents::of(grid);
    let n = field.dims().n() as f64;
    grid.nodes()
        .iter()
        .zip(psi)
        .zip(states)
        .map(|((node, &p), s)| s.u.powf(-2.0 / (n - 2.0)) * (node.log_jacobian_derivative(ex.k, p) + ex.p * s.du / s.u))
        .collect()
}

/// Largest |∇ψ| in the Euclidean metric of the tube at radius ψ.
pub fn max_slope(grid: &UnsGrid, psi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, node) in grid.nodes().iter().enumerate() {
        let pj = psi[j];
        let mut g2 = 0.0;
        for st in &node.stencils {
            if st.neighbors.is_empty() {
                continue;
            }
            let len = match st.kind {
                StencilKind::Fiber { scale } => scale * pj,
                StencilKind::Base { scale, kappa } => scale * (1.0 + pj * kappa),
            };
            let c = st.neighbors.len() as f64;
            let s: f64 = st.neighbors.iter().map(|&(nb, h)| ((psi[nb] - pj) / h).powi(2) / c).sum();
            g2 += s / (len * len);
        }
        worst = worst.max(g2.sqrt());
    }
    worst
}
