//! Minimal normal graphs: area-decreasing flow followed by damped Newton.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ConformalFactor;
use crate::model::compute_a_hat;

use super::barriers::BarrierReport;
use super::functional::{
    check_psi, conformal_law_residual, evaluate_graph, local_element, node_state, Exponents, GraphEvaluation, NodeState,
};
use super::grid::{StencilKind, UnsGrid};
use super::linear::{dense_solve, gmres, SparseRows};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    /// ψ ≡ â ε.
    AHat,
    Constant(f64),
    Profile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on sup |H|; defaults to 1e-8 / ε.
    pub tolerance: Option<f64>,
    /// Flow runs until sup |H| falls below this; defaults to 1e-2 / ε.
    pub switch_threshold: Option<f64>,
    pub initial: InitialGuess,
    pub max_flow_steps: usize,
    pub max_newton_steps: usize,
    /// Components with at most this many nodes use a dense LU solve.
    pub dense_limit: usize,
    pub barriers: Option<BarrierReport>,
    /// Re-solve from ψ ≡ c_outer ε and record the largest difference.
    pub check_outer_initialization: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: None,
            switch_threshold: None,
            initial: InitialGuess::AHat,
            max_flow_steps: 400,
            max_newton_steps: 40,
            dense_limit: 600,
            barriers: None,
            check_outer_initialization: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Flow,
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub stage: Stage,
    pub area: f64,
    pub sup_residual: f64,
    pub min_psi: f64,
    pub max_psi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSummary {
    pub index: usize,
    pub nodes: usize,
    pub min_psi: f64,
    pub max_psi: f64,
    pub mean_psi: f64,
    pub sup_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonGraph {
    pub grid: UnsGrid,
    pub epsilon: f64,
    pub psi: Vec<f64>,
    pub residual: Vec<f64>,
    /// Conformal-law mean curvature with the exact tube curvature; equals
    /// `residual` where ψ is locally constant.
    pub conformal_residual: Vec<f64>,
    pub area: f64,
    pub tolerance: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
    /// sup over nodes of |∇_ω ψ| on the unit fibre sphere.
    pub fiber_slope: f64,
    pub outer_agreement: Option<f64>,
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// sup |∇_ω ψ| measured on the unit fibre sphere.
pub fn fiber_slope(grid: &UnsGrid, psi: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, node) in grid.nodes().iter().enumerate() {
        let mut g2 = 0.0;
        for st in &node.stencils {
            if let StencilKind::Fiber { scale } = st.kind {
                if st.neighbors.is_empty() {
                    continue;
                }
                let c = st.neighbors.len() as f64;
                let s: f64 = st.neighbors.iter().map(|&(nb, h)| ((psi[nb] - psi[j]) / h).powi(2) / c).sum();
                g2 += s / (scale * scale);
            }
        }
        worst = worst.max(g2.sqrt());
    }
    worst
}

impl HorizonGraph {
    pub fn sup_residual(&self) -> f64 {
        sup_abs(&self.residual)
    }

    pub fn components(&self) -> Vec<ComponentSummary> {
        self.grid
            .components()
            .into_iter()
            .enumerate()
            .map(|(index, ids)| {
                let vals: Vec<f64> = ids.iter().map(|&i| self.psi[i]).collect();
                let (min_psi, max_psi) = range(&vals);
                ComponentSummary {
                    index,
                    nodes: ids.len(),
                    min_psi,
                    max_psi,
                    mean_psi: vals.iter().sum::<f64>() / vals.len() as f64,
                    sup_residual: ids.iter().fold(0.0f64, |m, &i| m.max(self.residual[i].abs())),
                }
            })
            .collect()
    }

    /// Whether every iterate after the first `skip` stayed strictly inside the
    /// barrier window.
    pub fn confined(&self, report: &BarrierReport, skip: usize) -> bool {
        let (lo, hi) = report.window();
        self.history.iter().skip(skip).all(|r| r.min_psi > lo && r.max_psi < hi)
    }

    pub fn slope_ratio(&self) -> f64 {
        self.fiber_slope / self.epsilon
    }

    /// Graph points X_i = x_i + ψ_i ω_i.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.grid.nodes().iter().zip(&self.psi).map(|(n, &p)| n.point(p)).collect()
    }
}

struct Iterate {
    psi: Vec<f64>,
    eval: GraphEvaluation,
}

impl Iterate {
    fn record(&self, stage: Stage) -> IterationRecord {
        let (min_psi, max_psi) = range(&self.psi);
        IterationRecord { stage, area: self.eval.area, sup_residual: self.eval.sup_residual(), min_psi, max_psi }
    }
}

fn try_iterate<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: Vec<f64>) -> Option<Iterate> {
    if check_psi(grid, &psi).is_err() {
        return None;
    }
    evaluate_graph(field, grid, &psi).ok().map(|eval| Iterate { psi, eval })
}

/// Finite-difference Hessian of the discrete area, assembled column by
/// column from the local area elements that depend on each ψ_i.
fn area_hessian<F: ConformalFactor>(field: &F, grid: &UnsGrid, psi: &[f64], states: &[NodeState]) -> Result<SparseRows> {
    let ex = Exponents::of(grid);
    let steps: Vec<f64> = psi.iter().map(|p| 1e-5 * p).collect();
    let shifted = |sign: f64| -> Result<Vec<NodeState>> {
        grid.nodes()
            .par_iter()
            .enumerate()
            .map(|(i, node)| node_state(field, node, psi[i] + sign * steps[i]))
            .collect()
    };
    let plus = shifted(1.0)?;
    let minus = shifted(-1.0)?;
    let mut hess = SparseRows::new(grid.len());
    let mut work = psi.to_vec();
    for i in 0..grid.len() {
        let mut deps: Vec<usize> = vec![i];
        for st in &grid.nodes()[i].stencils {
            deps.extend(st.neighbors.iter().map(|&(nb, _)| nb));
        }
        deps.sort_unstable();
        deps.dedup();
        let h = steps[i];
        for &k in &deps {
            for (sign, st) in [(1.0, &plus), (-1.0, &minus)] {
                work[i] = psi[i] + sign * h;
                let state = if k == i { st[i] } else { states[k] };
                local_element(&ex, grid, k, &work, state, |l, d| hess.add(l, i, sign * d / (2.0 * h)));
            }
        }
        work[i] = psi[i];
    }
    Ok(hess)
}

fn newton_direction(hess: &SparseRows, gradient: &[f64], grid: &UnsGrid, dense_limit: usize) -> Result<Vec<f64>> {
    let mut step = vec![0.0; gradient.len()];
    for ids in grid.components() {
        let mut local = vec![usize::MAX; gradient.len()];
        for (a, &i) in ids.iter().enumerate() {
            local[i] = a;
        }
        let mut sub = SparseRows::new(ids.len());
        for (a, &i) in ids.iter().enumerate() {
            for &(j, v) in &hess.rows[i] {
                if local[j] != usize::MAX {
                    sub.add(a, local[j], v);
                }
            }
        }
        let rhs: Vec<f64> = ids.iter().map(|&i| -gradient[i]).collect();
        let x = if ids.len() <= dense_limit { dense_solve(&sub, &rhs)? } else { gmres(&sub, &rhs, 1e-10, 80, 4000)? };
        for (a, &i) in ids.iter().enumerate() {
            step[i] = x[a];
        }
    }
    Ok(step)
}

/// Solve H_g = 0 for a normal graph over `grid`.
pub fn solve_horizon<F: ConformalFactor>(field: &F, grid: &UnsGrid, epsilon: f64, options: &SolverOptions) -> Result<HorizonGraph> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let dims = grid.submanifold().dims();
    let tolerance = options.tolerance.unwrap_or(1e-8 / epsilon);
    let switch = options.switch_threshold.unwrap_or(1e-2 / epsilon).max(tolerance);
    let psi0 = match &options.initial {
        InitialGuess::AHat => vec![compute_a_hat(dims)? * epsilon; grid.len()],
        InitialGuess::Constant(c) => vec![*c; grid.len()],
        InitialGuess::Profile(p) => p.clone(),
    };
    check_psi(grid, &psi0)?;
    let eval = evaluate_graph(field, grid, &psi0)?;
    let mut cur = Iterate { psi: psi0, eval };
    let mut history = vec![cur.record(Stage::Initial)];

    let mut tau = 1e-3 * epsilon * epsilon;
    let mut flow_steps = 0;
    while cur.eval.sup_residual() > switch && flow_steps < options.max_flow_steps {
        flow_steps += 1;
        let cand: Vec<f64> = cur.psi.iter().zip(&cur.eval.residual).map(|(p, r)| p - tau * r).collect();
        match try_iterate(field, grid, cand) {
            Some(next) if next.eval.area < cur.eval.area => {
                cur = next;
                history.push(cur.record(Stage::Flow));
                tau *= 1.25;
            }
            _ => {
                tau *= 0.5;
                if tau < 1e-16 * epsilon * epsilon {
                    break;
                }
            }
        }
    }

    let merit = |e: &GraphEvaluation| e.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut converged = cur.eval.sup_residual() < tolerance;
    let mut newton_steps = 0;
    while !converged && newton_steps < options.max_newton_steps {
        newton_steps += 1;
        let hess = area_hessian(field, grid, &cur.psi, &cur.eval.states)?;
        let dir = newton_direction(&hess, &cur.eval.gradient, grid, options.dense_limit)?;
        let base = merit(&cur.eval);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let cand: Vec<f64> = cur.psi.iter().zip(&dir).map(|(p, d)| p + lambda * d).collect();
            if let Some(next) = try_iterate(field, grid, cand) {
                if merit(&next.eval) < base || next.eval.sup_residual() < tolerance {
                    accepted = Some(next);
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some(next) => {
                cur = next;
                history.push(cur.record(Stage::Newton));
                converged = cur.eval.sup_residual() < tolerance;
            }
            None => break,
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: flow_steps + newton_steps,
            best_residual: cur.eval.sup_residual(),
        });
    }

    let outer_agreement = if options.check_outer_initialization {
        let report = options
            .barriers
            .as_ref()
            .ok_or_else(|| Error::Domain("outer initialization check needs a barrier report".into()))?;
        let mut again = options.clone();
        again.check_outer_initialization = false;
        again.initial = InitialGuess::Constant(report.c_outer * epsilon);
        let other = solve_horizon(field, grid, epsilon, &again)?;
        Some(cur.psi.iter().zip(&other.psi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    } else {
        None
    };

    let conformal_residual = conformal_law_residual(field, grid, &cur.psi, &cur.eval.states);
    let slope = fiber_slope(grid, &cur.psi);
    Ok(HorizonGraph {
        grid: grid.clone(),
        epsilon,
        area: cur.eval.area,
        residual: cur.eval.residual,
        psi: cur.psi,
        conformal_residual,
        tolerance,
        converged,
        history,
        fiber_slope: slope,
        outer_agreement,
    })
}
