//! Apparent horizons of g_ε as normal graphs over the unit normal bundle.

mod area_bound;
mod barriers;
mod functional;
mod grid;
mod linear;
mod solver;

pub use area_bound::{coordinate_sphere_area, local_area_bound_check, AreaBoundCheck};
pub use barriers::{scan_barriers, scan_spheres, scan_tubes, BarrierReport, ScanRange, ScanRow};
pub use functional::{
    conformal_law_residual, evaluate_graph, graph_area, max_slope, mean_curvature_residual, node_states, GraphEvaluation,
    NodeState,
};
pub use grid::{GridNode, Resolution, Stencil, StencilKind, SymmetryMode, UnsGrid};
pub use solver::{
    fiber_slope, solve_horizon, ComponentSummary, HorizonGraph, InitialGuess, IterationRecord, SolverOptions, Stage,
};
