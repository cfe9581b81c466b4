//! Numerical toolkit for conformally flat, scalar-flat metrics
//! g_ε = u_ε^{4/(n−2)} δ concentrated around a compact submanifold S ⊂ ℝ^n
//! of codimension at least three, and for their outermost apparent horizons.

pub mod error;
pub mod field;
pub mod horizon;
pub mod model;
pub mod quadrature;
pub mod rescaling;
pub mod special;
pub mod submanifold;
mod vector;

pub use error::{Error, Result};
pub use field::{ConformalFactor, ConformalField, FlatFactor, ModelCylinderFactor};
pub use horizon::{BarrierReport, HorizonGraph, SolverOptions, SymmetryMode, UnsGrid};
pub use model::{CylinderModel, DimensionPair};
pub use submanifold::{NormalFrame, QuadratureRule, Submanifold, TubeSurface};
