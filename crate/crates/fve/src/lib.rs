//! Bilinear finite volume element (FVE) method for second-order elliptic
//! boundary value problems on rectangular tensor-product meshes.
//!
//! The discretization uses continuous piecewise-bilinear trial functions on
//! the primal mesh and piecewise-constant test functions on the central dual
//! mesh (control volumes around nodes). The crate provides:
//!
//! * [`mesh`] — tensor-product meshes, dual cells, refinement, stress points;
//! * [`expr`] — a small expression language over `(x, y)` with symbolic
//!   differentiation, used for coefficients and manufactured solutions;
//! * [`quadrature`] — Gauss–Legendre rules on segments and rectangles;
//! * [`femspace`] — bilinear shape functions, interpolation, dual projection;
//! * [`assembly`] — FVE and FEM system assembly with Dirichlet elimination;
//! * [`linalg`] — CSR matrices, banded LU and BiCGStab solvers;
//! * [`analysis`] — error norms, stress-point gradient errors, rate tables;
//! * [`verify`] — randomized oracles for the exact integral identities the
//!   scheme is built on.
//!
//! With the `parallel` feature (default) element-wise loops run on rayon.
//! Per-element work is collected in element order and combined sequentially,
//! so results are bitwise identical with and without the feature.

pub mod analysis;
pub mod assembly;
pub mod expr;
pub mod femspace;
pub mod linalg;
pub mod mesh;
pub(crate) mod par;
pub mod quadrature;
pub mod verify;

pub use analysis::{LevelErrors, StudyReport};
pub use assembly::{apply_dirichlet, assemble_fem, assemble_fve, Assembled, FveSystem};
pub use expr::{Expr, ProblemData};
pub use femspace::{DualField, NodalField};
pub use linalg::{solve, SolveOptions, SolveReport, SparseMatrix};
pub use mesh::{DualCell, Rect, StressPointSet, TensorMesh};
