//! Finite-element machinery shared by all field solvers.

pub mod assembly;
pub mod element;
pub mod field;
pub mod newton;
pub mod solver;
pub mod sparse;

pub use assembly::{l2_project, scalar_pattern, ScreenedCoefficients};
pub use field::{ScalarField, VectorField};
pub use newton::{newton_solve, NewtonOptions, NewtonReport};
pub use solver::{solve_spd, LinearSolverKind, SolveStats, SolverOptions};
pub use sparse::{CsrMatrix, DirichletSet, SparseSystem, SparsityPattern};
