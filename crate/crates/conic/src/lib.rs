//! Block-diagonal conic programs over orthant, second-order and
//! positive-semidefinite cones.
//!
//! A [`ConicProblem`] is a list of constraint blocks `F0 + sum_k x_k F_k in K`
//! with a linear objective. [`solve`] runs a homogeneous self-dual
//! interior-point method; [`sdpa`] reads and writes the SDPA sparse format.

mod cones;
pub mod error;
pub mod problem;
pub mod sdpa;
pub mod solver;

pub use error::ConicError;
pub use problem::{Block, Cone, ConicProblem, Part, SparseSym, VarRole};
pub use solver::{solve, solve_with, Settings, SolveResult, Status, DEFAULT_MAX_ITER, DEFAULT_TOL};
