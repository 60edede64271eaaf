//! Modified weak Galerkin discretization of the two-dimensional elliptic
//! obstacle problem.
//!
//! The crate provides the full adaptive pipeline: conforming triangle meshes
//! with newest-vertex bisection, the piecewise-linear discontinuous space
//! with discrete weak gradients, assembly of the stabilized bilinear form,
//! a primal-dual active set solver for the discrete variational inequality,
//! a residual a posteriori error estimator, and the solve-estimate-mark-refine
//! driver used by the command line front end.

pub mod adaptive;
pub mod assembly;
pub mod estimator;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod vtk;

mod error;

/// Scalar data function on the plane.
pub type Scalar = dyn Fn(f64, f64) -> f64 + Send + Sync;
/// Vector-valued data function on the plane.
pub type VecField = dyn Fn(f64, f64) -> [f64; 2] + Send + Sync;

pub use adaptive::{
    dorfler_mark, fit_slope, run_adaptive, AdaptError, LevelContext, RunRecord, StopRule,
};
pub use assembly::{assemble, assemble_problem, energy_error, energy_norm, SparseSystem};
pub use error::Error;
pub use estimator::{estimate, oscillation, EstimatorBreakdown};
pub use mesh::{build_initial_mesh, shape_regularity, DomainSpec, TriMesh};
pub use problems::{example_1, example_2, example_3, by_name, LoadCase, ProblemSpec};
pub use solver::{conforming_residual, multiplier_crosscheck, solve_vi, ViSolution};
pub use space::{DgField, ElementConstants, FieldTag};
pub use sparse::CscMatrix;
