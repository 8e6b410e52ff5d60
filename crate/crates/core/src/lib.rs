//! Solver and certifier for distributed elliptic optimal control problems on
//! the unit square, with optional box constraints on the control.
//!
//! The library computes P1 finite element approximations of the optimality
//! system (by preconditioned MINRES, with a primal-dual active set loop in
//! the constrained case), reconstructs H(div)-conforming fluxes with
//! lowest-order Raviart-Thomas averaging, and evaluates guaranteed, fully
//! computable two-sided bounds for the cost functional together with upper
//! bounds for the discretization error of the control/state pair in combined
//! norms. A grid-sweep experiment driver reproduces the benchmark tables and
//! emits CSV/JSON/text reports.

pub mod active_set;
pub mod assembly;
pub mod estimator;
pub mod experiment;
pub mod expr;
pub mod fields;
pub mod flux;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod saddle;

pub use assembly::SparseMatrix;
pub use fields::ScalarField;
pub use flux::FluxField;
pub use mesh::{build_uniform_mesh, Mesh, QuadRule};
pub use problem::ProblemSpec;
