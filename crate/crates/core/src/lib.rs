//! Exact solver and geometric presolve for chance-constrained ball projection
//! problems with finite-support uncertainty in two or three dimensions.

pub mod bench;
pub mod error;
pub mod geometry;
pub mod instance;
pub mod minimal;
pub mod oracle;
pub mod presolve;
pub mod solver;
pub mod tol;

pub use error::{CcpError, Result};
pub use instance::{Adjustment, ChanceEvaluation, IndexSet, Norm, PbpInstance, ScenarioSet};
pub use minimal::{brute_force_solve, MinimalSubsetFamily};
pub use oracle::{project, ProjectionResult, ProjectionStatus};
pub use presolve::{run_pipeline, PartitionState, PresolveConfig, PresolveReport};
pub use solver::{solve, verify, SolveResult, SolveStatus, SolverConfig};
