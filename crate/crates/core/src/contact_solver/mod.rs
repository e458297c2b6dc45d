//! Convex second-order-cone contact problem: reduction onto the DoFs that
//! contacts touch, a regularized Newton solver with exact line search, and
//! per-step optimality certificates.

mod cone;
mod problem;
mod sap;
mod schur;

pub use cone::{cone_violation, dual_cone_violation, project_cone};
pub use problem::{Certificate, ConeProblem, ContactMode, SolverConfig, SolverError, SolverResult};
pub use sap::{solve_cone_qp, solve_cone_qp_from, SapWorkspace};
pub use schur::{partition_dofs, recover_nonparticipating, schur_complement, DofPartition, Reduced, SchurCache};
