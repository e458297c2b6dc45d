//! Simulation of slender elastic filaments (discrete elastic rods) in
//! frictional contact with each other and with rigid bodies.
//!
//! Each time step runs in two stages. A Newton solve finds the contact-free
//! ("free-motion") velocity of every body; then the dynamics are linearized
//! about it, the degrees of freedom touched by contact are kept through a
//! Schur complement, and a strictly convex cone-constrained problem yields
//! next-step velocities together with contact impulses satisfying the
//! friction-cone complementarity conditions.
//!
//! Module map:
//! - [`rod`]: rod state, frames, elastic energies and their derivatives.
//! - [`collision`]: shapes, point and pressure-field patch contact, contact Jacobian.
//! - [`stepper`]: θ-method momentum residual, free-motion Newton, linearization.
//! - [`contact_solver`]: DoF partitioning, Schur complement, cone solve.
//! - [`scene`]: scene files, scenario builders, the simulation driver and logs.
//! - [`oracles`]: independent reference computations used by tests.

pub mod autodiff;
pub mod collision;
pub mod contact_solver;
pub mod math;
pub mod oracles;
pub mod rod;
pub mod scene;
pub mod sparse;
pub mod stepper;
