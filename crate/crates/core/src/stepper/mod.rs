//! θ-method time stepping of rods and rigid bodies with frictional contact.
//!
//! A step solves the contact-free momentum balance by Newton's method per
//! rod, linearizes it into `A (v − v*) = J λ`, reduces that system onto the
//! DoFs touched by contacts, solves the cone problem there, and integrates
//! positions with the resulting velocities.

mod contacts;
mod dynamics;
mod kinematics;
mod step;
mod system;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::CollisionError;
use crate::contact_solver::{SolverConfig, SolverError};
use crate::rod::RodError;

pub use contacts::{detect_contacts, rod_geometry, PressureCache};
pub use dynamics::assemble_forces;
pub use kinematics::{advance_orientation, advance_positions};
pub use step::{ContactRecord, Simulator, SolverStats, StepReport};
pub use system::{
    BodyMotion, ContactModel, Controller, FrictionTable, Participant, PressureSpec, RigidBody, RodBody, System,
    Trajectory,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub theta: f64,
    pub theta_vq: f64,
    /// Max-norm tolerance on the momentum residual (N·s).
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    /// Initial diagonal shift, relative to the mean diagonal, when A is not
    /// positive definite.
    pub regularization_floor: f64,
    /// Contacts are created for signed distances up to this value (m).
    pub contact_margin: f64,
    /// Fraction of the penetration corrected per step through the bias velocity.
    pub bias_scale: f64,
    pub solver: SolverConfig,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            theta: 1.0,
            theta_vq: 1.0,
            newton_tolerance: 1e-10,
            newton_max_iterations: 50,
            regularization_floor: 1e-12,
            contact_margin: 1e-4,
            bias_scale: 1.0,
            solver: SolverConfig::default(),
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), StepperError> {
        let ok = self.dt > 0.0
            && (0.0..=1.0).contains(&self.theta)
            && (0.0..=1.0).contains(&self.theta_vq)
            && self.newton_tolerance > 0.0
            && self.regularization_floor > 0.0
            && self.contact_margin >= 0.0
            && self.bias_scale >= 0.0
            && self.solver.tolerance > 0.0
            && self.solver.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(StepperError::InvalidSystem(format!("invalid stepper configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepperError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Rod(#[from] RodError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error("Newton iteration for rod {rod} failed after {iterations} iterations (residual {residual:e} N·s)")]
    NewtonDivergence { rod: usize, iterations: usize, residual: f64 },
    #[error(transparent)]
    Contact(#[from] SolverError),
}
