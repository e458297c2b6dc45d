use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::ContactJacobian;
use crate::math::Vec3;
use crate::sparse::SymMatrix;

use super::cone::{cone_violation, dual_cone_violation};

/// Convex contact problem over the participating DoFs:
/// minimize `½‖v − v*‖²_S` subject to `Jᵀv − v̂ ∈ C*`.
#[derive(Clone, Debug)]
pub struct ConeProblem {
    pub s: SymMatrix,
    pub v_star: Vec<f64>,
    pub jacobian: ContactJacobian,
    /// Stacked `v̂_c`: `-φ₀/δt` normal parts, minus the contact velocity
    /// contributed by prescribed DoFs (zero tangential parts without them).
    pub bias: Vec<f64>,
    pub mu: Vec<f64>,
    /// Normal compliance (s/kg-equivalent) of compliant contacts; `None` for
    /// near-rigid contacts, which get the solver's default regularization.
    pub normal_compliance: Vec<Option<f64>>,
}

impl ConeProblem {
    pub fn dim(&self) -> usize {
        self.v_star.len()
    }

    pub fn contact_count(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.dim();
        let nc = self.contact_count();
        let bad = |m: String| Err(SolverError::InvalidProblem(m));
        if self.s.dim() != n || self.jacobian.n_v != n {
            return bad(format!("dimension mismatch: S {}, J {}, v* {n}", self.s.dim(), self.jacobian.n_v));
        }
        if self.jacobian.contact_count() != nc || self.bias.len() != 3 * nc || self.normal_compliance.len() != nc {
            return bad("per-contact data lengths differ".into());
        }
        if self.mu.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return bad("friction coefficients must be finite and non-negative".into());
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return bad("bias must be finite".into());
        }
        if self.normal_compliance.iter().flatten().any(|r| !(*r > 0.0)) {
            return bad("compliance must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative tolerance on the momentum residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Regularization of near-rigid contacts relative to the Delassus diagonal.
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 300, epsilon: 1e-8 }
    }
}

/// Contact classification at a solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactMode {
    Open,
    Stick,
    Slip,
}

/// Per-step optimality certificate of the contact impulses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// max over contacts of the cone violation of λ, scaled by `1 + ‖λ‖`.
    pub primal_cone: f64,
    /// max over contacts of the dual-cone violation of the gap velocity,
    /// scaled by `1 + ‖w‖`.
    pub dual_cone: f64,
    /// max over contacts of `|λ·w| / (1 + ‖λ‖‖w‖)`.
    pub complementarity: f64,
}

impl Certificate {
    pub fn max(&self) -> f64 {
        self.primal_cone.max(self.dual_cone).max(self.complementarity)
    }

    /// Evaluate for impulses `lambda` against gap velocities `w` (both stacked).
    pub fn evaluate(lambda: &[f64], w: &[f64], mu: &[f64]) -> Self {
        let mut c = Certificate::default();
        for (i, &m) in mu.iter().enumerate() {
            let l = Vec3::from_column_slice(&lambda[3 * i..3 * i + 3]);
            let g = Vec3::from_column_slice(&w[3 * i..3 * i + 3]);
            c.primal_cone = c.primal_cone.max(cone_violation(&l, m) / (1.0 + l.norm()));
            c.dual_cone = c.dual_cone.max(dual_cone_violation(&g, m) / (1.0 + g.norm()));
            c.complementarity = c.complementarity.max(l.dot(&g).abs() / (1.0 + l.norm() * g.norm()));
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    /// Participating velocities.
    pub v: Vec<f64>,
    /// Stacked impulses in contact frames.
    pub lambda: Vec<f64>,
    /// Stacked `Jᵀv − v̂`.
    pub gap_velocity: Vec<f64>,
    pub iterations: usize,
    /// `‖S(v − v*) − Jλ‖ / max(‖S v*‖, ‖Jλ‖, ‖|S||v − v*|‖)`.
    pub momentum_residual: f64,
    pub certificate: Certificate,
    pub modes: Vec<ContactMode>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid cone problem: {0}")]
    InvalidProblem(String),
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("contact solve stopped after {} iterations (residual {:e})", .0.iterations, .0.momentum_residual)]
    MaxIterations(Box<SolverResult>),
}
