use std::sync::Arc;

use crate::math::Vec3;
use crate::rod::{elastic_gradient, elastic_hessian, hessian_pattern, lumped_mass, RodState};
use crate::sparse::{Ordering, SparsePattern, SymMatrix, SymbolicCholesky};

use super::system::{Controller, RigidBody, RodBody, System};
use super::{StepperConfig, StepperError};

/// Per-rod data that depends only on topology and the prescribed-DoF set.
#[derive(Debug)]
pub(crate) struct RodCache {
    pattern: Arc<SparsePattern>,
    free: Vec<usize>,
    free_pattern: Arc<SparsePattern>,
    free_map: Vec<usize>,
    symbolic: Arc<SymbolicCholesky>,
}

impl RodCache {
    pub(crate) fn new(state: &RodState, prescribed: &[Option<f64>]) -> Self {
        let pattern = Arc::new(hessian_pattern(state));
        let free: Vec<usize> = (0..prescribed.len()).filter(|&i| prescribed[i].is_none()).collect();
        let (fp, free_map) = pattern.principal_submatrix(&free);
        let free_pattern = Arc::new(fp);
        let symbolic = Arc::new(SymbolicCholesky::analyze(Arc::clone(&free_pattern), Ordering::MinimumDegree));
        Self { pattern, free, free_pattern, free_map, symbolic }
    }

    pub(crate) fn matches(&self, state: &RodState, prescribed: &[Option<f64>]) -> bool {
        self.pattern.dim() == state.dof_count()
            && self.free.len() == prescribed.iter().filter(|p| p.is_none()).count()
            && self.free.iter().all(|&i| prescribed[i].is_none())
    }

    pub(crate) fn free(&self) -> &[usize] {
        &self.free
    }

    pub(crate) fn free_pattern(&self) -> &Arc<SparsePattern> {
        &self.free_pattern
    }

    /// Identity of the cached symbolic factorization, for reuse checks.
    pub(crate) fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }
}

/// Inputs shared by every evaluation of one rod's momentum residual.
struct RodStepContext<'a> {
    rod: &'a RodBody,
    mass: Vec<f64>,
    gravity: Vec3,
    controllers: Vec<&'a Controller>,
    /// Time at which θ-blended forces are evaluated.
    t_theta: f64,
    cfg: &'a StepperConfig,
}

/// Non-contact generalized force on one rod at a blended state.
///
/// Elastic, Rayleigh damping (`α M + β K`), gravity and controller forces.
/// `stiffness` must be `K(q)` when `β ≠ 0`.
pub fn assemble_forces(
    rod: &RodBody,
    state: &RodState,
    v: &[f64],
    stiffness: Option<&SymMatrix>,
    gravity: &Vec3,
    controllers: &[&Controller],
    t: f64,
) -> Result<Vec<f64>, StepperError> {
    let mass = lumped_mass(state, &rod.params)?;
    let grad = elastic_gradient(state, &rod.params)?;
    let mut k: Vec<f64> = grad.iter().zip(&mass).zip(v).map(|((g, m), v)| -g - rod.params.rayleigh_alpha * m * v).collect();
    if rod.params.rayleigh_beta != 0.0 {
        let kv = stiffness.expect("stiffness required for stiffness-proportional damping").mul_vec(v);
        k.iter_mut().zip(kv).for_each(|(k, kv)| *k -= rod.params.rayleigh_beta * kv);
    }
    for i in 0..state.node_count() {
        let o = RodState::node_dof(i);
        for d in 0..3 {
            k[o + d] += mass[o + d] * gravity[d];
        }
    }
    for c in controllers {
        match **c {
            Controller::NodePd { node, kp, kd, target, .. } => {
                let o = RodState::node_dof(node);
                let x = state.nodes[node];
                let xd = Vec3::new(v[o], v[o + 1], v[o + 2]);
                let f = kp * (target.position(t) - x) + kd * (target.velocity - xd);
                (0..3).for_each(|d| k[o + d] += f[d]);
            }
            Controller::NodeForce { node, force, ramp_time, .. } => {
                let o = RodState::node_dof(node);
                let f = Controller::node_force_at(&force, ramp_time, t);
                (0..3).for_each(|d| k[o + d] += f[d]);
            }
            _ => {}
        }
    }
    Ok(k)
}

struct Evaluation {
    residual: Vec<f64>,
    jacobian: Option<SymMatrix>,
}

fn blend(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(a, b)| (1.0 - s) * a + s * b).collect()
}

fn evaluate(ctx: &RodStepContext, cache: &RodCache, v: &[f64], with_jacobian: bool) -> Result<Evaluation, StepperError> {
    let cfg = ctx.cfg;
    let (dt, th, thvq) = (cfg.dt, cfg.theta, cfg.theta_vq);
    let v0 = &ctx.rod.velocity;
    let v_th = blend(v0, v, th);
    let v_thvq = blend(v0, v, thvq);
    let q0 = ctx.rod.state.q();
    let q_th: Vec<f64> = q0.iter().zip(&v_thvq).map(|(q, v)| q + th * dt * v).collect();
    let state = ctx.rod.state.with_q(&q_th);
    let beta = ctx.rod.params.rayleigh_beta;
    let stiffness = if with_jacobian || beta != 0.0 {
        Some(elastic_hessian(&state, &ctx.rod.params, &cache.pattern)?)
    } else {
        None
    };
    let k = assemble_forces(ctx.rod, &state, &v_th, stiffness.as_ref(), &ctx.gravity, &ctx.controllers, ctx.t_theta)?;
    let residual: Vec<f64> =
        (0..v.len()).map(|i| ctx.mass[i] * (v[i] - v0[i]) - dt * k[i]).collect();
    let jacobian = if with_jacobian {
        let mut j = stiffness.expect("computed above");
        j.scale(th * dt * (beta + thvq * dt));
        let alpha = ctx.rod.params.rayleigh_alpha;
        for (i, m) in ctx.mass.iter().enumerate() {
            j.add_diagonal(i, (1.0 + alpha * th * dt) * m);
        }
        for c in &ctx.controllers {
            if let Controller::NodePd { node, kp, kd, .. } = **c {
                let o = RodState::node_dof(node);
                (0..3).for_each(|d| j.add_diagonal(o + d, dt * (kp * th * thvq * dt + kd * th)));
            }
        }
        Some(j)
    } else {
        None
    };
    Ok(Evaluation { residual, jacobian })
}

/// Result of one rod's free-motion solve.
#[derive(Debug)]
pub(crate) struct RodFreeMotion {
    pub v_star: Vec<f64>,
    /// Regularized Newton matrix over the rod's free DoFs.
    pub a_free: SymMatrix,
    pub iterations: usize,
}

fn shifted(mut a: SymMatrix, shift: f64) -> SymMatrix {
    if shift > 0.0 {
        (0..a.dim()).for_each(|i| a.add_diagonal(i, shift));
    }
    a
}

const MIN_STEP: f64 = 1.0 / 1048576.0;

/// Newton solve of `m(v) = 0` for one rod; prescribed DoFs keep their values.
pub(crate) fn solve_rod_free_motion(
    system: &System,
    rod_index: usize,
    prescribed: &[Option<f64>],
    cache: &RodCache,
    cfg: &StepperConfig,
) -> Result<RodFreeMotion, StepperError> {
    let rod = &system.rods[rod_index];
    let controllers = system
        .controllers
        .iter()
        .filter(|c| matches!(c, Controller::NodePd { rod, .. } | Controller::NodeForce { rod, .. } if *rod == rod_index))
        .collect();
    let ctx = RodStepContext {
        rod,
        mass: lumped_mass(&rod.state, &rod.params)?,
        gravity: system.gravity,
        controllers,
        t_theta: system.time + cfg.theta * cfg.dt,
        cfg,
    };
    let mut v: Vec<f64> = rod.velocity.iter().zip(prescribed).map(|(v, p)| p.unwrap_or(*v)).collect();
    let free_norm = |r: &[f64]| cache.free.iter().map(|&i| r[i] * r[i]).sum::<f64>().sqrt();
    let free_max = |r: &[f64]| cache.free.iter().fold(0.0f64, |m, &i| m.max(r[i].abs()));
    let mut iterations = 0;
    let mut eval = evaluate(&ctx, cache, &v, true)?;
    loop {
        let a_free = eval.jacobian.take().expect("requested").extract(&cache.free_pattern, &cache.free_map);
        let mean_diag = a_free.diagonal().iter().sum::<f64>() / a_free.dim().max(1) as f64;
        let (factor, shift) = cache.symbolic.factor_regularized(&a_free, cfg.regularization_floor * mean_diag);
        let res_max = free_max(&eval.residual);
        if res_max <= cfg.newton_tolerance {
            return Ok(RodFreeMotion { v_star: v, a_free: shifted(a_free, shift), iterations });
        }
        if iterations >= cfg.newton_max_iterations {
            return Err(StepperError::NewtonDivergence { rod: rod_index, iterations, residual: res_max });
        }
        iterations += 1;
        let mut step: Vec<f64> = cache.free.iter().map(|&i| -eval.residual[i]).collect();
        factor.solve_in_place(&mut step);
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if step.iter().all(|s| s.abs() <= 1e-14 * scale) {
            // Residual at roundoff level for this problem's force scale.
            return Ok(RodFreeMotion { v_star: v, a_free: shifted(a_free, shift), iterations });
        }
        let r0 = free_norm(&eval.residual);
        let mut alpha = 1.0;
        loop {
            let mut trial = v.clone();
            for (k, &i) in cache.free.iter().enumerate() {
                trial[i] += alpha * step[k];
            }
            // Full steps are usually accepted, so they carry the Jacobian.
            let r = evaluate(&ctx, cache, &trial, alpha == 1.0)?;
            if free_norm(&r.residual) < r0 || free_max(&r.residual) <= cfg.newton_tolerance {
                v = trial;
                eval = if r.jacobian.is_some() { r } else { evaluate(&ctx, cache, &v, true)? };
                break;
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                return Err(StepperError::NewtonDivergence { rod: rod_index, iterations, residual: res_max });
            }
        }
    }
}

/// Free motion of a rigid body: explicit gyroscopic torque, gravity and an
/// implicit center-of-mass PD pull. Returns `(v*, diagonal of A)`.
pub(crate) fn rigid_free_motion(system: &System, body: usize, cfg: &StepperConfig) -> ([f64; 6], [f64; 6]) {
    let b: &RigidBody = &system.bodies[body];
    let (dt, th, thvq) = (cfg.dt, cfg.theta, cfg.theta_vq);
    let w0 = b.angular_velocity;
    let iw = b.inertia.component_mul(&w0);
    let w = w0 + dt * (-w0.cross(&iw)).component_div(&b.inertia);
    let mut a = [b.inertia.x, b.inertia.y, b.inertia.z, b.mass, b.mass, b.mass];
    let mut force = b.mass * system.gravity;
    let mut stiff = 0.0;
    let t = system.time + th * dt;
    for c in &system.controllers {
        if let Controller::BodyPd { body: bi, kp, kd, target } = *c {
            if bi == body {
                let v0 = b.linear_velocity;
                let x_th = b.com() + th * dt * v0;
                force += kp * (target.position(t) - x_th) + kd * (target.velocity - v0);
                stiff += dt * (kp * th * thvq * dt + kd * th);
            }
        }
    }
    // Linear in v: residual at v0 is −δt f(v0); one exact Newton step.
    let lin = b.linear_velocity + dt * force / (b.mass + stiff);
    (3..6).for_each(|k| a[k] += stiff);
    ([w.x, w.y, w.z, lin.x, lin.y, lin.z], a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{CrossSection, RestShape, RodParameters};

    fn straight(n: usize) -> RodBody {
        let nodes = (0..n).map(|i| Vec3::new(0.1 * i as f64, 0.0, 0.0)).collect();
        let state = RodState::open(nodes, RestShape::Initial).unwrap();
        let params = RodParameters::new(1e6, 4e5, CrossSection::Circular { radius: 0.005 }, 1000.0, 0.0, 0.0).unwrap();
        RodBody::at_rest(state, params, false)
    }

    #[test]
    fn rest_without_gravity_has_zero_force() {
        let rod = straight(5);
        let v = vec![0.0; rod.state.dof_count()];
        let k = assemble_forces(&rod, &rod.state, &v, None, &Vec3::zeros(), &[], 0.0).unwrap();
        assert!(k.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn gravity_force_is_mass_times_g() {
        let rod = straight(3);
        let v = vec![0.0; rod.state.dof_count()];
        let g = Vec3::new(0.0, 0.0, -9.81);
        let k = assemble_forces(&rod, &rod.state, &v, None, &g, &[], 0.0).unwrap();
        let m = lumped_mass(&rod.state, &rod.params).unwrap();
        assert!((k[2] - m[2] * -9.81).abs() < 1e-12);
        assert_eq!(k[0], 0.0);
    }

    #[test]
    fn mass_damping_on_translation() {
        let mut rod = straight(4);
        rod.params.rayleigh_alpha = 2.0;
        let v: Vec<f64> = (0..rod.state.dof_count()).map(|i| if i % 4 == 1 { 0.3 } else { 0.0 }).collect();
        let k = assemble_forces(&rod, &rod.state, &v, None, &Vec3::zeros(), &[], 0.0).unwrap();
        let m = lumped_mass(&rod.state, &rod.params).unwrap();
        for i in 0..v.len() {
            assert!((k[i] + 2.0 * m[i] * v[i]).abs() < 1e-12);
        }
    }
}
