use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::collision::{contact_jacobian, ContactJacobian, ContactPoint, ContactSide};
use crate::contact_solver::{
    partition_dofs, recover_nonparticipating, schur_complement, solve_cone_qp_from, Certificate, ConeProblem, ContactMode,
    SapWorkspace, SchurCache,
};
use crate::math::Vec3;
use crate::rod::RodState;
use crate::sparse::{SparsePattern, SymMatrix};

use super::contacts::{detect_contacts, PressureCache};
use super::dynamics::{rigid_free_motion, solve_rod_free_motion, RodCache};
use super::kinematics::advance_positions;
use super::system::{Controller, System};
use super::{StepperConfig, StepperError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub a: ContactSide,
    pub b: ContactSide,
    pub position: Vec3,
    pub normal: Vec3,
    pub phi: f64,
    /// Impulse in the contact frame `[t1, t2, n]` (N·s).
    pub lambda: Vec3,
    pub mode: ContactMode,
    /// Polygon area for patch contacts.
    pub area: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub iterations: usize,
    pub momentum_residual: f64,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub newton_iterations: usize,
    pub contacts: Vec<ContactRecord>,
    pub solver: Option<SolverStats>,
    /// Force each controller applied during the step, in controller order
    /// (zero for clamps).
    pub controller_forces: Vec<Vec3>,
}

impl StepReport {
    pub fn min_phi(&self) -> Option<f64> {
        self.contacts.iter().map(|c| c.phi).reduce(f64::min)
    }
}

/// Owns a system and the caches that persist across its steps.
#[derive(Debug)]
pub struct Simulator {
    pub system: System,
    pub config: StepperConfig,
    rod_caches: Vec<RodCache>,
    schur: SchurCache,
    sap: SapWorkspace,
    pressure: PressureCache,
    global_pattern: Option<Arc<SparsePattern>>,
}

impl Simulator {
    pub fn new(system: System, config: StepperConfig) -> Result<Self, StepperError> {
        system.validate()?;
        config.validate()?;
        Ok(Self {
            system,
            config,
            rod_caches: Vec::new(),
            schur: SchurCache::default(),
            sap: SapWorkspace::default(),
            pressure: PressureCache::default(),
            global_pattern: None,
        })
    }

    /// Symbolic factorization used by rod `rod`'s Newton solves.
    pub fn rod_symbolic(&self, rod: usize) -> Option<&Arc<crate::sparse::SymbolicCholesky>> {
        self.rod_caches.get(rod).map(|c| c.symbolic())
    }

    /// Contacts at the current configuration.
    pub fn detect_contacts(&mut self) -> Result<Vec<ContactPoint>, StepperError> {
        Ok(detect_contacts(&self.system, self.config.contact_margin, &mut self.pressure)?)
    }

    /// Advance by one time step. On error the system is left unchanged.
    pub fn step(&mut self) -> Result<StepReport, StepperError> {
        let cfg = self.config;
        let prescribed = self.system.prescribed();
        let offsets = self.system.rod_offsets();
        let n_v = prescribed.len();

        self.refresh_rod_caches(&prescribed, &offsets);
        let mut v_star: Vec<f64> = vec![0.0; n_v];
        let mut newton_iterations = 0;
        let mut rod_blocks = Vec::with_capacity(self.system.rods.len());
        for (r, &o) in offsets.iter().enumerate() {
            let n = self.system.rods[r].state.dof_count();
            let fm = solve_rod_free_motion(&self.system, r, &prescribed[o..o + n], &self.rod_caches[r], &cfg)?;
            newton_iterations += fm.iterations;
            v_star[o..o + n].copy_from_slice(&fm.v_star);
            rod_blocks.push(fm.a_free);
        }
        let mut body_diag = Vec::with_capacity(self.system.bodies.len());
        for b in 0..self.system.bodies.len() {
            let o = self.system.body_offset(b);
            let (v, a) = rigid_free_motion(&self.system, b, &cfg);
            v_star[o..o + 6].copy_from_slice(&v);
            body_diag.push(a);
        }
        for (i, p) in prescribed.iter().enumerate() {
            if let Some(v) = p {
                v_star[i] = *v;
            }
        }

        let free: Vec<usize> = (0..n_v).filter(|&i| prescribed[i].is_none()).collect();
        let mut free_index = vec![usize::MAX; n_v];
        for (k, &i) in free.iter().enumerate() {
            free_index[i] = k;
        }
        let a = self.assemble_a(&offsets, &rod_blocks, &body_diag, &free_index, free.len());

        let contacts = self.detect_contacts()?;
        let topology = self.system.topology();
        let jac = contact_jacobian(&contacts, &topology);
        let mut v = v_star.clone();
        let mut records = Vec::new();
        let mut stats = None;

        // Contacts that move some free DoF enter the cone problem; prescribed
        // velocities are folded into their bias.
        let mut active = Vec::new();
        let mut blocks = Vec::new();
        let mut bias = Vec::new();
        for (i, c) in contacts.iter().enumerate() {
            let mut shift = Vec3::zeros();
            let mut block = Vec::new();
            for (d, coeff) in &jac.blocks[i] {
                match prescribed[*d] {
                    Some(p) => shift += p * coeff,
                    None => block.push((free_index[*d], *coeff)),
                }
            }
            if block.iter().all(|(_, c)| c.norm() == 0.0) {
                continue;
            }
            active.push(i);
            blocks.push(block);
            bias.extend_from_slice((Vec3::new(0.0, 0.0, -cfg.bias_scale * c.phi / cfg.dt) - shift).as_slice());
        }
        if !active.is_empty() {
            let j_free = ContactJacobian { n_v: free.len(), blocks };
            let part = partition_dofs(&a, &j_free);
            let reduced = schur_complement(&part, &mut self.schur)?;
            let v_star_free: Vec<f64> = free.iter().map(|&i| v_star[i]).collect();
            let problem = ConeProblem {
                s: reduced.s.clone(),
                v_star: part.gather_participating(&v_star_free),
                jacobian: part.jacobian.clone(),
                bias,
                mu: active.iter().map(|&i| contacts[i].mu).collect(),
                normal_compliance: active
                    .iter()
                    .map(|&i| contacts[i].patch.map(|p| 1.0 / (cfg.dt * cfg.dt * p.area * p.gradient)))
                    .collect(),
            };
            // The previous step's velocities are usually close to the answer.
            let v_prev = self.system.velocity();
            let guess = part.gather_participating(&free.iter().map(|&i| v_prev[i]).collect::<Vec<_>>());
            let result = solve_cone_qp_from(&problem, &cfg.solver, &mut self.sap, Some(&guess))?;
            let dv_p: Vec<f64> = result.v.iter().zip(&problem.v_star).map(|(a, b)| a - b).collect();
            let v_n = recover_nonparticipating(&part, &reduced, &dv_p, &part.gather_non_participating(&v_star_free));
            let v_free = part.scatter(&result.v, &v_n);
            for (k, &i) in free.iter().enumerate() {
                v[i] = v_free[k];
            }
            for (k, &i) in active.iter().enumerate() {
                let c = &contacts[i];
                records.push(ContactRecord {
                    a: c.a,
                    b: c.b,
                    position: c.position,
                    normal: c.normal,
                    phi: c.phi,
                    lambda: Vec3::from_column_slice(&result.lambda[3 * k..3 * k + 3]),
                    mode: result.modes[k],
                    area: c.patch.map(|p| p.area),
                });
            }
            stats = Some(SolverStats {
                iterations: result.iterations,
                momentum_residual: result.momentum_residual,
                certificate: result.certificate,
            });
        }

        let controller_forces = self.controller_forces(&v, &offsets);
        advance_positions(&mut self.system, &v, &cfg)?;
        Ok(StepReport { newton_iterations, contacts: records, solver: stats, controller_forces })
    }

    fn refresh_rod_caches(&mut self, prescribed: &[Option<f64>], offsets: &[usize]) {
        let rods = &self.system.rods;
        let stale = self.rod_caches.len() != rods.len()
            || rods.iter().zip(&self.rod_caches).zip(offsets).any(|((r, c), &o)| {
                !c.matches(&r.state, &prescribed[o..o + r.state.dof_count()])
            });
        if stale {
            self.rod_caches = rods
                .iter()
                .zip(offsets)
                .map(|(r, &o)| RodCache::new(&r.state, &prescribed[o..o + r.state.dof_count()]))
                .collect();
            self.global_pattern = None;
        }
    }

    /// Block-diagonal `A` over the free DoFs.
    fn assemble_a(
        &mut self,
        offsets: &[usize],
        rod_blocks: &[SymMatrix],
        body_diag: &[[f64; 6]],
        free_index: &[usize],
        n_free: usize,
    ) -> SymMatrix {
        // Global free index of each rod's local free DoF.
        let maps: Vec<Vec<usize>> = self
            .rod_caches
            .iter()
            .zip(offsets)
            .map(|(c, &o)| c.free().iter().map(|&i| free_index[o + i]).collect())
            .collect();
        let pattern = match &self.global_pattern {
            Some(p) if p.dim() == n_free => Arc::clone(p),
            _ => {
                let mut entries = Vec::new();
                for (c, map) in self.rod_caches.iter().zip(&maps) {
                    let p = c.free_pattern();
                    for j in 0..p.dim() {
                        entries.extend(p.column(j).iter().map(|&i| (map[i], map[j])));
                    }
                }
                let p = Arc::new(SparsePattern::from_entries(n_free, entries));
                self.global_pattern = Some(Arc::clone(&p));
                p
            }
        };
        let mut a = SymMatrix::zeros(pattern);
        for (block, map) in rod_blocks.iter().zip(&maps) {
            let p = block.pattern();
            for j in 0..p.dim() {
                for k in p.col_range(j) {
                    a.add(map[p.row_indices()[k]], map[j], block.values()[k]);
                }
            }
        }
        for (b, diag) in body_diag.iter().enumerate() {
            let o = self.system.body_offset(b);
            for (k, d) in diag.iter().enumerate() {
                if free_index[o + k] != usize::MAX {
                    a.add_diagonal(free_index[o + k], *d);
                }
            }
        }
        a
    }

    fn controller_forces(&self, v: &[f64], offsets: &[usize]) -> Vec<Vec3> {
        let cfg = &self.config;
        let (dt, th, thvq) = (cfg.dt, cfg.theta, cfg.theta_vq);
        let t = self.system.time + th * dt;
        let blended = |x0: Vec3, v0: Vec3, v1: Vec3| {
            let vq = (1.0 - thvq) * v0 + thvq * v1;
            (x0 + th * dt * vq, (1.0 - th) * v0 + th * v1)
        };
        self.system
            .controllers
            .iter()
            .map(|c| match *c {
                Controller::NodePd { rod, node, kp, kd, target } => {
                    let o = offsets[rod] + RodState::node_dof(node);
                    let r = &self.system.rods[rod];
                    let v0 = Vec3::from_column_slice(&r.velocity[RodState::node_dof(node)..RodState::node_dof(node) + 3]);
                    let (x, xd) = blended(r.state.nodes[node], v0, Vec3::from_column_slice(&v[o..o + 3]));
                    kp * (target.position(t) - x) + kd * (target.velocity - xd)
                }
                Controller::NodeForce { force, ramp_time, .. } => Controller::node_force_at(&force, ramp_time, t),
                Controller::BodyPd { body, kp, kd, target } => {
                    let o = self.system.body_offset(body) + 3;
                    let b = &self.system.bodies[body];
                    let (x, xd) = blended(b.com(), b.linear_velocity, Vec3::from_column_slice(&v[o..o + 3]));
                    kp * (target.position(t) - x) + kd * (target.velocity - xd)
                }
                Controller::Clamp { .. } => Vec3::zeros(),
            })
            .collect()
    }
}
