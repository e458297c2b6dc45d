use serde::{Deserialize, Serialize};

use crate::math::Vec3;

use super::frames::{compute_frames, RodKinematicsCache};
use super::params::RodParameters;
use super::state::RodState;
use super::RodError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ElasticEnergy {
    pub stretch: f64,
    pub twist: f64,
    pub bend: f64,
}

impl ElasticEnergy {
    pub fn total(&self) -> f64 {
        self.stretch + self.twist + self.bend
    }
}

/// Per-joint stiffness coefficients divided by the Voronoi length.
#[derive(Clone, Copy, Debug)]
pub(crate) struct JointStiffness {
    pub bend1: f64,
    pub bend2: f64,
    pub twist: f64,
}

pub(crate) fn joint_stiffness(state: &RodState, params: &RodParameters, joint: usize) -> JointStiffness {
    let l = state.rest().voronoi[joint];
    JointStiffness {
        bend1: params.youngs_modulus * params.i1() / l,
        bend2: params.youngs_modulus * params.i2() / l,
        twist: params.twist_stiffness() / l,
    }
}

pub fn elastic_energy(state: &RodState, params: &RodParameters) -> Result<ElasticEnergy, RodError> {
    let cache = compute_frames(state)?;
    Ok(energy_from_cache(state, params, &cache))
}

pub(crate) fn energy_from_cache(state: &RodState, params: &RodParameters, cache: &RodKinematicsCache) -> ElasticEnergy {
    let rest = state.rest();
    let ea = params.stretch_stiffness();
    let mut out = ElasticEnergy::default();
    for (l, lbar) in cache.edge_lengths.iter().zip(&rest.edge_lengths) {
        let s = l / lbar - 1.0;
        out.stretch += 0.5 * ea * s * s * lbar;
    }
    for k in 0..state.joints().len() {
        let c = joint_stiffness(state, params, k);
        let d1 = cache.kappa1[k] - rest.kappa1[k];
        let d2 = cache.kappa2[k] - rest.kappa2[k];
        let dt = cache.twist[k] - rest.twist[k];
        out.bend += 0.5 * (c.bend1 * d1 * d1 + c.bend2 * d2 * d2);
        out.twist += 0.5 * c.twist * dt * dt;
    }
    out
}

/// Rate of rotation about `t` of a director carried from anchor `ta` by
/// minimal rotation, per unit change of the unit tangent.
pub(crate) fn anchor_twist_rate(ta: &Vec3, t: &Vec3) -> Vec3 {
    -ta.cross(t) / (1.0 + ta.dot(t))
}

/// Gradient of the total elastic energy in interleaved DoF order.
pub fn elastic_gradient(state: &RodState, params: &RodParameters) -> Result<Vec<f64>, RodError> {
    let cache = compute_frames(state)?;
    Ok(gradient_from_cache(state, params, &cache))
}

pub(crate) fn gradient_from_cache(state: &RodState, params: &RodParameters, c: &RodKinematicsCache) -> Vec<f64> {
    let rest = state.rest();
    let ne = state.edge_count();
    let mut g_edge = vec![Vec3::zeros(); ne];
    let mut g_gamma = vec![0.0; ne];

    let ea = params.stretch_stiffness();
    for i in 0..ne {
        g_edge[i] += ea * (c.edge_lengths[i] / rest.edge_lengths[i] - 1.0) * c.tangents[i];
    }

    for (k, j) in state.joints().iter().enumerate() {
        let s = joint_stiffness(state, params, k);
        let (p, n) = (j.prev, j.next);
        let (t0, t1) = (c.tangents[p], c.tangents[n]);
        let (l0, l1) = (c.edge_lengths[p], c.edge_lengths[n]);
        let kb = c.curvature_binormal[k];
        let chi = 1.0 + t0.dot(&t1);
        let tt = (t0 + t1) / chi;
        let mt1 = (c.m1[p] + c.m1[n]) / chi;
        let mt2 = (c.m2[p] + c.m2[n]) / chi;
        let (k1, k2) = (c.kappa1[k], c.kappa2[k]);

        let dk1_de0 = (-k1 * tt + t1.cross(&mt2)) / l0;
        let dk1_de1 = (-k1 * tt - t0.cross(&mt2)) / l1;
        let dk2_de0 = (-k2 * tt - t1.cross(&mt1)) / l0;
        let dk2_de1 = (-k2 * tt + t0.cross(&mt1)) / l1;
        let db_de0 = 0.5 * kb / l0;
        let db_de1 = 0.5 * kb / l1;

        let f1 = s.bend1 * (k1 - rest.kappa1[k]);
        let f2 = s.bend2 * (k2 - rest.kappa2[k]);
        let ft = s.twist * (c.twist[k] - rest.twist[k]);

        g_edge[p] += f1 * dk1_de0 + f2 * dk2_de0 + ft * db_de0;
        g_edge[n] += f1 * dk1_de1 + f2 * dk2_de1 + ft * db_de1;
        g_gamma[p] += -0.5 * (f1 * kb.dot(&c.m1[p]) + f2 * kb.dot(&c.m2[p])) - ft;
        g_gamma[n] += -0.5 * (f1 * kb.dot(&c.m1[n]) + f2 * kb.dot(&c.m2[n])) + ft;
    }

    // Reference directors follow the tangent from their anchors; the induced
    // rotation about the tangent acts like a change of material angle.
    for i in 0..ne {
        let t = c.tangents[i];
        let w = anchor_twist_rate(&state.anchor_tangents()[i], &t);
        let w = (w - w.dot(&t) * t) / c.edge_lengths[i];
        g_edge[i] += g_gamma[i] * w;
    }

    let mut grad = vec![0.0; state.dof_count()];
    for i in 0..ne {
        let (a, b) = state.edge_nodes(i);
        for d in 0..3 {
            grad[RodState::node_dof(a) + d] -= g_edge[i][d];
            grad[RodState::node_dof(b) + d] += g_edge[i][d];
        }
        grad[RodState::edge_dof(i)] += g_gamma[i];
    }
    grad
}
