use std::sync::Arc;

use crate::autodiff::{Jet8, Scalar, V3};
use crate::math::{Mat3, Vec3};
use crate::sparse::{SparsePattern, SymMatrix};

use super::energy::{joint_stiffness, JointStiffness};
use super::frames::compute_frames;
use super::params::RodParameters;
use super::state::RodState;
use super::RodError;

/// Fixed data of one joint stencil: anchors and rest values.
pub(crate) struct StencilData {
    pub anchor_t0: Vec3,
    pub anchor_d0: Vec3,
    pub anchor_t1: Vec3,
    pub anchor_d1: Vec3,
    pub anchor_twist: f64,
    pub kappa1_bar: f64,
    pub kappa2_bar: f64,
    pub twist_bar: f64,
    pub stiffness: JointStiffness,
}

fn transport<T: Scalar>(from: &V3<T>, to: &V3<T>, u: &V3<T>) -> V3<T> {
    let c = from.dot(to);
    let b = from.cross(to);
    let k = b.dot(u) / (T::cst(1.0) + c);
    u.mul(c).add(&b.cross(u)).add(&b.mul(k))
}

/// Bending plus twisting energy of one joint as a function of its two edge
/// vectors and material angles.
pub(crate) fn stencil_energy<T: Scalar>(e0: V3<T>, e1: V3<T>, g0: T, g1: T, s: &StencilData) -> T {
    let t0 = e0.mul(T::cst(1.0) / e0.norm());
    let t1 = e1.mul(T::cst(1.0) / e1.norm());
    let a0 = transport(&V3::from_f64(&s.anchor_t0), &t0, &V3::from_f64(&s.anchor_d0));
    let a1 = transport(&V3::from_f64(&s.anchor_t1), &t1, &V3::from_f64(&s.anchor_d1));
    let b0 = t0.cross(&a0);
    let b1 = t1.cross(&a1);
    let (s0, c0) = (g0.sin(), g0.cos());
    let (s1, c1) = (g1.sin(), g1.cos());
    let m10 = a0.mul(c0).add(&b0.mul(s0));
    let m20 = b0.mul(c0).sub(&a0.mul(s0));
    let m11 = a1.mul(c1).add(&b1.mul(s1));
    let m21 = b1.mul(c1).sub(&a1.mul(s1));

    let kb = t0.cross(&t1).mul(T::cst(2.0) / (T::cst(1.0) + t0.dot(&t1)));
    let k1 = kb.dot(&m20.add(&m21)).scale(0.5);
    let k2 = -kb.dot(&m10.add(&m11)).scale(0.5);

    let u = transport(&t0, &t1, &a0);
    let (sr, cr) = (s.anchor_twist.sin(), s.anchor_twist.cos());
    let r = u.mul(T::cst(cr)).add(&t1.cross(&u).mul(T::cst(sr)));
    let beta = T::cst(s.anchor_twist) + r.cross(&a1).dot(&t1).atan2(r.dot(&a1));
    let tau = g1 - g0 + beta;

    let d1 = k1 - T::cst(s.kappa1_bar);
    let d2 = k2 - T::cst(s.kappa2_bar);
    let dt = tau - T::cst(s.twist_bar);
    (d1 * d1).scale(0.5 * s.stiffness.bend1)
        + (d2 * d2).scale(0.5 * s.stiffness.bend2)
        + (dt * dt).scale(0.5 * s.stiffness.twist)
}

pub(crate) fn stencil_data(state: &RodState, params: &RodParameters, joint: usize) -> StencilData {
    let j = state.joints()[joint];
    let rest = state.rest();
    StencilData {
        anchor_t0: state.anchor_tangents()[j.prev],
        anchor_d0: state.anchor_d1()[j.prev],
        anchor_t1: state.anchor_tangents()[j.next],
        anchor_d1: state.anchor_d1()[j.next],
        anchor_twist: state.anchor_twist()[joint],
        kappa1_bar: rest.kappa1[joint],
        kappa2_bar: rest.kappa2[joint],
        twist_bar: rest.twist[joint],
        stiffness: joint_stiffness(state, params, joint),
    }
}

/// Global DoFs of a joint stencil: `[x_a, γ_prev, x_node, γ_next, x_b]`.
fn stencil_dofs(state: &RodState, joint: usize) -> [usize; 11] {
    let j = state.joints()[joint];
    let a = state.edge_nodes(j.prev).0;
    let b = state.edge_nodes(j.next).1;
    let (na, nc, nb) = (RodState::node_dof(a), RodState::node_dof(j.node), RodState::node_dof(b));
    [
        na,
        na + 1,
        na + 2,
        RodState::edge_dof(j.prev),
        nc,
        nc + 1,
        nc + 2,
        RodState::edge_dof(j.next),
        nb,
        nb + 1,
        nb + 2,
    ]
}

/// Local variables (e0, e1, γ0, γ1) touched by each stencil DoF, with sign.
fn stencil_map(k: usize) -> [(usize, f64); 2] {
    match k {
        0..=2 => [(k, -1.0), (usize::MAX, 0.0)],
        3 => [(6, 1.0), (usize::MAX, 0.0)],
        4..=6 => [(k - 4, 1.0), (k - 1, -1.0)],
        7 => [(7, 1.0), (usize::MAX, 0.0)],
        _ => [(k - 5, 1.0), (usize::MAX, 0.0)],
    }
}

/// Nonzero pattern of the stiffness matrix: one dense 11×11 block per joint
/// plus the 6×6 stretching block of every edge.
pub fn hessian_pattern(state: &RodState) -> SparsePattern {
    let mut blocks: Vec<Vec<usize>> = (0..state.joints().len()).map(|k| stencil_dofs(state, k).to_vec()).collect();
    for i in 0..state.edge_count() {
        let (a, b) = state.edge_nodes(i);
        let (da, db) = (RodState::node_dof(a), RodState::node_dof(b));
        blocks.push(vec![da, da + 1, da + 2, db, db + 1, db + 2]);
    }
    SparsePattern::from_elements(state.dof_count(), blocks.iter().map(|b| b.as_slice()))
}

/// Stiffness matrix `∂²E/∂q²`, assembled into `pattern` (from [`hessian_pattern`]).
pub fn elastic_hessian(
    state: &RodState,
    params: &RodParameters,
    pattern: &Arc<SparsePattern>,
) -> Result<SymMatrix, RodError> {
    let cache = compute_frames(state)?;
    let mut k = SymMatrix::zeros(pattern.clone());
    let rest = state.rest();

    let ea = params.stretch_stiffness();
    for i in 0..state.edge_count() {
        let t = cache.tangents[i];
        let (l, lbar) = (cache.edge_lengths[i], rest.edge_lengths[i]);
        let ttt = t * t.transpose();
        let h: Mat3 = ea * (ttt / lbar + (l / lbar - 1.0) * (Mat3::identity() - ttt) / l);
        let (a, b) = state.edge_nodes(i);
        let (da, db) = (RodState::node_dof(a), RodState::node_dof(b));
        for r in 0..3 {
            for c in 0..3 {
                let v = 0.5 * (h[(r, c)] + h[(c, r)]);
                k.add(da + r, da + c, v);
                k.add(db + r, db + c, v);
                k.add(da + r, db + c, -v);
                k.add(db + r, da + c, -v);
            }
        }
    }

    for joint in 0..state.joints().len() {
        let j = state.joints()[joint];
        let data = stencil_data(state, params, joint);
        let e0 = state.edge_vector(j.prev);
        let e1 = state.edge_vector(j.next);
        let var = |v: f64, i: usize| Jet8::variable(v, i);
        let energy = stencil_energy(
            V3([var(e0.x, 0), var(e0.y, 1), var(e0.z, 2)]),
            V3([var(e1.x, 3), var(e1.y, 4), var(e1.z, 5)]),
            var(state.gammas[j.prev], 6),
            var(state.gammas[j.next], 7),
            &data,
        );
        let dofs = stencil_dofs(state, joint);
        for (r, &gr) in dofs.iter().enumerate() {
            for (c, &gc) in dofs.iter().enumerate() {
                let mut v = 0.0;
                for &(lr, sr) in &stencil_map(r) {
                    for &(lc, sc) in &stencil_map(c) {
                        if lr != usize::MAX && lc != usize::MAX {
                            v += sr * sc * energy.hess(lr, lc);
                        }
                    }
                }
                k.add(gr, gc, v);
            }
        }
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::{CrossSection, RestShape};

    fn helix(n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|i| {
                let s = i as f64 * 0.45;
                Vec3::new(s.cos(), s.sin(), 0.25 * s)
            })
            .collect()
    }

    #[test]
    fn stencil_energy_matches_cached_energy() {
        let cs = CrossSection::Rectangular { width: 0.3, height: 0.2 };
        let p = RodParameters::new(2.0, 0.7, cs, 1.0, 0.0, 0.0).unwrap();
        let s0 = RodState::open(helix(6), RestShape::Straight).unwrap();
        let mut q = s0.q();
        for (i, x) in q.iter_mut().enumerate() {
            *x += 0.05 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
        }
        let s = s0.with_q(&q);
        let total = super::super::elastic_energy(&s, &p).unwrap();
        let mut sum = 0.0;
        for (k, j) in s.joints().iter().enumerate() {
            sum += stencil_energy(
                V3::from_f64(&s.edge_vector(j.prev)),
                V3::from_f64(&s.edge_vector(j.next)),
                s.gammas[j.prev],
                s.gammas[j.next],
                &stencil_data(&s, &p, k),
            );
        }
        assert!((sum - total.bend - total.twist).abs() < 1e-12 * (1.0 + sum.abs()));
    }

    #[test]
    fn hessian_is_exactly_symmetric_and_banded() {
        let cs = CrossSection::Circular { radius: 0.1 };
        let p = RodParameters::new(3.0, 1.0, cs, 1.0, 0.0, 0.0).unwrap();
        let s = RodState::open(helix(8), RestShape::Straight).unwrap();
        let pat = Arc::new(hessian_pattern(&s));
        let k = elastic_hessian(&s, &p, &pat).unwrap();
        assert_eq!(k.asymmetry(), 0.0);
        let d = k.to_dense();
        for r in 0..d.nrows() {
            for c in 0..d.ncols() {
                if d[(r, c)] != 0.0 {
                    assert!((r as i64 - c as i64).abs() <= 11, "entry ({r}, {c}) outside band");
                }
            }
        }
    }
}
