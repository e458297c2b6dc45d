use crate::math::{parallel_transport, rotate_perpendicular, signed_angle, Vec3};

use super::state::{RodState, ANTIPARALLEL_TOLERANCE, MIN_EDGE_LENGTH};
use super::RodError;

/// Frame and strain quantities derived from a [`RodState`].
///
/// Per-edge vectors are indexed by edge; curvature and twist quantities by
/// joint (see [`RodState::joints`]).
#[derive(Clone, Debug)]
pub struct RodKinematicsCache {
    pub edge_lengths: Vec<f64>,
    pub tangents: Vec<Vec3>,
    pub d1: Vec<Vec3>,
    pub d2: Vec<Vec3>,
    pub m1: Vec<Vec3>,
    pub m2: Vec<Vec3>,
    pub curvature_binormal: Vec<Vec3>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    /// Reference twist: signed angle from the space-transported previous
    /// director to the current one, unwrapped against the anchor value.
    pub beta: Vec<f64>,
    pub twist: Vec<f64>,
}

pub fn compute_frames(state: &RodState) -> Result<RodKinematicsCache, RodError> {
    let ne = state.edge_count();
    let mut edge_lengths = Vec::with_capacity(ne);
    let mut tangents = Vec::with_capacity(ne);
    let mut d1 = Vec::with_capacity(ne);
    let mut d2 = Vec::with_capacity(ne);
    let mut m1 = Vec::with_capacity(ne);
    let mut m2 = Vec::with_capacity(ne);
    for i in 0..ne {
        let e = state.edge_vector(i);
        let l = e.norm();
        if !(l >= MIN_EDGE_LENGTH) {
            return Err(RodError::DegenerateEdge { edge: i, length: l });
        }
        let t = e / l;
        let ta = state.anchor_tangents()[i];
        if 1.0 + ta.dot(&t) < ANTIPARALLEL_TOLERANCE {
            return Err(RodError::AntiparallelTangents { edge: i });
        }
        let mut a = parallel_transport(&ta, &t, &state.anchor_d1()[i]);
        a -= a.dot(&t) * t;
        a.normalize_mut();
        let b = t.cross(&a);
        let g = state.gammas[i];
        let (s, c) = g.sin_cos();
        m1.push(c * a + s * b);
        m2.push(-s * a + c * b);
        edge_lengths.push(l);
        tangents.push(t);
        d1.push(a);
        d2.push(b);
    }

    let nj = state.joints().len();
    let mut curvature_binormal = Vec::with_capacity(nj);
    let mut kappa1 = Vec::with_capacity(nj);
    let mut kappa2 = Vec::with_capacity(nj);
    let mut beta = Vec::with_capacity(nj);
    let mut twist = Vec::with_capacity(nj);
    for (k, j) in state.joints().iter().enumerate() {
        let (t0, t1) = (tangents[j.prev], tangents[j.next]);
        let chi = 1.0 + t0.dot(&t1);
        if chi < ANTIPARALLEL_TOLERANCE {
            return Err(RodError::AntiparallelTangents { edge: j.next });
        }
        let kb = 2.0 * t0.cross(&t1) / chi;
        kappa1.push(0.5 * kb.dot(&(m2[j.prev] + m2[j.next])));
        kappa2.push(-0.5 * kb.dot(&(m1[j.prev] + m1[j.next])));
        curvature_binormal.push(kb);

        let reference = state.anchor_twist()[k];
        let u = parallel_transport(&t0, &t1, &d1[j.prev]);
        let r = rotate_perpendicular(&u, &t1, reference);
        let b = reference + signed_angle(&r, &d1[j.next], &t1);
        beta.push(b);
        twist.push(state.gammas[j.next] - state.gammas[j.prev] + b);
    }

    Ok(RodKinematicsCache {
        edge_lengths,
        tangents,
        d1,
        d2,
        m1,
        m2,
        curvature_binormal,
        kappa1,
        kappa2,
        beta,
        twist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rod::RestShape;

    #[test]
    fn straight_rod_has_zero_twist_and_identity_material_frame() {
        let nodes: Vec<Vec3> = (0..5).map(|i| Vec3::new(0.1 * i as f64, 0.0, 0.0)).collect();
        let s = RodState::open(nodes, RestShape::Initial).unwrap();
        let c = compute_frames(&s).unwrap();
        assert!(c.beta.iter().all(|b| b.abs() < 1e-15));
        for i in 0..4 {
            assert!((c.m1[i] - c.d1[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn right_angle_curvature_binormal() {
        let nodes = vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::zeros(), Vec3::new(0.0, 1.0, 0.0)];
        let s = RodState::open_with_director(nodes, RestShape::Straight, Vec3::z()).unwrap();
        let c = compute_frames(&s).unwrap();
        assert!((c.curvature_binormal[0] - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-14);
        // d1 = z on both edges, so m2 = t × z lies in plane and κ1 = 0, κ2 = -2.
        assert!(c.kappa1[0].abs() < 1e-14);
        assert!((c.kappa2[0] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn frames_are_orthonormal() {
        let nodes: Vec<Vec3> = (0..8)
            .map(|i| {
                let s = i as f64 * 0.4;
                Vec3::new(s.cos(), s.sin(), 0.3 * s)
            })
            .collect();
        let mut s = RodState::open(nodes, RestShape::Initial).unwrap();
        s.gammas.iter_mut().enumerate().for_each(|(i, g)| *g = 0.3 * i as f64);
        let c = compute_frames(&s).unwrap();
        for i in 0..s.edge_count() {
            let (t, a, b) = (c.tangents[i], c.m1[i], c.m2[i]);
            assert!(t.dot(&a).abs() < 1e-12 && t.dot(&b).abs() < 1e-12 && a.dot(&b).abs() < 1e-12);
            assert!((a.cross(&b) - t).norm() < 1e-12);
        }
    }
}
