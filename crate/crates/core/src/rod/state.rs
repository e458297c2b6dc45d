use serde::{Deserialize, Serialize};

use crate::math::{any_perpendicular, parallel_transport, signed_angle, Vec3};

use super::frames::{compute_frames, RodKinematicsCache};
use super::RodError;

/// Below this edge length a tangent is undefined.
pub const MIN_EDGE_LENGTH: f64 = 1e-12;
/// Tangents with `1 + t·t'` below this are treated as antiparallel.
pub const ANTIPARALLEL_TOLERANCE: f64 = 1e-9;

/// Interior vertex where curvature and twist live: the node shared by
/// edges `prev` and `next`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Joint {
    pub node: usize,
    pub prev: usize,
    pub next: usize,
}

/// Which configuration the rod is stress-free in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestShape {
    /// The configuration the rod is created in.
    Initial,
    /// Zero curvature and twist; rest edge lengths still come from the
    /// initial configuration.
    Straight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UndeformedQuantities {
    pub edge_lengths: Vec<f64>,
    /// Voronoi length per joint.
    pub voronoi: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub twist: Vec<f64>,
}

/// Configuration of one discrete elastic rod.
///
/// Generalized coordinates are node positions and per-edge material angles,
/// interleaved as `[x_0, γ^0, x_1, γ^1, ...]`. Reference frames are stored as
/// anchors (tangent and first director at the last frame update); the
/// current reference directors are the anchors parallel-transported onto
/// the current tangents, which makes the energy a smooth function of the
/// coordinates between frame updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodState {
    pub nodes: Vec<Vec3>,
    pub gammas: Vec<f64>,
    closed: bool,
    joints: Vec<Joint>,
    anchor_tangents: Vec<Vec3>,
    anchor_d1: Vec<Vec3>,
    /// Unwrapped reference twist per joint at the last frame update.
    anchor_twist: Vec<f64>,
    rest: UndeformedQuantities,
}

impl RodState {
    /// Open rod through `nodes` with zero material angles.
    pub fn open(nodes: Vec<Vec3>, rest: RestShape) -> Result<Self, RodError> {
        Self::build(nodes, false, rest, None)
    }

    /// Closed loop through `nodes`; an extra edge joins the last node to the first.
    pub fn closed(nodes: Vec<Vec3>, rest: RestShape) -> Result<Self, RodError> {
        Self::build(nodes, true, rest, None)
    }

    /// Like [`RodState::open`] with a prescribed first reference director.
    pub fn open_with_director(nodes: Vec<Vec3>, rest: RestShape, d1: Vec3) -> Result<Self, RodError> {
        Self::build(nodes, false, rest, Some(d1))
    }

    fn build(nodes: Vec<Vec3>, closed: bool, rest: RestShape, d1: Option<Vec3>) -> Result<Self, RodError> {
        let nn = nodes.len();
        let min_nodes = if closed { 3 } else { 2 };
        if nn < min_nodes {
            return Err(RodError::TooFewNodes { nodes: nn, required: min_nodes });
        }
        let ne = if closed { nn } else { nn - 1 };
        let joints: Vec<Joint> = if closed {
            (0..nn).map(|i| Joint { node: i, prev: (i + nn - 1) % nn, next: i }).collect()
        } else {
            (1..nn - 1).map(|i| Joint { node: i, prev: i - 1, next: i }).collect()
        };

        let edge = |i: usize| nodes[(i + 1) % nn] - nodes[i];
        let mut tangents = Vec::with_capacity(ne);
        let mut lengths = Vec::with_capacity(ne);
        for i in 0..ne {
            let e = edge(i);
            let l = e.norm();
            if !(l >= MIN_EDGE_LENGTH) {
                return Err(RodError::DegenerateEdge { edge: i, length: l });
            }
            tangents.push(e / l);
            lengths.push(l);
        }

        // Space-parallel (Bishop) frame along the rod.
        let mut d1s = Vec::with_capacity(ne);
        let first = match d1 {
            Some(d) => {
                let p = d - d.dot(&tangents[0]) * tangents[0];
                if p.norm() < 1e-9 {
                    any_perpendicular(&tangents[0])
                } else {
                    p.normalize()
                }
            }
            None => any_perpendicular(&tangents[0]),
        };
        d1s.push(first);
        for i in 1..ne {
            let (a, b) = (tangents[i - 1], tangents[i]);
            if 1.0 + a.dot(&b) < ANTIPARALLEL_TOLERANCE {
                return Err(RodError::AntiparallelTangents { edge: i });
            }
            let d = parallel_transport(&a, &b, &d1s[i - 1]);
            d1s.push((d - d.dot(&b) * b).normalize());
        }

        let mut anchor_twist = Vec::with_capacity(joints.len());
        for j in &joints {
            let (a, b) = (tangents[j.prev], tangents[j.next]);
            if 1.0 + a.dot(&b) < ANTIPARALLEL_TOLERANCE {
                return Err(RodError::AntiparallelTangents { edge: j.next });
            }
            let u = parallel_transport(&a, &b, &d1s[j.prev]);
            anchor_twist.push(signed_angle(&u, &d1s[j.next], &b));
        }

        let voronoi = joints.iter().map(|j| 0.5 * (lengths[j.prev] + lengths[j.next])).collect();
        let nj = joints.len();
        let mut state = Self {
            nodes,
            gammas: vec![0.0; ne],
            closed,
            joints,
            anchor_tangents: tangents,
            anchor_d1: d1s,
            anchor_twist,
            rest: UndeformedQuantities {
                edge_lengths: lengths,
                voronoi,
                kappa1: vec![0.0; nj],
                kappa2: vec![0.0; nj],
                twist: vec![0.0; nj],
            },
        };
        if rest == RestShape::Initial {
            let cache = compute_frames(&state)?;
            state.rest.kappa1 = cache.kappa1.clone();
            state.rest.kappa2 = cache.kappa2.clone();
            state.rest.twist = cache.twist.clone();
        }
        Ok(state)
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.gammas.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn edge_nodes(&self, edge: usize) -> (usize, usize) {
        (edge, (edge + 1) % self.nodes.len())
    }

    pub fn edge_vector(&self, edge: usize) -> Vec3 {
        let (a, b) = self.edge_nodes(edge);
        self.nodes[b] - self.nodes[a]
    }

    pub fn rest(&self) -> &UndeformedQuantities {
        &self.rest
    }

    /// Replace the curvature and twist the rod is stress-free in.
    pub fn set_rest_curvature(&mut self, kappa1: Vec<f64>, kappa2: Vec<f64>, twist: Vec<f64>) {
        assert_eq!(kappa1.len(), self.joints.len());
        assert_eq!(kappa2.len(), self.joints.len());
        assert_eq!(twist.len(), self.joints.len());
        self.rest.kappa1 = kappa1;
        self.rest.kappa2 = kappa2;
        self.rest.twist = twist;
    }

    pub fn anchor_tangents(&self) -> &[Vec3] {
        &self.anchor_tangents
    }

    pub fn anchor_d1(&self) -> &[Vec3] {
        &self.anchor_d1
    }

    pub fn anchor_twist(&self) -> &[f64] {
        &self.anchor_twist
    }

    pub fn dof_count(&self) -> usize {
        4 * self.nodes.len() - usize::from(!self.closed)
    }

    pub fn node_dof(node: usize) -> usize {
        4 * node
    }

    pub fn edge_dof(edge: usize) -> usize {
        4 * edge + 3
    }

    /// Generalized coordinates in interleaved order.
    pub fn q(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.dof_count()];
        for (i, x) in self.nodes.iter().enumerate() {
            q[4 * i..4 * i + 3].copy_from_slice(x.as_slice());
        }
        for (i, g) in self.gammas.iter().enumerate() {
            q[4 * i + 3] = *g;
        }
        q
    }

    /// Same anchors and rest shape, new coordinates.
    pub fn with_q(&self, q: &[f64]) -> Self {
        assert_eq!(q.len(), self.dof_count());
        let mut s = self.clone();
        for i in 0..s.nodes.len() {
            s.nodes[i] = Vec3::new(q[4 * i], q[4 * i + 1], q[4 * i + 2]);
        }
        for i in 0..s.gammas.len() {
            s.gammas[i] = q[4 * i + 3];
        }
        s
    }

    /// Move the reference-frame anchors onto the current configuration.
    ///
    /// Each reference director is carried by the minimal rotation from its
    /// anchor tangent to the current tangent, so the update adds no rotation
    /// about the tangent; reference twists are unwrapped continuously.
    pub fn reanchor(&mut self) -> Result<(), RodError> {
        let cache = compute_frames(self)?;
        self.anchor_tangents = cache.tangents;
        self.anchor_d1 = cache.d1;
        self.anchor_twist = cache.beta;
        Ok(())
    }

    /// New state at `nodes_new` (material angles kept) with reference frames
    /// transported in time from `self`.
    pub fn time_parallel_transport(&self, nodes_new: &[Vec3]) -> Result<Self, RodError> {
        assert_eq!(nodes_new.len(), self.nodes.len(), "topology change");
        let mut s = self.clone();
        s.nodes = nodes_new.to_vec();
        s.reanchor()?;
        Ok(s)
    }

    /// Apply a rigid motion `x -> r x + t` to nodes and anchors.
    pub fn rigidly_transformed(&self, r: &crate::math::Mat3, t: &Vec3) -> Self {
        let mut s = self.clone();
        s.nodes.iter_mut().for_each(|x| *x = r * *x + t);
        s.anchor_tangents.iter_mut().for_each(|x| *x = r * *x);
        s.anchor_d1.iter_mut().for_each(|x| *x = r * *x);
        s
    }

    pub fn frames(&self) -> Result<RodKinematicsCache, RodError> {
        compute_frames(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dof_layout() {
        let nodes: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let open = RodState::open(nodes.clone(), RestShape::Initial).unwrap();
        assert_eq!(open.dof_count(), 15);
        assert_eq!(open.joints().len(), 2);
        let ring: Vec<Vec3> = (0..6)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 6.0;
                Vec3::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        let closed = RodState::closed(ring, RestShape::Initial).unwrap();
        assert_eq!(closed.dof_count(), 24);
        assert_eq!(closed.edge_count(), 6);
        assert_eq!(closed.joints()[0], Joint { node: 0, prev: 5, next: 0 });
        let q = closed.q();
        assert_eq!(closed.with_q(&q), closed);
    }

    #[test]
    fn degenerate_edge_rejected() {
        let nodes = vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()];
        assert!(matches!(
            RodState::open(nodes, RestShape::Initial),
            Err(RodError::DegenerateEdge { edge: 0, .. })
        ));
    }

    #[test]
    fn antiparallel_rejected() {
        let nodes = vec![Vec3::zeros(), Vec3::x(), Vec3::zeros() + Vec3::new(1e-12, 0.0, 0.0)];
        assert!(RodState::open(nodes, RestShape::Initial).is_err());
    }
}
