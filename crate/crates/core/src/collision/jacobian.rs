use serde::{Deserialize, Serialize};

use crate::math::{contact_frame, Mat3, Vec3};

/// Which body, and where on it, one side of a contact acts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ContactSide {
    /// Point at parameter `s` along edge `edge` of rod `rod`.
    Rod { rod: usize, edge: usize, s: f64 },
    Body { body: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchData {
    pub area: f64,
    pub pressure: f64,
    pub gradient: f64,
}

/// A resolved contact between sides `a` and `b`; `normal` points from b into a.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub a: ContactSide,
    pub b: ContactSide,
    pub position: Vec3,
    pub normal: Vec3,
    pub phi: f64,
    pub mu: f64,
    pub patch: Option<PatchData>,
}

impl ContactPoint {
    /// Columns `[t1, t2, n]`.
    pub fn frame(&self) -> Mat3 {
        contact_frame(&self.normal)
    }

    pub fn swapped(&self) -> Self {
        Self { a: self.b, b: self.a, normal: -self.normal, ..*self }
    }
}

/// Velocity layout of one rod or rigid body inside the generalized velocity.
#[derive(Clone, Debug, PartialEq)]
pub enum BodyLayout {
    /// Interleaved rod DoFs starting at `offset`.
    Rod { offset: usize, node_count: usize },
    /// Six DoFs at `offset`: body-frame angular velocity, then world linear velocity.
    Rigid { offset: usize, rotation: Mat3, com: Vec3 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemTopology {
    pub rods: Vec<BodyLayout>,
    pub bodies: Vec<BodyLayout>,
    pub n_v: usize,
}

/// Sparse `J` with `v_c = Jᵀ v`; each contact stores `(dof, coefficients in
/// t1, t2, n)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactJacobian {
    pub n_v: usize,
    pub blocks: Vec<Vec<(usize, Vec3)>>,
}

impl ContactJacobian {
    pub fn contact_count(&self) -> usize {
        self.blocks.len()
    }

    /// Stacked contact-frame velocities `Jᵀ v`.
    pub fn velocities(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 3 * self.blocks.len()];
        for (i, b) in self.blocks.iter().enumerate() {
            let mut acc = Vec3::zeros();
            for (d, c) in b {
                acc += v[*d] * c;
            }
            out[3 * i..3 * i + 3].copy_from_slice(acc.as_slice());
        }
        out
    }

    /// Generalized impulse `J λ`.
    pub fn impulse(&self, lambda: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_v];
        for (i, b) in self.blocks.iter().enumerate() {
            let l = Vec3::new(lambda[3 * i], lambda[3 * i + 1], lambda[3 * i + 2]);
            for (d, c) in b {
                out[*d] += c.dot(&l);
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_v, 3 * self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            for (d, c) in b {
                for k in 0..3 {
                    m[(*d, 3 * i + k)] += c[k];
                }
            }
        }
        m
    }
}

/// Assemble the contact Jacobian for `contacts` at the configuration
/// described by `topology`.
pub fn contact_jacobian(contacts: &[ContactPoint], topology: &SystemTopology) -> ContactJacobian {
    let mut blocks = Vec::with_capacity(contacts.len());
    for c in contacts {
        let frame = c.frame();
        let mut entries: Vec<(usize, Vec3)> = Vec::new();
        for (side, sign) in [(&c.a, 1.0), (&c.b, -1.0)] {
            side_entries(side, sign, &c.position, &frame, topology, &mut entries);
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, Vec3)> = Vec::with_capacity(entries.len());
        for (d, v) in entries {
            match merged.last_mut() {
                Some((ld, lv)) if *ld == d => *lv += v,
                _ => merged.push((d, v)),
            }
        }
        blocks.push(merged);
    }
    ContactJacobian { n_v: topology.n_v, blocks }
}

fn side_entries(side: &ContactSide, sign: f64, p: &Vec3, frame: &Mat3, topo: &SystemTopology, out: &mut Vec<(usize, Vec3)>) {
    let rows = frame.transpose();
    match *side {
        ContactSide::Rod { rod, edge, s } => {
            let BodyLayout::Rod { offset, node_count } = topo.rods[rod] else { unreachable!() };
            let a = edge;
            let b = (edge + 1) % node_count;
            for (node, w) in [(a, 1.0 - s), (b, s)] {
                for d in 0..3 {
                    out.push((offset + 4 * node + d, sign * w * rows.column(d).into_owned()));
                }
            }
        }
        ContactSide::Body { body } => {
            let BodyLayout::Rigid { offset, rotation, com } = &topo.bodies[body] else { unreachable!() };
            let r = p - com;
            for k in 0..3 {
                // Angular DoF k: c_j · (R e_k × r) = e_k · Rᵀ (r × c_j).
                let mut coeff = Vec3::zeros();
                for j in 0..3 {
                    coeff[j] = (rotation.transpose() * r.cross(&frame.column(j).into_owned()))[k];
                }
                out.push((offset + k, sign * coeff));
                out.push((offset + 3 + k, sign * rows.column(k).into_owned()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translating_body_on_static_ground() {
        let topo = SystemTopology {
            rods: vec![],
            bodies: vec![
                BodyLayout::Rigid { offset: 0, rotation: Mat3::identity(), com: Vec3::new(0.0, 0.0, 1.0) },
                BodyLayout::Rigid { offset: 6, rotation: Mat3::identity(), com: Vec3::zeros() },
            ],
            n_v: 12,
        };
        let c = ContactPoint {
            a: ContactSide::Body { body: 0 },
            b: ContactSide::Body { body: 1 },
            position: Vec3::zeros(),
            normal: Vec3::z(),
            phi: 0.0,
            mu: 0.5,
            patch: None,
        };
        let j = contact_jacobian(&[c], &topo);
        let mut v = vec![0.0; 12];
        v[3..6].copy_from_slice(&[0.3, -0.2, 0.7]);
        let vc = j.velocities(&v);
        let expected = c.frame().transpose() * Vec3::new(0.3, -0.2, 0.7);
        assert!((Vec3::from_column_slice(&vc) - expected).norm() < 1e-15);
    }

    #[test]
    fn node_contact_selects_node_dofs() {
        let topo = SystemTopology { rods: vec![BodyLayout::Rod { offset: 0, node_count: 3 }], bodies: vec![], n_v: 11 };
        let n = Vec3::new(0.0, 0.6, 0.8);
        let c = ContactPoint {
            a: ContactSide::Rod { rod: 0, edge: 1, s: 0.0 },
            b: ContactSide::Rod { rod: 0, edge: 0, s: 0.0 },
            position: Vec3::zeros(),
            normal: n,
            phi: 0.0,
            mu: 0.0,
            patch: None,
        };
        let j = contact_jacobian(&[c], &topo).to_dense();
        let f = c.frame();
        for d in 0..3 {
            for k in 0..3 {
                assert!((j[(4 + d, k)] - f[(d, k)]).abs() < 1e-15);
                assert!((j[(d, k)] + f[(d, k)]).abs() < 1e-15);
            }
        }
        assert!(j.row(3).iter().all(|x| *x == 0.0));
    }
}
