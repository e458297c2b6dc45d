use crate::math::Vec3;

use super::shape::{Aabb, Pose, Shape, ShapeKind};
use super::CollisionError;

/// Tetrahedral volume mesh carrying a piecewise-linear pressure field that
/// vanishes on the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureBody {
    pub vertices: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
    pub pressure: Vec<f64>,
    /// Maximum pressure of the field (Pa).
    pub modulus: f64,
}

/// Extent of the finite slab that stands in for a halfspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlabExtent {
    /// Centre of the slab's top face, in the halfspace's local frame.
    pub center: Vec3,
    pub half_width: f64,
    pub depth: f64,
}

impl Default for SlabExtent {
    fn default() -> Self {
        Self { center: Vec3::zeros(), half_width: 1.0, depth: 0.1 }
    }
}

impl PressureBody {
    pub fn transformed(&self, pose: &Pose) -> Self {
        let mut out = self.clone();
        out.vertices.iter_mut().for_each(|v| *v = pose.transform_point(v));
        out
    }

    pub fn tet_vertices(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn tet_aabb(&self, t: usize) -> Aabb {
        let v = self.tet_vertices(t);
        let mut min = v[0];
        let mut max = v[0];
        for p in &v[1..] {
            min = min.inf(p);
            max = max.sup(p);
        }
        Aabb { min, max }
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_vertices(t);
        (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
    }

    /// Affine pressure of tet `t` as `(gradient, offset)` with `p(x) = g·x + c`.
    pub fn tet_field(&self, t: usize) -> (Vec3, f64) {
        let [a, b, c, d] = self.tet_vertices(t);
        let [pa, pb, pc, pd] = self.tets[t].map(|i| self.pressure[i]);
        let m = crate::math::Mat3::from_rows(&[(b - a).transpose(), (c - a).transpose(), (d - a).transpose()]);
        let rhs = Vec3::new(pb - pa, pc - pa, pd - pa);
        let g = m.try_inverse().map(|inv| inv * rhs).unwrap_or_else(Vec3::zeros);
        (g, pa - g.dot(&a))
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            min = min.inf(v);
            max = max.sup(v);
        }
        Aabb { min, max }
    }
}

/// Mesh `shape` at `resolution` (subdivision level, at least 0) with
/// `p_max` at the interior vertices.
pub fn build_pressure_body(shape: &Shape, p_max: f64, resolution: usize) -> Result<PressureBody, CollisionError> {
    build_pressure_body_with_slab(shape, p_max, resolution, SlabExtent::default())
}

pub fn build_pressure_body_with_slab(
    shape: &Shape,
    p_max: f64,
    resolution: usize,
    slab: SlabExtent,
) -> Result<PressureBody, CollisionError> {
    shape.kind.validate()?;
    if !(p_max > 0.0) {
        return Err(CollisionError::InvalidShape(format!("pressure modulus {p_max}")));
    }
    let local = match shape.kind {
        ShapeKind::Sphere { radius } => sphere_mesh(radius, resolution),
        ShapeKind::Capsule { radius, half_length } => capsule_mesh(radius, half_length, resolution),
        ShapeKind::Box { half_extents } => box_mesh(&half_extents, resolution),
        ShapeKind::Halfspace => slab_mesh(&slab, resolution),
    };
    let (vertices, tets, level) = local;
    if !level.iter().any(|&l| l > 0.0) {
        return Err(CollisionError::ResolutionTooCoarse);
    }
    let body = PressureBody { vertices, tets, pressure: level.iter().map(|l| l * p_max).collect(), modulus: p_max };
    Ok(body.transformed(&shape.pose))
}

type Mesh = (Vec<Vec3>, Vec<[usize; 4]>, Vec<f64>);

/// Add tet `[a, b, c, d]`, flipping it to positive orientation.
fn push_tet(verts: &[Vec3], tets: &mut Vec<[usize; 4]>, t: [usize; 4]) {
    let [a, b, c, d] = t.map(|i| verts[i]);
    let vol = (b - a).cross(&(c - a)).dot(&(d - a));
    if vol.abs() < 1e-300 {
        return;
    }
    tets.push(if vol > 0.0 { t } else { [t[0], t[2], t[1], t[3]] });
}

fn icosphere(level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, p, 0.0),
        (1.0, p, 0.0),
        (-1.0, -p, 0.0),
        (1.0, -p, 0.0),
        (0.0, -1.0, p),
        (0.0, 1.0, p),
        (0.0, -1.0, -p),
        (0.0, 1.0, -p),
        (p, 0.0, -1.0),
        (p, 0.0, 1.0),
        (-p, 0.0, -1.0),
        (-p, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push((v[a] + v[b]).normalize());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    (v, f)
}

fn sphere_mesh(radius: f64, resolution: usize) -> Mesh {
    let (dirs, faces) = icosphere(resolution);
    let mut verts = vec![Vec3::zeros()];
    let mut level = vec![1.0];
    verts.extend(dirs.iter().map(|d| d * radius));
    level.extend(std::iter::repeat_n(0.0, dirs.len()));
    let mut tets = Vec::new();
    for [a, b, c] in faces {
        push_tet(&verts, &mut tets, [0, a + 1, b + 1, c + 1]);
    }
    (verts, tets, level)
}

fn capsule_mesh(radius: f64, half_length: f64, resolution: usize) -> Mesh {
    let sectors = 6 << resolution;
    let stations = (1usize << resolution).max(1);
    let mut verts = Vec::new();
    let mut level = Vec::new();
    let mut axis = Vec::new();
    let mut ring = Vec::new();
    for s in 0..=stations {
        let z = -half_length + 2.0 * half_length * s as f64 / stations as f64;
        axis.push(verts.len());
        verts.push(Vec3::new(0.0, 0.0, z));
        level.push(1.0);
        let start = verts.len();
        for k in 0..sectors {
            let a = std::f64::consts::TAU * k as f64 / sectors as f64;
            verts.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
            level.push(0.0);
        }
        ring.push(start);
    }
    let mut tets = Vec::new();
    for s in 0..stations {
        for k in 0..sectors {
            let k1 = (k + 1) % sectors;
            let (c0, c1) = (axis[s], axis[s + 1]);
            let (a0, b0) = (ring[s] + k, ring[s] + k1);
            let (a1, b1) = (ring[s + 1] + k, ring[s + 1] + k1);
            // Prism (c0, a0, b0) -> (c1, a1, b1) split into three tets.
            push_tet(&verts, &mut tets, [c0, a0, b0, c1]);
            push_tet(&verts, &mut tets, [a0, b0, c1, a1]);
            push_tet(&verts, &mut tets, [b0, c1, a1, b1]);
        }
    }
    for (s, dir) in [(0usize, -1.0), (stations, 1.0)] {
        let apex = verts.len();
        verts.push(Vec3::new(0.0, 0.0, dir * (half_length + radius)));
        level.push(0.0);
        for k in 0..sectors {
            let k1 = (k + 1) % sectors;
            push_tet(&verts, &mut tets, [axis[s], ring[s] + k, ring[s] + k1, apex]);
        }
    }
    (verts, tets, level)
}

fn box_mesh(h: &Vec3, resolution: usize) -> Mesh {
    let n = 1usize << resolution;
    let mut verts = vec![Vec3::zeros()];
    let mut level = vec![1.0];
    let mut index = std::collections::HashMap::new();
    let mut tets = Vec::new();
    let mut vid = |p: Vec3, verts: &mut Vec<Vec3>, level: &mut Vec<f64>| -> usize {
        let key = (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        *index.entry(key).or_insert_with(|| {
            verts.push(p);
            level.push(0.0);
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        for sign in [-1.0, 1.0] {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let point = |i: usize, j: usize| {
                let mut p = Vec3::zeros();
                p[axis] = sign * h[axis];
                p[u] = -h[u] + 2.0 * h[u] * i as f64 / n as f64;
                p[v] = -h[v] + 2.0 * h[v] * j as f64 / n as f64;
                p
            };
            for i in 0..n {
                for j in 0..n {
                    let q = [point(i, j), point(i + 1, j), point(i + 1, j + 1), point(i, j + 1)]
                        .map(|p| vid(p, &mut verts, &mut level));
                    push_tet(&verts, &mut tets, [0, q[0], q[1], q[2]]);
                    push_tet(&verts, &mut tets, [0, q[0], q[2], q[3]]);
                }
            }
        }
    }
    (verts, tets, level)
}

/// Slab below the local plane z = 0 with pressure rising linearly with depth.
fn slab_mesh(slab: &SlabExtent, resolution: usize) -> Mesh {
    let n = 4usize << resolution;
    let idx = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut verts = Vec::with_capacity(2 * (n + 1) * (n + 1));
    let mut level = Vec::with_capacity(verts.capacity());
    for k in 0..2 {
        for j in 0..=n {
            for i in 0..=n {
                let x = slab.center.x - slab.half_width + 2.0 * slab.half_width * i as f64 / n as f64;
                let y = slab.center.y - slab.half_width + 2.0 * slab.half_width * j as f64 / n as f64;
                let z = slab.center.z - slab.depth * k as f64;
                verts.push(Vec3::new(x, y, z));
                level.push(k as f64);
            }
        }
    }
    let mut tets = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let c = |di: usize, dj: usize, k: usize| idx(i + di, j + dj, k);
            // Hexahedron split into six tets sharing the main diagonal.
            let (v0, v6) = (c(0, 0, 0), c(1, 1, 1));
            let ring = [c(1, 0, 0), c(1, 1, 0), c(0, 1, 0), c(0, 1, 1), c(0, 0, 1), c(1, 0, 1)];
            for r in 0..6 {
                push_tet(&verts, &mut tets, [v0, v6, ring[r], ring[(r + 1) % 6]]);
            }
        }
    }
    (verts, tets, level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total_volume(b: &PressureBody) -> f64 {
        (0..b.tets.len()).map(|t| b.tet_volume(t)).sum()
    }

    #[test]
    fn sphere_mesh_pressures() {
        let s = Shape::new(ShapeKind::Sphere { radius: 0.5 }, Pose::from_translation(Vec3::new(1.0, 0.0, 0.0)));
        let b = build_pressure_body(&s, 1e5, 2).unwrap();
        assert_eq!(b.pressure[0], 1e5);
        assert!(b.vertices[1..].iter().all(|v| ((v - Vec3::new(1.0, 0.0, 0.0)).norm() - 0.5).abs() < 1e-12));
        assert!(b.pressure[1..].iter().all(|&p| p == 0.0));
        assert!(b.tets.iter().enumerate().all(|(t, _)| b.tet_volume(t) > 0.0));
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((total_volume(&b) - exact).abs() < 0.05 * exact);
    }

    #[test]
    fn capsule_axis_carries_peak_pressure() {
        let s = Shape::new(ShapeKind::Capsule { radius: 0.1, half_length: 0.3 }, Pose::identity());
        let b = build_pressure_body(&s, 2e4, 1).unwrap();
        for (v, p) in b.vertices.iter().zip(&b.pressure) {
            let on_axis = v.x.abs() < 1e-15 && v.y.abs() < 1e-15 && v.z.abs() <= 0.3 + 1e-15;
            assert_eq!(*p, if on_axis { 2e4 } else { 0.0 });
        }
        assert!((0..b.tets.len()).all(|t| b.tet_volume(t) > 0.0));
    }

    #[test]
    fn tet_field_reproduces_vertex_values() {
        let s = Shape::new(ShapeKind::Box { half_extents: Vec3::new(0.2, 0.3, 0.4) }, Pose::identity());
        let b = build_pressure_body(&s, 7.0, 1).unwrap();
        let exact = 8.0 * 0.2 * 0.3 * 0.4;
        assert!((total_volume(&b) - exact).abs() < 1e-12);
        for t in 0..b.tets.len() {
            let (g, c) = b.tet_field(t);
            for &i in &b.tets[t] {
                assert!((g.dot(&b.vertices[i]) + c - b.pressure[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn slab_pressure_grows_with_depth() {
        let s = Shape::new(ShapeKind::Halfspace, Pose::identity());
        let b = build_pressure_body(&s, 1e6, 0).unwrap();
        for t in 0..b.tets.len() {
            let (g, _) = b.tet_field(t);
            assert!((g - Vec3::new(0.0, 0.0, -1e7)).norm() < 1e-3);
        }
    }
}
