use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Quat, Vec3};

use super::CollisionError;

/// Rigid placement: `x_world = rotation * x_local + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Quat,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Quat::identity(), translation: Vec3::zeros() }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self { rotation: Quat::identity(), translation: t }
    }

    pub fn new(rotation: Quat, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn matrix(&self) -> Mat3 {
        *self.rotation.to_rotation_matrix().matrix()
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation.inverse() * (p - self.translation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ShapeKind {
    Sphere { radius: f64 },
    /// Segment along local z from `-half_length` to `+half_length`, swept by `radius`.
    Capsule { radius: f64, half_length: f64 },
    Box { half_extents: Vec3 },
    /// The region `z <= 0` of the local frame.
    Halfspace,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Sphere { .. } => "sphere",
            ShapeKind::Capsule { .. } => "capsule",
            ShapeKind::Box { .. } => "box",
            ShapeKind::Halfspace => "halfspace",
        }
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        let ok = match *self {
            ShapeKind::Sphere { radius } => radius > 0.0 && radius.is_finite(),
            ShapeKind::Capsule { radius, half_length } => {
                radius > 0.0 && half_length >= 0.0 && radius.is_finite() && half_length.is_finite()
            }
            ShapeKind::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0 && h.is_finite()),
            ShapeKind::Halfspace => true,
        };
        if ok {
            Ok(())
        } else {
            Err(CollisionError::InvalidShape(format!("{self:?}")))
        }
    }

    /// Principal moments of inertia of a uniform solid of mass `mass`.
    pub fn inertia_diagonal(&self, mass: f64) -> Vec3 {
        match *self {
            ShapeKind::Sphere { radius } => Vec3::repeat(0.4 * mass * radius * radius),
            ShapeKind::Box { half_extents: h } => {
                let s = mass / 3.0;
                Vec3::new(s * (h.y * h.y + h.z * h.z), s * (h.x * h.x + h.z * h.z), s * (h.x * h.x + h.y * h.y))
            }
            ShapeKind::Capsule { radius, half_length } => {
                // Solid cylinder of the full capsule length.
                let l = 2.0 * (half_length + radius);
                let axial = 0.5 * mass * radius * radius;
                let lateral = mass * (3.0 * radius * radius + l * l) / 12.0;
                Vec3::new(lateral, lateral, axial)
            }
            ShapeKind::Halfspace => Vec3::repeat(f64::INFINITY),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= o.max[k] && o.min[k] <= self.max[k])
    }

    pub fn inflated(&self, d: f64) -> Aabb {
        Aabb { min: self.min - Vec3::repeat(d), max: self.max + Vec3::repeat(d) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub kind: ShapeKind,
    pub pose: Pose,
}

impl Shape {
    pub fn new(kind: ShapeKind, pose: Pose) -> Self {
        Self { kind, pose }
    }

    /// Capsule spanning the segment `a`–`b`.
    pub fn capsule_between(a: &Vec3, b: &Vec3, radius: f64) -> Self {
        let d = b - a;
        let len = d.norm();
        let rotation = if len > 0.0 {
            Quat::rotation_between(&Vec3::z(), &(d / len)).unwrap_or_else(|| Quat::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI))
        } else {
            Quat::identity()
        };
        Shape::new(ShapeKind::Capsule { radius, half_length: 0.5 * len }, Pose::new(rotation, 0.5 * (a + b)))
    }

    /// Box of cross-section `width × height` around the segment `a`–`b`,
    /// with local x along `d1`.
    pub fn box_between(a: &Vec3, b: &Vec3, d1: &Vec3, width: f64, height: f64) -> Self {
        let t = (b - a).normalize();
        let x = (d1 - d1.dot(&t) * t).normalize();
        let y = t.cross(&x);
        let m = Mat3::from_columns(&[x, y, t]);
        let rotation = Quat::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m));
        let half = Vec3::new(0.5 * width, 0.5 * height, 0.5 * (b - a).norm());
        Shape::new(ShapeKind::Box { half_extents: half }, Pose::new(rotation, 0.5 * (a + b)))
    }

    /// End points of a capsule's core segment.
    pub fn segment(&self) -> Option<(Vec3, Vec3)> {
        match self.kind {
            ShapeKind::Capsule { half_length, .. } => {
                let a = self.pose.transform_point(&Vec3::new(0.0, 0.0, -half_length));
                let b = self.pose.transform_point(&Vec3::new(0.0, 0.0, half_length));
                Some((a, b))
            }
            _ => None,
        }
    }

    /// Outward normal of a halfspace boundary.
    pub fn halfspace_normal(&self) -> Vec3 {
        self.pose.rotation * Vec3::z()
    }

    /// World-frame vertices of a box.
    pub fn box_vertices(&self) -> Option<[Vec3; 8]> {
        match self.kind {
            ShapeKind::Box { half_extents: h } => {
                let mut out = [Vec3::zeros(); 8];
                for (i, v) in out.iter_mut().enumerate() {
                    let s = Vec3::new(
                        if i & 1 == 0 { -h.x } else { h.x },
                        if i & 2 == 0 { -h.y } else { h.y },
                        if i & 4 == 0 { -h.z } else { h.z },
                    );
                    *v = self.pose.transform_point(&s);
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Bounding box; `None` for unbounded shapes.
    pub fn aabb(&self) -> Option<Aabb> {
        let c = self.pose.translation;
        match self.kind {
            ShapeKind::Sphere { radius } => Some(Aabb { min: c - Vec3::repeat(radius), max: c + Vec3::repeat(radius) }),
            ShapeKind::Capsule { radius, .. } => {
                let (a, b) = self.segment().unwrap();
                Some(Aabb { min: a.inf(&b) - Vec3::repeat(radius), max: a.sup(&b) + Vec3::repeat(radius) })
            }
            ShapeKind::Box { half_extents } => {
                let r = self.pose.matrix().abs() * half_extents;
                Some(Aabb { min: c - r, max: c + r })
            }
            ShapeKind::Halfspace => None,
        }
    }

    /// Signed distance from a world point to the shape surface.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let l = self.pose.inverse_transform_point(p);
        match self.kind {
            ShapeKind::Sphere { radius } => l.norm() - radius,
            ShapeKind::Capsule { radius, half_length } => {
                let z = l.z.clamp(-half_length, half_length);
                (l - Vec3::new(0.0, 0.0, z)).norm() - radius
            }
            ShapeKind::Box { half_extents } => box_sdf(&l, &half_extents),
            ShapeKind::Halfspace => l.z,
        }
    }
}

/// Signed distance to an origin-centred box in its own frame.
pub fn box_sdf(p: &Vec3, h: &Vec3) -> f64 {
    let q = p.abs() - h;
    let outside = q.sup(&Vec3::zeros()).norm();
    let inside = q.max().min(0.0);
    outside + inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capsule_between_recovers_segment() {
        let a = Vec3::new(0.1, -0.2, 0.3);
        let b = Vec3::new(-0.4, 0.5, 0.2);
        let s = Shape::capsule_between(&a, &b, 0.05);
        let (p, q) = s.segment().unwrap();
        assert!((p - a).norm() < 1e-14 && (q - b).norm() < 1e-14);
        assert!(s.signed_distance(&(0.5 * (a + b))) + 0.05 < 1e-14);
    }

    #[test]
    fn box_sdf_values() {
        let h = Vec3::new(1.0, 2.0, 3.0);
        assert!((box_sdf(&Vec3::zeros(), &h) + 1.0).abs() < 1e-15);
        assert!((box_sdf(&Vec3::new(2.0, 0.0, 0.0), &h) - 1.0).abs() < 1e-15);
        assert!((box_sdf(&Vec3::new(2.0, 3.0, 0.0), &h) - 2f64.sqrt()).abs() < 1e-15);
    }
}
