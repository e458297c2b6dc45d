//! Small vector helpers shared across the crate.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Minimal rotation carrying unit vector `from` onto unit vector `to`,
/// applied to `u`.
///
/// Undefined for antiparallel inputs; callers check `1 + from·to` first.
pub fn parallel_transport(from: &Vec3, to: &Vec3, u: &Vec3) -> Vec3 {
    let c = from.dot(to);
    let b = from.cross(to);
    c * u + b.cross(u) + (b.dot(u) / (1.0 + c)) * b
}

/// Unit vector perpendicular to `t`.
pub fn any_perpendicular(t: &Vec3) -> Vec3 {
    let a = if t.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let p = a - a.dot(t) * t;
    p.normalize()
}

/// Orthonormal tangent pair completing `n` to a right-handed frame `[t1, t2, n]`.
pub fn contact_frame(n: &Vec3) -> Mat3 {
    let t1 = any_perpendicular(n);
    let t2 = n.cross(&t1);
    Mat3::from_columns(&[t1, t2, *n])
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotate `u` (assumed perpendicular to unit `axis`) by `angle` about `axis`.
pub fn rotate_perpendicular(u: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    angle.cos() * u + angle.sin() * axis.cross(u)
}

/// Signed angle from `a` to `b` about `axis`; both perpendicular to `axis`.
pub fn signed_angle(a: &Vec3, b: &Vec3, axis: &Vec3) -> f64 {
    a.cross(b).dot(axis).atan2(a.dot(b))
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(mut a: f64) -> f64 {
    use std::f64::consts::PI;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_maps_tangent_and_preserves_perpendicularity() {
        let a = Vec3::new(1.0, 0.2, -0.3).normalize();
        let b = Vec3::new(-0.1, 1.0, 0.4).normalize();
        assert!((parallel_transport(&a, &b, &a) - b).norm() < 1e-14);
        let u = any_perpendicular(&a);
        let w = parallel_transport(&a, &b, &u);
        assert!(w.dot(&b).abs() < 1e-14);
        assert!((w.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn contact_frame_is_right_handed() {
        let n = Vec3::new(0.3, -0.4, 0.5).normalize();
        let f = contact_frame(&n);
        assert!((f.transpose() * f - Mat3::identity()).norm() < 1e-14);
        assert!((f.determinant() - 1.0).abs() < 1e-14);
        assert_eq!(f.column(2), n);
    }

    #[test]
    fn signed_angle_sign() {
        let z = Vec3::z();
        assert!((signed_angle(&Vec3::x(), &Vec3::y(), &z) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(3.5 * std::f64::consts::PI) + 0.5 * std::f64::consts::PI).abs() < 1e-12);
    }
}
