use crate::math::{Mat3, Vec3};

/// Euclidean projection onto `{‖x_t‖ ≤ m x_n}` (components `[t1, t2, n]`)
/// and its Jacobian.
pub fn project_cone(x: &Vec3, m: f64) -> (Vec3, Mat3) {
    let n = x.z;
    if m == 0.0 {
        return if n > 0.0 {
            (Vec3::new(0.0, 0.0, n), Mat3::from_diagonal(&Vec3::new(0.0, 0.0, 1.0)))
        } else {
            (Vec3::zeros(), Mat3::zeros())
        };
    }
    let t = x.xy().norm();
    if t <= m * n {
        return (*x, Mat3::identity());
    }
    if m * t <= -n {
        return (Vec3::zeros(), Mat3::zeros());
    }
    let u = x.xy() / t;
    let k = 1.0 / (1.0 + m * m);
    let a = (n + m * t) * k;
    let p = Vec3::new(m * a * u.x, m * a * u.y, a);
    let mut d = Mat3::zeros();
    let uu = u * u.transpose();
    let tt = m * (m * k * uu + (a / t) * (nalgebra::Matrix2::identity() - uu));
    d.fixed_view_mut::<2, 2>(0, 0).copy_from(&tt);
    d[(0, 2)] = m * k * u.x;
    d[(1, 2)] = m * k * u.y;
    d[(2, 0)] = m * k * u.x;
    d[(2, 1)] = m * k * u.y;
    d[(2, 2)] = k;
    (p, d)
}

/// Distance-like violation of `λ ∈ {‖λ_t‖ ≤ μ λ_n}`, zero inside.
pub fn cone_violation(l: &Vec3, mu: f64) -> f64 {
    let t = l.xy().norm();
    (t - mu * l.z).max(-l.z).max(0.0)
}

/// Violation of `w ∈ {μ ‖w_t‖ ≤ w_n}`, zero inside.
pub fn dual_cone_violation(w: &Vec3, mu: f64) -> f64 {
    (mu * w.xy().norm() - w.z).max(0.0)
}
