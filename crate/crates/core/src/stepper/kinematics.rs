use nalgebra::Quaternion;

use crate::math::{Quat, Vec3};

use super::system::{BodyMotion, System};
use super::{StepperConfig, StepperError};

/// `q + δt · ½ q_eval ⊗ (0, ω)` without normalization.
fn quaternion_update(q: &Quaternion<f64>, q_eval: &Quaternion<f64>, omega: &Vec3, dt: f64) -> Quaternion<f64> {
    q + q_eval * Quaternion::from_parts(0.0, *omega) * (0.5 * dt)
}

/// Orientation after one step with body-frame angular rate `omega`.
///
/// One fixed-point correction: the kinematic map is evaluated at the
/// θ-blend of the start and a first predicted orientation.
pub fn advance_orientation(q0: &Quat, omega: &Vec3, dt: f64, theta: f64) -> Quat {
    let q0 = q0.quaternion();
    let q1 = quaternion_update(q0, q0, omega, dt).normalize();
    let q_theta = (q0 * (1.0 - theta) + q1 * theta).normalize();
    Quat::from_quaternion(quaternion_update(q0, &q_theta, omega, dt))
}

/// Move every rod and body from the start-of-step state in `system` with
/// end-of-step velocities `v` (global layout), then store `v`.
pub fn advance_positions(system: &mut System, v: &[f64], cfg: &StepperConfig) -> Result<(), StepperError> {
    let dt = cfg.dt;
    let s = cfg.theta_vq;
    let mut offset = 0;
    for rod in &mut system.rods {
        let n = rod.state.dof_count();
        let v_new = &v[offset..offset + n];
        let q: Vec<f64> = rod
            .state
            .q()
            .iter()
            .zip(&rod.velocity)
            .zip(v_new)
            .map(|((q, v0), v1)| q + dt * ((1.0 - s) * v0 + s * v1))
            .collect();
        let mut state = rod.state.with_q(&q);
        state.reanchor()?;
        rod.state = state;
        rod.velocity.copy_from_slice(v_new);
        offset += n;
    }
    for b in &mut system.bodies {
        let w1 = Vec3::from_column_slice(&v[offset..offset + 3]);
        let l1 = Vec3::from_column_slice(&v[offset + 3..offset + 6]);
        let w = (1.0 - s) * b.angular_velocity + s * w1;
        let l = (1.0 - s) * b.linear_velocity + s * l1;
        let rotation = advance_orientation(&b.shape.pose.rotation, &w, dt, cfg.theta);
        b.shape.pose.rotation = rotation;
        b.shape.pose.translation += dt * l;
        b.linear_velocity = l1;
        b.angular_velocity = match b.motion {
            // Constant world-frame spin seen from the rotated body frame.
            BodyMotion::Kinematic { angular, .. } => rotation.inverse() * angular,
            _ => w1,
        };
        offset += 6;
    }
    system.time += dt;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_keeps_orientation() {
        let q0 = Quat::from_euler_angles(0.3, -0.2, 1.0);
        let q = advance_orientation(&q0, &Vec3::zeros(), 0.01, 1.0);
        assert!(q.angle_to(&q0) < 1e-15);
    }

    #[test]
    fn pure_spin_matches_exponential_map() {
        let q0 = Quat::from_euler_angles(0.1, 0.4, -0.7);
        let w = Vec3::new(0.5, -2.0, 1.0);
        let dt = 1e-4;
        let exact = q0 * Quat::from_scaled_axis(w * dt);
        for theta in [0.5, 1.0] {
            let q = advance_orientation(&q0, &w, dt, theta);
            assert!((q.quaternion().norm() - 1.0).abs() < 1e-15);
            assert!(q.angle_to(&exact) < 1e-10, "theta {theta}: {}", q.angle_to(&exact));
        }
    }
}
