//! Independent reference computations for the test suite. Nothing here is
//! shared with the production code paths it checks.

mod dense_qp;
mod fd;

pub use dense_qp::dense_cone_qp;
pub use fd::{fd_gradient, fd_jacobian, FdConfig};

/// Tension ratio `T₂/T₁ = e^{μφ}` of a rope slipping over a fixed post.
pub fn capstan_ratio(mu: f64, phi: f64) -> f64 {
    (mu * phi).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capstan_values() {
        assert!((capstan_ratio(0.2, 2.0 * std::f64::consts::PI) - 3.5136).abs() < 1e-4);
        assert_eq!(capstan_ratio(0.0, 5.0), 1.0);
        assert_eq!(capstan_ratio(0.3, 0.0), 1.0);
    }
}
