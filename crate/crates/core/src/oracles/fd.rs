/// Step policy for central differences: `h_i = scale · max(1, |q_i|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub scale: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { scale: 1e-6 }
    }
}

impl FdConfig {
    pub fn step(&self, qi: f64) -> f64 {
        assert!(self.scale > 0.0);
        self.scale * qi.abs().max(1.0)
    }
}

/// Central-difference gradient of a scalar field.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, q: &[f64], cfg: FdConfig) -> Vec<f64> {
    let mut x = q.to_vec();
    (0..q.len())
        .map(|i| {
            let h = cfg.step(q[i]);
            x[i] = q[i] + h;
            let fp = f(&x);
            x[i] = q[i] - h;
            let fm = f(&x);
            x[i] = q[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a vector field; column `j` is `∂f/∂q_j`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, q: &[f64], cfg: FdConfig) -> Vec<Vec<f64>> {
    let mut x = q.to_vec();
    (0..q.len())
        .map(|j| {
            let h = cfg.step(q[j]);
            x[j] = q[j] + h;
            let fp = f(&x);
            x[j] = q[j] - h;
            let fm = f(&x);
            x[j] = q[j];
            fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_identity_map() {
        let q = [0.3, -2.0, 5.0];
        let g = fd_gradient(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(), &q, FdConfig::default());
        for (a, b) in g.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = fd_gradient(|_| 4.2, &[1.0, 2.0], FdConfig::default());
        assert!(g.iter().all(|&v| v == 0.0));
    }
}
