use nalgebra::{DMatrix, DVector};

use crate::contact_solver::{Certificate, ConeProblem, ContactMode, SolverError, SolverResult};

const MAX_ITERATIONS: usize = 2_000_000;
const STATIONARITY: f64 = 1e-10;

/// Reference solution of the contact problem by accelerated projected
/// gradient on the dual `min ½λᵀWλ + λᵀ(Jᵀv* − v̂)`, `λ ∈ C`, with
/// `W = Jᵀ S⁻¹ J`. Dense, for small instances only. Compliance is ignored.
pub fn dense_cone_qp(problem: &ConeProblem) -> Result<SolverResult, SolverError> {
    let n = problem.dim();
    let nc = problem.contact_count();
    let s = problem.s.to_dense();
    let s_inv = s.clone().try_inverse().ok_or_else(|| SolverError::FactorizationFailure("singular S".into()))?;
    let j = problem.jacobian.to_dense();
    let w = j.transpose() * &s_inv * &j;
    let v_star = DVector::from_column_slice(&problem.v_star);
    let c = j.transpose() * &v_star - DVector::from_column_slice(&problem.bias);

    let lip = if nc == 0 { 0.0 } else { w.clone().symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max) };
    let mut lambda = DVector::zeros(3 * nc);
    let mut iterations = 0;
    let mut converged = lip == 0.0;
    if !converged {
        let step = 1.0 / lip;
        let mut y = lambda.clone();
        let mut t = 1.0f64;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let grad = &w * &y + &c;
            let next = project_all(&(&y - step * &grad), &problem.mu);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let delta = &next - &lambda;
            // Restart momentum whenever the objective would increase.
            let restart = grad.dot(&delta) > 0.0;
            y = if restart { next.clone() } else { &next + ((t - 1.0) / t_next) * &delta };
            t = if restart { 1.0 } else { t_next };
            lambda = next;
            let g = &w * &lambda + &c;
            let pg = &lambda - project_all(&(&lambda - &g), &problem.mu);
            if pg.norm() <= STATIONARITY * (1.0 + c.norm()) {
                converged = true;
                break;
            }
        }
    }
    let v = &v_star + &s_inv * (&j * &lambda);
    let result = result_from(problem, &j, v, lambda, iterations, n);
    if converged {
        Ok(result)
    } else {
        Err(SolverError::MaxIterations(Box::new(result)))
    }
}

fn result_from(p: &ConeProblem, j: &DMatrix<f64>, v: DVector<f64>, lambda: DVector<f64>, iterations: usize, n: usize) -> SolverResult {
    let gap = j.transpose() * &v - DVector::from_column_slice(&p.bias);
    let s = p.s.to_dense();
    let residual_vec = &s * (&v - DVector::from_column_slice(&p.v_star)) - j * &lambda;
    let scale = (&s * DVector::from_column_slice(&p.v_star)).norm().max((j * &lambda).norm());
    let momentum_residual = if scale > 0.0 { residual_vec.norm() / scale } else { residual_vec.norm() };
    let modes = (0..p.contact_count())
        .map(|i| {
            let ln = lambda[3 * i + 2];
            let lt = lambda[3 * i].hypot(lambda[3 * i + 1]);
            if ln <= 0.0 {
                ContactMode::Open
            } else if lt < p.mu[i] * ln * (1.0 - 1e-9) {
                ContactMode::Stick
            } else {
                ContactMode::Slip
            }
        })
        .collect();
    debug_assert_eq!(v.len(), n);
    SolverResult {
        certificate: Certificate::evaluate(lambda.as_slice(), gap.as_slice(), &p.mu),
        v: v.as_slice().to_vec(),
        lambda: lambda.as_slice().to_vec(),
        gap_velocity: gap.as_slice().to_vec(),
        iterations,
        momentum_residual,
        modes,
    }
}

/// Blockwise projection onto `{‖(x, y)‖ ≤ μ z}`, written out from the
/// closed form of the second-order-cone projection.
fn project_all(x: &DVector<f64>, mu: &[f64]) -> DVector<f64> {
    let mut out = x.clone();
    for (i, &m) in mu.iter().enumerate() {
        let (a, b, z) = (x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        let r = a.hypot(b);
        let (pa, pb, pz) = if r <= m * z {
            (a, b, z)
        } else if m * r <= -z {
            (0.0, 0.0, 0.0)
        } else {
            let zn = (z + m * r) / (1.0 + m * m);
            if r > 0.0 {
                (m * zn * a / r, m * zn * b / r, zn)
            } else {
                (0.0, 0.0, zn.max(0.0))
            }
        };
        out[3 * i] = pa;
        out[3 * i + 1] = pb;
        out[3 * i + 2] = pz;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::ContactJacobian;
    use crate::math::Vec3;
    use crate::sparse::SymMatrix;

    #[test]
    fn frictionless_unit_impulse() {
        let p = ConeProblem {
            s: SymMatrix::from_dense(&DMatrix::identity(1, 1), 0.0),
            v_star: vec![-1.0],
            jacobian: ContactJacobian { n_v: 1, blocks: vec![vec![(0, Vec3::new(0.0, 0.0, 1.0))]] },
            bias: vec![0.0; 3],
            mu: vec![0.0],
            normal_compliance: vec![None],
        };
        let r = dense_cone_qp(&p).unwrap();
        assert!((r.lambda[2] - 1.0).abs() < 1e-10);
        assert!(r.v[0].abs() < 1e-10);
    }

    #[test]
    fn unconstrained_keeps_free_velocity() {
        let p = ConeProblem {
            s: SymMatrix::from_dense(&(DMatrix::identity(2, 2) * 3.0), 0.0),
            v_star: vec![0.5, -2.0],
            jacobian: ContactJacobian { n_v: 2, blocks: vec![] },
            bias: vec![],
            mu: vec![],
            normal_compliance: vec![],
        };
        assert_eq!(dense_cone_qp(&p).unwrap().v, vec![0.5, -2.0]);
    }
}
