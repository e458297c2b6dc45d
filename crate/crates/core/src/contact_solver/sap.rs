//! Newton solver on the regularized primal
//! `ℓ(v) = ½‖v − v*‖²_S + Σ ½ γᵢᵀ Rᵢ γᵢ`, with
//! `γᵢ = R^{-1/2} P(−R^{-1/2}(vcᵢ − v̂ᵢ))` projected onto the scaled cone.

use std::sync::Arc;

use crate::math::{Mat3, Vec3};
use crate::sparse::{Ordering, SparsePattern, SymMatrix, SymbolicCholesky};

use super::cone::project_cone;
use super::{Certificate, ConeProblem, ContactMode, SolverConfig, SolverError, SolverResult};

/// Reusable state across solves: the symbolic factorization of the Newton
/// matrix, kept while the pattern does not change.
#[derive(Debug, Default)]
pub struct SapWorkspace {
    symbolic: Option<Arc<SymbolicCholesky>>,
}

impl SapWorkspace {
    fn symbolic_for(&mut self, pattern: &Arc<SparsePattern>) -> Arc<SymbolicCholesky> {
        match &self.symbolic {
            Some(s) if **s.pattern() == **pattern => Arc::clone(s),
            _ => {
                let s = Arc::new(SymbolicCholesky::analyze(Arc::clone(pattern), Ordering::MinimumDegree));
                self.symbolic = Some(Arc::clone(&s));
                s
            }
        }
    }
}

struct Regularization {
    /// `R^{-1/2}` diagonal per contact.
    r_inv_sqrt: Vec<Vec3>,
    r: Vec<Vec3>,
    mu_scaled: Vec<f64>,
}

fn regularization(p: &ConeProblem, epsilon: f64) -> Regularization {
    let diag = p.s.diagonal();
    let mut out = Regularization { r_inv_sqrt: vec![], r: vec![], mu_scaled: vec![] };
    for (i, block) in p.jacobian.blocks.iter().enumerate() {
        let w: f64 = block.iter().map(|(d, c)| c.norm_squared() / diag[*d]).sum::<f64>() / 3.0;
        let w = if w > 0.0 { w } else { 1.0 };
        let rt = epsilon * w;
        let rn = p.normal_compliance[i].unwrap_or(rt);
        out.r.push(Vec3::new(rt, rt, rn));
        out.r_inv_sqrt.push(Vec3::new(rt.sqrt().recip(), rt.sqrt().recip(), rn.sqrt().recip()));
        out.mu_scaled.push(p.mu[i] * (rt / rn).sqrt());
    }
    out
}

struct ContactEval {
    gamma: Vec3,
    g: Mat3,
}

fn eval_contact(reg: &Regularization, i: usize, vc: &Vec3, bias: &Vec3) -> ContactEval {
    let s = reg.r_inv_sqrt[i];
    let y = -(vc - bias).component_mul(&s);
    let (p, d) = project_cone(&y, reg.mu_scaled[i]);
    let sd = Mat3::from_diagonal(&s);
    ContactEval { gamma: p.component_mul(&s), g: sd * d * sd }
}

fn block_velocity(block: &[(usize, Vec3)], v: &[f64]) -> Vec3 {
    block.iter().fold(Vec3::zeros(), |acc, (d, c)| acc + v[*d] * c)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Evaluation {
    evals: Vec<ContactEval>,
    gammas: Vec<Vec3>,
    dv: Vec<f64>,
    grad: Vec<f64>,
    residual: f64,
}

fn evaluate(p: &ConeProblem, reg: &Regularization, bias: &[Vec3], v: &[f64], s_v_star: &[f64]) -> Evaluation {
    let evals: Vec<ContactEval> =
        p.jacobian.blocks.iter().enumerate().map(|(i, b)| eval_contact(reg, i, &block_velocity(b, v), &bias[i])).collect();
    let gammas: Vec<Vec3> = evals.iter().map(|e| e.gamma).collect();
    let lambda: Vec<f64> = gammas.iter().flat_map(|g| g.iter().copied()).collect();
    let j_gamma = p.jacobian.impulse(&lambda);
    let dv: Vec<f64> = v.iter().zip(&p.v_star).map(|(a, b)| a - b).collect();
    let grad: Vec<f64> = p.s.mul_vec(&dv).iter().zip(&j_gamma).map(|(a, b)| a - b).collect();
    // `|S||Δv|` bounds the rounding in `S Δv`, which dominates for stiff rods.
    let scale = norm(s_v_star).max(norm(&j_gamma)).max(norm(&p.s.abs_mul_vec(&dv)));
    let residual = if scale > 0.0 { norm(&grad) / scale } else { norm(&grad) };
    Evaluation { evals, gammas, dv, grad, residual }
}

/// Regularization levels, coarse to fine. Each level warm-starts the next;
/// jumping straight to a tiny regularization makes Newton crawl along the
/// cone boundary.
fn continuation(epsilon: f64) -> Vec<f64> {
    let mut levels = Vec::new();
    let mut e = 1e-2;
    while e > 1.5 * epsilon {
        levels.push(e);
        e *= 1e-1;
    }
    levels.push(epsilon);
    levels
}

const STAGE_TOLERANCE: f64 = 1e-6;
const PROXIMAL_ROUNDS: usize = 3;
const PROXIMAL_TARGET: f64 = 1e-10;

/// Solve the contact problem starting from `v*`.
pub fn solve_cone_qp(
    problem: &ConeProblem,
    config: &SolverConfig,
    workspace: &mut SapWorkspace,
) -> Result<SolverResult, SolverError> {
    solve_cone_qp_from(problem, config, workspace, None)
}

/// Regularized objective `ℓ(v)`.
fn objective(p: &ConeProblem, reg: &Regularization, bias: &[Vec3], v: &[f64]) -> f64 {
    let dv: Vec<f64> = v.iter().zip(&p.v_star).map(|(a, b)| a - b).collect();
    let mut l = 0.5 * dot(&dv, &p.s.mul_vec(&dv));
    for (i, b) in p.jacobian.blocks.iter().enumerate() {
        let g = eval_contact(reg, i, &block_velocity(b, v), &bias[i]).gamma;
        l += 0.5 * g.dot(&reg.r[i].component_mul(&g));
    }
    l
}

/// Like [`solve_cone_qp`], starting from `guess` instead when it has the
/// lower objective at the coarsest regularization.
pub fn solve_cone_qp_from(
    problem: &ConeProblem,
    config: &SolverConfig,
    workspace: &mut SapWorkspace,
    guess: Option<&[f64]>,
) -> Result<SolverResult, SolverError> {
    problem.validate()?;
    let n = problem.dim();
    let nc = problem.contact_count();
    let bias: Vec<Vec3> = (0..nc).map(|i| Vec3::from_column_slice(&problem.bias[3 * i..3 * i + 3])).collect();
    let blocks = &problem.jacobian.blocks;

    let mut entries = Vec::new();
    for j in 0..n {
        entries.extend(problem.s.pattern().column(j).iter().map(|&i| (i, j)));
    }
    for b in blocks {
        for (a, _) in b {
            entries.extend(b.iter().map(|(c, _)| (*a, *c)));
        }
    }
    let pattern = Arc::new(SparsePattern::from_entries(n, entries));
    let symbolic = workspace.symbolic_for(&pattern);
    let mut h = SymMatrix::zeros(Arc::clone(&pattern));

    let s_v_star = problem.s.mul_vec(&problem.v_star);
    let mut v = problem.v_star.clone();
    let mut iterations = 0;
    let levels = continuation(config.epsilon);
    let mut reg = regularization(problem, config.epsilon);
    let mut state = evaluate(problem, &reg, &bias, &v, &s_v_star);
    if state.residual <= config.tolerance {
        return Ok(finish(problem, &reg, &v, &state.gammas, 0, state.residual));
    }
    if let Some(g) = guess.filter(|g| g.len() == n) {
        let coarse = regularization(problem, levels[0]);
        if objective(problem, &coarse, &bias, g) < objective(problem, &coarse, &bias, &v) {
            v = g.to_vec();
        }
    }
    // After the ladder, proximal rounds re-solve at the finest level with
    // the rigid contacts' bias shifted by `Rγ` from the previous round. The
    // fixed point removes the yield `Rγ` that the regularization allows.
    let mut stage_bias = bias.clone();
    let mut level = 0;
    let mut rounds = 0;
    loop {
        let last = level + 1 >= levels.len();
        let tolerance = if last { config.tolerance } else { STAGE_TOLERANCE };
        reg = regularization(problem, levels[level.min(levels.len() - 1)]);
        loop {
            state = evaluate(problem, &reg, &stage_bias, &v, &s_v_star);
            if state.residual <= tolerance {
                break;
            }
            if iterations >= config.max_iterations {
                let result = finish(problem, &reg, &v, &state.gammas, iterations, state.residual);
                return Err(SolverError::MaxIterations(Box::new(result)));
            }
            iterations += 1;

            h.set_zero();
            for j in 0..n {
                for p in problem.s.pattern().col_range(j) {
                    h.add(problem.s.pattern().row_indices()[p], j, problem.s.values()[p]);
                }
            }
            for (b, e) in blocks.iter().zip(&state.evals) {
                if e.g == Mat3::zeros() {
                    continue;
                }
                for (da, ca) in b {
                    let gc = e.g * ca;
                    for (db, cb) in b {
                        h.add(*db, *da, cb.dot(&gc));
                    }
                }
            }
            let factor = symbolic.factor(&h).map_err(|e| SolverError::FactorizationFailure(e.to_string()))?;
            let mut step: Vec<f64> = state.grad.iter().map(|g| -g).collect();
            factor.solve_in_place(&mut step);

            let alpha = line_search(problem, &reg, &stage_bias, &v, &state.dv, &step);
            let mut moved = 0.0f64;
            for (vi, si) in v.iter_mut().zip(&step) {
                *vi += alpha * si;
                moved = moved.max((alpha * si).abs());
            }
            if moved <= 1e-15 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                // No representable progress at this level.
                state = evaluate(problem, &reg, &stage_bias, &v, &s_v_star);
                break;
            }
        }
        if !last {
            level += 1;
            continue;
        }
        let result = finish(problem, &reg, &v, &state.gammas, iterations, state.residual);
        if rounds == PROXIMAL_ROUNDS || result.certificate.max() <= PROXIMAL_TARGET {
            return Ok(result);
        }
        rounds += 1;
        for (i, b) in stage_bias.iter_mut().enumerate() {
            if problem.normal_compliance[i].is_none() {
                *b = bias[i] + reg.r[i].component_mul(&state.gammas[i]);
            }
        }
    }
}

/// Exact minimization of `ℓ(v + αΔ)` over `α ∈ [0, 1]`.
fn line_search(p: &ConeProblem, reg: &Regularization, bias: &[Vec3], v: &[f64], dv: &[f64], step: &[f64]) -> f64 {
    let s_step = p.s.mul_vec(step);
    let a0 = dot(dv, &s_step);
    let quad = dot(step, &s_step);
    let vc: Vec<Vec3> = p.jacobian.blocks.iter().map(|b| block_velocity(b, v)).collect();
    let u: Vec<Vec3> = p.jacobian.blocks.iter().map(|b| block_velocity(b, step)).collect();
    let derivs = |alpha: f64| {
        let mut d1 = a0 + alpha * quad;
        let mut d2 = quad;
        for i in 0..vc.len() {
            let e = eval_contact(reg, i, &(vc[i] + alpha * u[i]), &bias[i]);
            d1 -= e.gamma.dot(&u[i]);
            d2 += u[i].dot(&(e.g * u[i]));
        }
        (d1, d2)
    };
    let (f0, _) = derivs(0.0);
    if f0 >= 0.0 {
        return 0.0;
    }
    let (f1, _) = derivs(1.0);
    if f1 <= 0.0 {
        return 1.0;
    }
    // Safeguarded Newton on the monotone derivative.
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut alpha = -f0 / (f1 - f0);
    for _ in 0..100 {
        let (d1, d2) = derivs(alpha);
        if d1.abs() <= 1e-14 * f0.abs() {
            break;
        }
        if d1 < 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let newton = alpha - d1 / d2;
        alpha = if d2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 {
            break;
        }
    }
    alpha
}

fn finish(p: &ConeProblem, reg: &Regularization, v: &[f64], gammas: &[Vec3], iterations: usize, residual: f64) -> SolverResult {
    let vc = p.jacobian.velocities(v);
    let mut w: Vec<f64> = vc.iter().zip(&p.bias).map(|(a, b)| a - b).collect();
    let mut modes = Vec::with_capacity(gammas.len());
    for (i, g) in gammas.iter().enumerate() {
        if p.normal_compliance[i].is_some() {
            let rg = reg.r[i].component_mul(g);
            for k in 0..3 {
                w[3 * i + k] += rg[k];
            }
        }
        let mode = if g.z <= 0.0 {
            ContactMode::Open
        } else if g.xy().norm() < p.mu[i] * g.z * (1.0 - 1e-9) {
            ContactMode::Stick
        } else {
            ContactMode::Slip
        };
        modes.push(mode);
    }
    let lambda: Vec<f64> = gammas.iter().flat_map(|g| g.iter().copied()).collect();
    let certificate = Certificate::evaluate(&lambda, &w, &p.mu);
    SolverResult { v: v.to_vec(), lambda, gap_velocity: w, iterations, momentum_residual: residual, certificate, modes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::ContactJacobian;
    use nalgebra::DMatrix;

    fn point_mass(m: f64, v_star: Vec3, mu: f64, phi_rate: f64) -> ConeProblem {
        ConeProblem {
            s: SymMatrix::from_dense(&(DMatrix::identity(3, 3) * m), 0.0),
            v_star: v_star.as_slice().to_vec(),
            jacobian: ContactJacobian {
                n_v: 3,
                blocks: vec![vec![(0, Vec3::new(1.0, 0.0, 0.0)), (1, Vec3::new(0.0, 1.0, 0.0)), (2, Vec3::new(0.0, 0.0, 1.0))]],
            },
            bias: vec![0.0, 0.0, phi_rate],
            mu: vec![mu],
            normal_compliance: vec![None],
        }
    }

    #[test]
    fn resting_mass_sticks() {
        let p = point_mass(2.0, Vec3::new(0.01, 0.0, -0.1), 0.5, 0.0);
        let r = solve_cone_qp(&p, &SolverConfig::default(), &mut SapWorkspace::default()).unwrap();
        assert!(r.v.iter().all(|x| x.abs() < 1e-7), "{:?}", r.v);
        assert!((r.lambda[2] - 0.2).abs() < 1e-8);
        assert_eq!(r.modes, vec![ContactMode::Stick]);
        assert!(r.certificate.max() < 1e-8);
    }

    #[test]
    fn sliding_mass_slips_on_cone_boundary() {
        let p = point_mass(1.0, Vec3::new(1.0, 0.0, -0.1), 0.3, 0.0);
        let r = solve_cone_qp(&p, &SolverConfig::default(), &mut SapWorkspace::default()).unwrap();
        // The convex model slips with gap velocity on the dual-cone boundary.
        assert!((r.v[2] - 0.3 * r.v[0]).abs() < 1e-8, "{:?}", r.v);
        assert!((r.lambda[0] + 0.3 * r.lambda[2]).abs() < 1e-8);
        assert!((r.v[0] - 1.0 - r.lambda[0]).abs() < 1e-8);
        assert!((r.v[2] + 0.1 - r.lambda[2]).abs() < 1e-8);
        assert_eq!(r.modes, vec![ContactMode::Slip]);
        assert!(r.certificate.max() < 1e-8);
    }

    #[test]
    fn separating_mass_is_free() {
        let p = point_mass(1.0, Vec3::new(0.2, 0.0, 0.5), 0.3, 0.0);
        let r = solve_cone_qp(&p, &SolverConfig::default(), &mut SapWorkspace::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.modes, vec![ContactMode::Open]);
    }

    #[test]
    fn compliant_contact_is_spring_like() {
        let mut p = point_mass(1.0, Vec3::new(0.0, 0.0, -1.0), 0.0, 0.0);
        p.normal_compliance = vec![Some(1.0)];
        let r = solve_cone_qp(&p, &SolverConfig::default(), &mut SapWorkspace::default()).unwrap();
        // m (v − v*) = λ with λ = −v/R: v = −0.5.
        assert!((r.v[2] + 0.5).abs() < 1e-10);
        assert!(r.certificate.max() < 1e-10);
    }
}
