#![allow(dead_code)]

use std::sync::Arc;

use filament_sim::collision::ContactJacobian;
use filament_sim::contact_solver::{solve_cone_qp, ConeProblem, SapWorkspace, SolverConfig};
use filament_sim::math::Vec3;
use filament_sim::oracles::{dense_cone_qp, fd_gradient, fd_jacobian, FdConfig};
use filament_sim::rod::{
    elastic_energy, elastic_gradient, elastic_hessian, hessian_pattern, CrossSection, RestShape, RodParameters,
    RodState,
};
use filament_sim::sparse::SymMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_state(rng: &mut ChaCha8Rng, nodes: usize, closed: bool) -> RodState {
    let pts: Vec<Vec3> = (0..nodes)
        .map(|i| {
            let s = i as f64 * if closed { std::f64::consts::TAU / nodes as f64 } else { 0.5 };
            Vec3::new(s.cos(), s.sin(), if closed { 0.0 } else { 0.2 * s })
        })
        .collect();
    let rest = if rng.random_bool(0.5) { RestShape::Initial } else { RestShape::Straight };
    let s = if closed { RodState::closed(pts, rest) } else { RodState::open(pts, rest) }.unwrap();
    // Perturb away from the anchors so the frame-transport terms are active.
    let q: Vec<f64> = s.q().iter().map(|x| x + rng.random_range(-0.15..0.15)).collect();
    s.with_q(&q)
}

pub fn random_params(rng: &mut ChaCha8Rng) -> RodParameters {
    let cs = CrossSection::Rectangular { width: rng.random_range(0.1..0.3), height: rng.random_range(0.1..0.3) };
    RodParameters::new(rng.random_range(1.0..5.0), rng.random_range(0.5..2.0), cs, 1.0, 0.0, 0.0).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Worst relative gradient error against central differences of the energy
/// over `trials` random 8-node rods (every fifth closed).
pub fn worst_gradient_error(seed: u64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).fold(0.0, |worst, trial| {
        let s = random_state(&mut rng, 8, trial % 5 == 4);
        let p = random_params(&mut rng);
        let g = elastic_gradient(&s, &p).unwrap();
        let fd = fd_gradient(|q| elastic_energy(&s.with_q(q), &p).unwrap().total(), &s.q(), FdConfig::default());
        worst.max(rel_err(&g, &fd))
    })
}

/// Worst relative Hessian error against differenced analytic gradients.
pub fn worst_hessian_error(seed: u64, trials: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).fold(0.0, |worst, trial| {
        let s = random_state(&mut rng, 8, trial % 5 == 4);
        let p = random_params(&mut rng);
        let pat = Arc::new(hessian_pattern(&s));
        let k = elastic_hessian(&s, &p, &pat).unwrap().to_dense();
        let cols = fd_jacobian(|q| elastic_gradient(&s.with_q(q), &p).unwrap(), &s.q(), FdConfig::default());
        let scale = cols.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut err = 0.0f64;
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                err = err.max((k[(i, j)] - v).abs());
            }
        }
        worst.max(err / scale)
    })
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    b.transpose() * b + DMatrix::identity(n, n) * 0.5
}

/// Up to 12 DoFs and 5 contacts with random couplings, friction and bias.
pub fn random_problem(rng: &mut ChaCha8Rng) -> ConeProblem {
    let n = rng.random_range(3..=12);
    let nc = rng.random_range(1..=(n / 3).min(5));
    let blocks = (0..nc)
        .map(|_| {
            let mut dofs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
            if dofs.is_empty() {
                dofs.push(rng.random_range(0..n));
            }
            dofs.into_iter()
                .map(|d| (d, Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect()
        })
        .collect();
    ConeProblem {
        s: SymMatrix::from_dense(&random_spd(rng, n), 0.0),
        v_star: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        jacobian: ContactJacobian { n_v: n, blocks },
        // Non-positive normal bias keeps v = 0 feasible.
        bias: (0..nc).flat_map(|_| [0.0, 0.0, rng.random_range(-0.2..=0.0)]).collect(),
        mu: (0..nc).map(|_| rng.random_range(0.0..1.0)).collect(),
        normal_compliance: vec![None; nc],
    }
}

pub fn s_norm(s: &SymMatrix, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    d.iter().zip(s.mul_vec(&d)).map(|(x, y)| x * y).sum::<f64>().sqrt()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct OracleGap {
    /// Velocity difference in the S-norm.
    pub velocity: f64,
    /// Largest impulse component difference.
    pub impulse: f64,
    /// Largest certificate entry of the iterative solver.
    pub certificate: f64,
}

/// Worst disagreement between the iterative solver and the dense oracle.
pub fn worst_oracle_gap(seed: u64, trials: usize) -> OracleGap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ws = SapWorkspace::default();
    let mut worst = OracleGap::default();
    for _ in 0..trials {
        let p = random_problem(&mut rng);
        let ours = solve_cone_qp(&p, &SolverConfig::default(), &mut ws).unwrap();
        let reference = dense_cone_qp(&p).unwrap();
        worst.velocity = worst.velocity.max(s_norm(&p.s, &ours.v, &reference.v));
        let dl = ours.lambda.iter().zip(&reference.lambda).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst.impulse = worst.impulse.max(dl);
        worst.certificate = worst.certificate.max(ours.certificate.max());
    }
    worst
}
