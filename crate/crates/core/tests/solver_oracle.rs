mod common;

use filament_sim::collision::ContactJacobian;
use filament_sim::contact_solver::{
    partition_dofs, recover_nonparticipating, schur_complement, solve_cone_qp, ConeProblem, SapWorkspace,
    SchurCache, SolverConfig,
};
use filament_sim::math::Vec3;
use filament_sim::oracles::dense_cone_qp;
use filament_sim::sparse::SymMatrix;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn solver_matches_dense_oracle_on_random_problems() {
    let gap = common::worst_oracle_gap(11, 100);
    assert!(gap.velocity <= 1e-6, "{gap:?}");
    assert!(gap.impulse <= 1e-5, "{gap:?}");
    assert!(gap.certificate <= 1e-6, "{gap:?}");
}

#[test]
fn schur_reduction_reproduces_full_space_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = 12;
        let a = SymMatrix::from_dense(&common::random_spd(&mut rng, n), 0.0);
        let v_star: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dofs = [1, 4, 7, 8];
        let blocks = vec![
            dofs[..2].iter().map(|&d| (d, Vec3::new(0.3, -0.2, 1.0))).collect(),
            dofs[2..].iter().map(|&d| (d, Vec3::new(-0.5, 0.1, 0.8))).collect(),
        ];
        let jac = ContactJacobian { n_v: n, blocks };
        let full = ConeProblem {
            s: a.clone(),
            v_star: v_star.clone(),
            jacobian: jac.clone(),
            bias: vec![0.0, 0.0, 0.1, 0.0, 0.0, -0.05],
            mu: vec![0.4, 0.2],
            normal_compliance: vec![None; 2],
        };
        let direct = dense_cone_qp(&full).unwrap();

        let part = partition_dofs(&a, &jac);
        let red = schur_complement(&part, &mut SchurCache::default()).unwrap();
        let reduced = ConeProblem {
            s: red.s.clone(),
            v_star: part.gather_participating(&v_star),
            jacobian: part.jacobian.clone(),
            ..full.clone()
        };
        let r = solve_cone_qp(&reduced, &SolverConfig::default(), &mut SapWorkspace::default()).unwrap();
        let dv_p: Vec<f64> = r.v.iter().zip(&reduced.v_star).map(|(x, y)| x - y).collect();
        let v_n = recover_nonparticipating(&part, &red, &dv_p, &part.gather_non_participating(&v_star));
        let v = part.scatter(&r.v, &v_n);
        let gap = DVector::from_column_slice(&v) - DVector::from_column_slice(&direct.v);
        assert!(gap.amax() < 1e-6, "gap {gap}");
    }
}
