mod common;

use filament_sim::collision::{closest_between_segments, point_contact_query_with_margin, Shape};
use filament_sim::contact_solver::{
    cone_violation, dual_cone_violation, project_cone, solve_cone_qp, ConeProblem, SapWorkspace, SolverConfig,
};
use filament_sim::math::Vec3;
use filament_sim::rod::{elastic_energy, elastic_gradient};
use filament_sim::sparse::SymMatrix;
use nalgebra::Rotation3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_invariant_under_rigid_motion(seed in any::<u64>(), axis in vec3(3.0), shift in vec3(5.0)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(&mut rng, 7, seed % 4 == 0);
        let p = common::random_params(&mut rng);
        let r = Rotation3::from_scaled_axis(axis).into_inner();
        let e0 = elastic_energy(&s, &p).unwrap();
        let e1 = elastic_energy(&s.rigidly_transformed(&r, &shift), &p).unwrap();
        let tol = 1e-9 * (1.0 + e0.total());
        prop_assert!((e0.stretch - e1.stretch).abs() <= tol);
        prop_assert!((e0.bend - e1.bend).abs() <= tol);
        prop_assert!((e0.twist - e1.twist).abs() <= tol);
    }

    #[test]
    fn elastic_forces_have_no_net_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(&mut rng, 8, seed % 3 == 0);
        let p = common::random_params(&mut rng);
        let g = elastic_gradient(&s, &p).unwrap();
        let scale = g.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut net = Vec3::zeros();
        for i in 0..s.node_count() {
            net += Vec3::new(g[4 * i], g[4 * i + 1], g[4 * i + 2]);
        }
        prop_assert!(net.norm() <= 1e-10 * scale, "net force {net}");
    }

    #[test]
    fn capsule_distance_matches_brute_force(
        a0 in vec3(1.0), a1 in vec3(1.0), b0 in vec3(1.0), b1 in vec3(1.0),
        ra in 0.01..0.1f64, rb in 0.01..0.1f64,
    ) {
        prop_assume!((a1 - a0).norm() > 0.05 && (b1 - b0).norm() > 0.05);
        let n = 400;
        let mut brute = f64::INFINITY;
        for i in 0..=n {
            let p = a0 + (a1 - a0) * (i as f64 / n as f64);
            for j in 0..=n {
                brute = brute.min((p - (b0 + (b1 - b0) * (j as f64 / n as f64))).norm());
            }
        }
        let (s, t) = closest_between_segments(&a0, &a1, &b0, &b1);
        let exact = (a0 + (a1 - a0) * s - b0 - (b1 - b0) * t).norm();
        // Sampling can only overestimate, by at most half a sample spacing per segment.
        let slack = 0.5 * ((a1 - a0).norm() + (b1 - b0).norm()) / n as f64;
        prop_assert!(exact <= brute + 1e-12 && brute <= exact + slack, "exact {exact} brute {brute}");

        let ca = Shape::capsule_between(&a0, &a1, ra);
        let cb = Shape::capsule_between(&b0, &b1, rb);
        let contacts = point_contact_query_with_margin(&ca, &cb, 10.0).unwrap();
        let phi = contacts.iter().map(|c| c.phi).fold(f64::INFINITY, f64::min);
        prop_assert!((phi - (exact - ra - rb)).abs() <= 1e-9, "phi {phi} vs {}", exact - ra - rb);
    }

    #[test]
    fn cone_projection_is_a_projection(x in vec3(10.0), mu in 0.0..2.0f64) {
        let (p, _) = project_cone(&x, mu);
        prop_assert!(cone_violation(&p, mu) <= 1e-12 * (1.0 + x.norm()));
        prop_assert!((project_cone(&p, mu).0 - p).norm() <= 1e-12 * (1.0 + x.norm()));
        // Moreau: x − P(x) lies in the polar cone, orthogonal to P(x).
        let r = p - x;
        prop_assert!(dual_cone_violation(&r, mu) <= 1e-12 * (1.0 + x.norm()));
        prop_assert!(r.dot(&p).abs() <= 1e-10 * (1.0 + x.norm_squared()));
    }

    #[test]
    fn contact_modes_are_scale_invariant(seed in any::<u64>(), scale in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::random_problem(&mut rng);
        let scaled = ConeProblem {
            s: SymMatrix::from_dense(&(p.s.to_dense() * scale), 0.0),
            v_star: p.v_star.iter().map(|v| v * scale).collect(),
            bias: p.bias.iter().map(|b| b * scale).collect(),
            ..p.clone()
        };
        let cfg = SolverConfig::default();
        let a = solve_cone_qp(&p, &cfg, &mut SapWorkspace::default()).unwrap();
        let b = solve_cone_qp(&scaled, &cfg, &mut SapWorkspace::default()).unwrap();
        // Modes can only flip for contacts sitting on a mode boundary.
        let margin = |l: &[f64]| l.chunks(3).map(|c| c[2].abs()).fold(f64::INFINITY, f64::min);
        if margin(&a.lambda) > 1e-6 {
            prop_assert_eq!(a.modes, b.modes);
        }
    }
}
