use proptest::prelude::*;
use quadgrad::grid::{Grid, GridFunction};
use quadgrad::solve::{
    check_identity_phi1, construct_lower_solution, construct_upper_solution_p0, monotone_iterate, newton_direct,
    newton_transformed, residual_direct, to_transformed, MonotoneStart, SolverConfig,
};
use quadgrad::ProblemSpec;

fn problem(n: usize, h: f64, mu: f64) -> ProblemSpec {
    let g = Grid::interval(1.0, n).unwrap();
    ProblemSpec::with_constant_mu(g, |_, _| 1.0, move |_, _| h, mu).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monotone_sandwich_at_zero(h in 0.1f64..6.0, mu in 0.3f64..1.5) {
        let p = problem(63, h, mu);
        let cfg = SolverConfig::default();
        let alpha = construct_lower_solution(&p, 0.0).unwrap();
        let beta = construct_upper_solution_p0(&p).unwrap().unwrap();
        for (a, b) in alpha.values().iter().zip(beta.values()) {
            prop_assert!(a <= b);
        }
        let av = to_transformed(&p, &alpha).unwrap();
        let bv = to_transformed(&p, &beta).unwrap();
        let lo = monotone_iterate(&p, 0.0, &av, &bv, MonotoneStart::Lower, &cfg).unwrap();
        let hi = monotone_iterate(&p, 0.0, &av, &bv, MonotoneStart::Upper, &cfg).unwrap();
        prop_assert!(lo.converged && hi.converged);
        for k in 0..alpha.len() {
            let (l, u) = (lo.solution.values()[k], hi.solution.values()[k]);
            prop_assert!(l <= u + 1e-12);
            prop_assert!(alpha.values()[k] <= l + 1e-12 && u <= beta.values()[k] + 1e-12);
        }
        for r in [&lo, &hi] {
            prop_assert!(residual_direct(&p, 0.0, &r.solution).unwrap().sup_norm() <= 1e-9);
        }
    }

    #[test]
    fn formulations_agree(h in -3.0f64..3.0, lambda in 0.0f64..5.0, mu in 0.3f64..1.5) {
        let p = problem(63, h, mu);
        let cfg = SolverConfig::default();
        let z = GridFunction::zeros(*p.grid());
        let d = newton_direct(&p, lambda, &z, &cfg).unwrap();
        let t = newton_transformed(&p, lambda, &z, &cfg).unwrap();
        prop_assume!(d.converged && t.converged);
        prop_assert!(d.solution.distance(&t.solution).unwrap() <= 1e-8);
    }

    #[test]
    fn jacobian_matches_central_differences(h in -2.0f64..2.0, lambda in 0.0f64..8.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let p = problem(31, h, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = GridFunction::from_fn(*p.grid(), |x, _| 0.3 * (3.0 * x).cos() * (1.0 - 4.0 * x * x));
        let jac = quadgrad::solve::jacobian_direct(&p, lambda, &u);
        let eps = 1e-6;
        for _ in 0..10 {
            let dir: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dirf = GridFunction::new(*p.grid(), dir.clone()).unwrap();
            let plus = residual_direct(&p, lambda, &u.axpby(1.0, &dirf, eps).unwrap()).unwrap();
            let minus = residual_direct(&p, lambda, &u.axpby(1.0, &dirf, -eps).unwrap()).unwrap();
            let jd = jac.mul_vec(&dir);
            for k in 0..u.len() {
                let fd = (plus.values()[k] - minus.values()[k]) / (2.0 * eps);
                prop_assert!((fd - jd[k]).abs() <= 1e-5 * (1.0 + jd[k].abs()));
            }
        }
    }
}

#[test]
fn identity_gap_shrinks_with_the_mesh() {
    let mut gaps = Vec::new();
    for n in [31, 63, 127] {
        let p = problem(n, 2.0, 1.0);
        let z = GridFunction::zeros(*p.grid());
        let r = newton_direct(&p, 3.0, &z, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        let id = check_identity_phi1(&p, 3.0, &r.solution).unwrap();
        gaps.push(id.rel_gap / p.grid().spacing().powi(2));
    }
    assert!(gaps.iter().all(|&c| c < 10.0), "{gaps:?}");
}
