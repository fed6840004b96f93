use proptest::prelude::*;
use quadgrad::grid::{Grid, GridFunction};
use quadgrad::solve::residual_direct;
use quadgrad::timemap::*;
use quadgrad::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(lc: f64, h: f64, t: f64) -> PhaseParams {
    PhaseParams::new(lc, 1.0, h, 1.0, t).unwrap()
}

fn case1() -> PhaseParams {
    params(1.0, 1.0, 1.0)
}

fn case3() -> PhaseParams {
    params(1.0, -1.0, 1.0)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

#[test]
fn potential_matches_quadrature_of_g() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (lc, h) in [(1.0, 1.0), (3.0, 1.0), (1.0, -1.0), (0.0, 2.0)] {
        let p = params(lc, h, 1.0);
        for _ in 0..100 {
            let v: f64 = rng.random_range(-0.99..10.0);
            let g = |x: f64| g_eval(&p, x).unwrap();
            let oracle = adaptive_simpson(&g, 0.0, v, 1e-14);
            let closed = potential_eval(&p, v).unwrap();
            assert!((closed - oracle).abs() <= 1e-10 * (1.0 + oracle.abs()), "v={v}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn pure_logarithmic_nonlinearity_vanishes_only_at_zero() {
    let p = params(1.0, 0.0, 1.0);
    for v in [-0.9, -0.3, 0.2, 5.0] {
        let g = g_eval(&p, v).unwrap();
        assert!(g.signum() == v.signum() && g != 0.0);
    }
    assert_eq!(g_eval(&p, 0.0).unwrap(), 0.0);
}

#[test]
fn equilibria_match_dense_sign_scan() {
    for (lc, h) in [(1.0, 1.0), (3.0, 1.0), (1.0, -1.0), (0.5, -1.5), (0.0, 1.0), (2.0, 0.5)] {
        let p = params(lc, h, 1.0);
        let xs: Vec<f64> = (1..200_000).map(|i| -1.0 + i as f64 * 1e-3 / 2.0).collect();
        let mut changes = 0;
        for w in xs.windows(2) {
            let (a, b) = (g_eval(&p, w[0]).unwrap(), g_eval(&p, w[1]).unwrap());
            if a.signum() != b.signum() {
                changes += 1;
            }
        }
        let eq = equilibria(&p);
        assert_eq!(eq.len(), changes, "lc={lc}, h={h}");
        for e in eq {
            assert!(g_eval(&p, e.v).unwrap().abs() <= 1e-10 * (1.0 + lc + h.abs()));
        }
    }
}

#[test]
fn time_map_limits_in_case_one() {
    let p = case1();
    let table = time_map_table(&p, &log_grid(A_MIN, A_MAX, A_SAMPLES)).unwrap();
    let max = table.t0.unwrap();
    assert!(table.t_plus.iter().all(|&t| t >= 0.0));
    assert!(time_map_positive(&p, 1e-3).unwrap() < 0.2 * max);
    // The decay at large `a` is logarithmic: T₊(a)·√(λc ln v_max(a)) → π.
    let a = 1e8;
    let ratio = time_map_positive(&p, a).unwrap() * (p.lc() * turning_point_positive(&p, a).unwrap().ln()).sqrt();
    assert!((ratio / std::f64::consts::PI - 1.0).abs() < 0.05, "{ratio}");
    let tail = log_grid(10.0, 1e8, 15);
    let values: Vec<f64> = tail.iter().map(|&a| time_map_positive(&p, a).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn degenerate_straight_line_motion_has_no_turning_point() {
    let p = params(0.0, 0.0, 1.0);
    assert!(matches!(time_map_positive(&p, 1.0), Err(quadgrad::Error::UnboundedOrbit { .. })));
}

#[test]
fn quadrature_agrees_with_shooting() {
    for p in [case1(), case3(), params(3.0, 1.0, 1.0)] {
        for a in [1e-3, 0.05, 0.4, 1.0, 3.0, 30.0] {
            let Ok(t) = time_map_positive(&p, a) else { continue };
            let shot = shoot_return_time(&p, a, t / 2e4).unwrap();
            assert!((t - shot).abs() <= 1e-6 * t, "a={a}: {t} vs {shot}");
        }
    }
}

#[test]
fn t0_is_stable_under_grid_refinement() {
    let p = case1();
    let (t0, _) = find_t0_with(&p, A_SAMPLES).unwrap();
    let (t0_fine, _) = find_t0_with(&p, 2 * A_SAMPLES - 1).unwrap();
    assert!((t0 - t0_fine).abs() <= 1e-4 * t0);
    assert!(find_t0(&case3()).is_err());
}

#[test]
fn energy_is_conserved_along_shots() {
    for (p, slopes) in [
        (case1().with_t(1.5).unwrap(), vec![2.0, 5.0, 10.0]),
        (case3().with_t(6.0).unwrap(), vec![-1.0, -0.2, 0.5, 1.0]),
    ] {
        for s in slopes {
            let r = shoot(&p, s);
            assert!(r.admissible);
            assert!(r.energy_drift <= 1e-8, "s={s}: {}", r.energy_drift);
            let fine = shoot_with(&p, s, 4 * DEFAULT_STEPS);
            assert!(fine.energy_drift <= 1e-10, "s={s}: {}", fine.energy_drift);
        }
    }
}

#[test]
fn end_value_is_continuous_in_the_slope() {
    let p = case3().with_t(5.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let s: f64 = rng.random_range(-1.1..1.1);
        let base = shoot(&p, s).end_value;
        let gaps: Vec<f64> = [1e-3, 1e-5, 1e-7]
            .iter()
            .map(|d| (shoot(&p, s + d).end_value - base).abs())
            .collect();
        assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0] && gaps[2] < 1e-5, "{s}: {gaps:?}");
    }
}

#[test]
fn shot_at_rest_stays_at_rest() {
    let r = shoot(&params(1.0, 0.0, 3.0), 0.0);
    assert!(r.admissible);
    assert_eq!(r.end_value, 0.0);
}

#[test]
fn t1_matches_small_slope_return_time() {
    let p = case3();
    let t1 = find_t1(&p).unwrap();
    // Return times of small shots, extrapolated linearly to zero slope.
    let s = 1e-3;
    let near = shoot_return_time(&p, s, t1 / 1e5).unwrap();
    let far = shoot_return_time(&p, 2.0 * s, t1 / 1e5).unwrap();
    let shot = 2.0 * near - far;
    assert!((t1 - shot).abs() <= 1e-5 * t1, "{t1} vs {shot}");
    assert!(find_t1(&case1()).is_err());
}

#[test]
fn t1_grows_with_the_size_of_h() {
    let values: Vec<f64> = [-1.0, -2.0, -4.0]
        .iter()
        .map(|&h| find_t1(&params(1.0, h, 1.0)).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
}

#[test]
fn t1_diverges_like_one_over_lambda() {
    let lcs = [0.5, 0.25, 0.125, 0.0625];
    let t1: Vec<f64> = lcs.iter().map(|&lc| find_t1(&params(lc, -1.0, 1.0)).unwrap()).collect();
    let ratios: Vec<f64> = t1.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.windows(2).all(|r| r[1] > r[0]), "{ratios:?}");
    assert!(ratios.iter().all(|&r| r > 1.5 && r < 2.0), "{ratios:?}");
    assert!(t1[3] > 10.0 * std::f64::consts::PI);
}

#[test]
fn sign_change_appears_at_t1() {
    let p = case3();
    let t1 = find_t1(&p).unwrap();
    let grid = default_slopes(&p);
    let mut last_positive = None;
    let mut first_sign_changing = None;
    for k in -3..=3 {
        let t = t1 * (1.0 + 0.01 * k as f64);
        let sols = count_solutions_on(&p.with_t(t).unwrap(), &grid, DEFAULT_STEPS);
        if sols.iter().any(|r| r.classification == Some(SignClass::Positive)) {
            last_positive = Some(t);
        }
        if first_sign_changing.is_none() && sols.iter().any(|r| r.classification == Some(SignClass::SignChanging)) {
            first_sign_changing = Some(t);
        }
    }
    let (lo, hi) = (last_positive.unwrap(), first_sign_changing.unwrap());
    assert!(lo <= t1 && t1 < hi && hi - lo <= 0.0101 * t1, "{lo} {t1} {hi}");
}

#[test]
fn case_two_turns() {
    let p = params(3.0, 1.0, 1.0);
    let period = rest_orbit_period(&p).unwrap();
    let grid = default_slopes(&p);
    for k in [1u32, 2, 3] {
        let sols = count_solutions_on(&p.with_t((k as f64 + 0.2) * period).unwrap(), &grid, DEFAULT_STEPS);
        assert!(sols.iter().any(|r| r.turns == k), "k={k}");
        assert!(sols.iter().all(|r| r.turns <= k));
    }
}

#[test]
fn linear_threshold() {
    // λ = 0: a solution exists iff μh < (π/T)².
    let p = params(0.0, 1.0, 1.0);
    let below = count_solutions(&p.with_t(0.9 * std::f64::consts::PI).unwrap(), 1e-3, 50.0, 2000).unwrap();
    let above = count_solutions(&p.with_t(1.1 * std::f64::consts::PI).unwrap(), 1e-3, 50.0, 2000).unwrap();
    assert_eq!(below.len(), 1);
    assert!(above.is_empty());
}

#[test]
fn count_solutions_rejects_bad_ranges() {
    assert!(count_solutions(&case1(), 1.0, 0.0, 10).is_err());
    assert!(count_solutions(&case1(), 0.0, 1.0, 1).is_err());
}

#[test]
fn shooting_roots_solve_the_discrete_problem() {
    let fixtures = [
        case1().with_t(0.5 * find_t0(&case1()).unwrap()).unwrap(),
        case3().with_t(2.0).unwrap(),
        case3().with_t(5.0).unwrap(),
        case3().with_t(7.5).unwrap(),
    ];
    let mut checked = 0;
    for p in fixtures {
        for root in count_solutions_on(&p, &default_slopes(&p), DEFAULT_STEPS) {
            let u = to_u_nodes(&p, root.s, DEFAULT_STEPS).unwrap();
            // Steep boundary layers (large slopes, v close to −1) put the
            // O(h²) truncation error of the stencil above the threshold.
            if root.s.abs() > 5.0 || u.iter().any(|x| x.abs() > 4.0) {
                continue;
            }
            let grid = Grid::interval(p.t, DEFAULT_STEPS - 1).unwrap();
            let problem = ProblemSpec::with_constant_mu(grid, |_, _| p.c, |_, _| p.h, p.mu).unwrap();
            let r = residual_direct(&problem, p.lambda, &GridFunction::new(grid, u).unwrap()).unwrap();
            assert!(r.sup_norm() <= 1e-6, "s={}: {}", root.s, r.sup_norm());
            checked += 1;
        }
    }
    assert!(checked >= 5, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_derivative_is_g(lc in 0.0f64..4.0, h in -3.0f64..3.0, v in -0.9f64..20.0) {
        let p = params(lc, h, 1.0);
        let d = 1e-5 * (1.0 + v.abs()).min(1.0 + v);
        let fd = (potential_eval(&p, v + d).unwrap() - potential_eval(&p, v - d).unwrap()) / (2.0 * d);
        let g = g_eval(&p, v).unwrap();
        prop_assert!((fd - g).abs() <= 1e-6 * (1.0 + g.abs() + potential_eval(&p, v).unwrap().abs()));
    }

    #[test]
    fn potential_is_smallest_at_the_centre(lc in 0.1f64..4.0, h in -3.0f64..3.0, v in -0.99f64..20.0) {
        let p = params(lc, h, 1.0);
        let e = equilibria(&p);
        prop_assert_eq!(e.len(), 1);
        prop_assert!(potential_eval(&p, v).unwrap() >= potential_eval(&p, e[0].v).unwrap() - 1e-12);
    }

    #[test]
    fn shots_conserve_energy(s in -0.9f64..3.0, t in 0.5f64..4.0) {
        let p = case3().with_t(t).unwrap();
        let r = shoot(&p, s);
        prop_assume!(r.admissible);
        prop_assert!(r.energy_drift <= 1e-8);
    }

    #[test]
    fn classification_follows_the_inequalities(lc in 0.0f64..5.0, h in -2.0f64..2.0) {
        let p = params(lc, h, 1.0);
        let case = case_classify(&p);
        let expected = if h == 0.0 {
            PhaseCase::HZero
        } else if h < 0.0 {
            PhaseCase::Case3
        } else if lc == 0.0 {
            PhaseCase::Linear
        } else if lc < 2.0 * h {
            PhaseCase::Case1
        } else if lc > 2.0 * h {
            PhaseCase::Case2
        } else {
            PhaseCase::Boundary
        };
        prop_assert_eq!(case, expected);
        prop_assert_eq!(case == PhaseCase::Case1, h > 0.0 && lc > 0.0 && potential_at_minus_one(&p) < 0.0);
    }
}
