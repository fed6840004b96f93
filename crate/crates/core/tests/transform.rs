use proptest::prelude::*;
use quadgrad::grid::{Grid, GridFunction};
use quadgrad::transform::{cole_hopf_forward, cole_hopf_inverse, m_nonlinearity, scaled_inverse, scaled_transform};

fn grid() -> Grid {
    Grid::interval(1.0, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cole_hopf_round_trips(s in prop::collection::vec(-2.0f64..8.0, 16), mu in 0.1f64..3.0) {
        let u = GridFunction::new(grid(), s.iter().map(|x| x / mu).collect()).unwrap();
        let back = cole_hopf_inverse(&cole_hopf_forward(&u, mu).unwrap(), mu).unwrap();
        prop_assert!(back.distance(&u).unwrap() <= 1e-12 * (1.0 + u.sup_norm()));
    }

    #[test]
    fn inverse_then_forward_round_trips(v in prop::collection::vec(-0.9f64..20.0, 16), mu in 0.1f64..3.0) {
        let v = GridFunction::new(grid(), v).unwrap();
        let back = cole_hopf_forward(&cole_hopf_inverse(&v, mu).unwrap(), mu).unwrap();
        prop_assert!(back.distance(&v).unwrap() <= 1e-12 * (1.0 + v.sup_norm()));
    }

    #[test]
    fn scaled_transform_round_trips(s in prop::collection::vec(-2.0f64..8.0, 16), mu in 0.1f64..3.0) {
        let u = GridFunction::new(grid(), s.iter().map(|x| x / mu).collect()).unwrap();
        let back = scaled_inverse(&scaled_transform(&u, mu).unwrap(), mu).unwrap();
        prop_assert!(back.distance(&u).unwrap() <= 1e-12 * (1.0 + u.sup_norm()));
    }

    #[test]
    fn m_is_odd_and_increasing(s in -10.0f64..10.0, ds in 1e-3f64..1.0, mu in 0.2f64..3.0) {
        let m = |x| m_nonlinearity(x, mu).unwrap();
        prop_assert!(m(s + ds) > m(s));
        prop_assert!((m(-s) + m(s)).abs() <= 1e-12 * (1.0 + m(s).abs()));
    }
}
