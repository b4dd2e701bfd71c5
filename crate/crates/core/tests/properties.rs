use orlicz_frac::modular::{luxemburg_norm, orlicz_modular};
use orlicz_frac::seminorm::{frac_modular_1d, frac_modular_mc};
use orlicz_frac::young::{self, abar, delta2_diagnose, ln_growth_constant};
use orlicz_frac::{QuadratureConfig, TestFunction, YoungFunction};
use proptest::prelude::*;

const SLACK: f64 = 1e-10;

fn family() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.0f64..4.0).prop_map(|p| YoungFunction::power(p).unwrap()),
        (1.0f64..3.0).prop_map(|p| YoungFunction::power_log(p).unwrap()),
        (1.2f64..3.0).prop_map(|g| YoungFunction::exp_counterexample_default(g).unwrap()),
        ((0.1f64..2.0), (0.1f64..2.0)).prop_map(|(c2, c3)| YoungFunction::poly(&[(c2, 2.0), (c3, 3.0)]).unwrap()),
        Just(YoungFunction::expm1().unwrap()),
    ]
}

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averaged_function_is_sandwiched(a in family(), lt in -5.0f64..5.0) {
        let t = 10f64.powf(lt);
        let bar = abar(&a, t, &cfg()).unwrap();
        prop_assert!(a.eval(t / 2.0) <= bar * (1.0 + SLACK) + f64::MIN_POSITIVE);
        prop_assert!(bar <= a.eval(t) * (1.0 + SLACK));
        let bar2 = abar(&a, 2.0 * t, &cfg()).unwrap();
        prop_assert!(a.eval(t) <= bar2 * (1.0 + SLACK) + f64::MIN_POSITIVE);
    }

    #[test]
    fn young_functions_are_convex(a in family(), lt in -3.0f64..3.0, gap in 0.01f64..2.0) {
        let t1 = 10f64.powf(lt);
        let t2 = t1 * (1.0 + gap);
        let mid = a.eval(0.5 * (t1 + t2));
        prop_assert!(mid <= 0.5 * (a.eval(t1) + a.eval(t2)) * (1.0 + SLACK));
        prop_assert!(a.deriv(t1) <= a.deriv(t2) * (1.0 + SLACK));
    }

    #[test]
    fn doubling_ratio_is_at_least_two(p in 1.0f64..4.0) {
        let r = delta2_diagnose(&YoungFunction::power(p).unwrap(), 1e-3, 1e3, 64).unwrap();
        prop_assert!(r.constant >= 2.0 * (1.0 - SLACK));
    }

    #[test]
    fn growth_witness_is_moderate(c2 in 0.1f64..2.0, c3 in 0.1f64..2.0) {
        let a = YoungFunction::poly(&[(c2, 2.0), (c3, 3.0)]).unwrap();
        let index = young::matuszewska_index(&a, &young::default_index_lambdas(), &young::default_t_grid()).unwrap();
        let ln_c = ln_growth_constant(&a, index.value + 1.0, 2f64.powi(14), &young::default_t_grid());
        prop_assert!(ln_c <= 1e6f64.ln());
    }

    #[test]
    fn modular_decreases_in_scale(a in family(), l1 in 1.0f64..4.0, factor in 1.01f64..4.0) {
        let u = TestFunction::tent();
        let m1 = orlicz_modular(&u, &a, l1, &cfg()).unwrap().value;
        let m2 = orlicz_modular(&u, &a, l1 * factor, &cfg()).unwrap().value;
        let m_one = orlicz_modular(&u, &a, 1.0, &cfg()).unwrap().value;
        prop_assert!(m2 <= m1 * (1.0 + 1e-8));
        prop_assert!(m1 <= m_one / l1 * (1.0 + 1e-8));
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(p in 1.0f64..3.0, lambda in 0.2f64..5.0) {
        let a = YoungFunction::power(p).unwrap();
        let u = TestFunction::exp_decay(1).unwrap();
        let base = luxemburg_norm(&u, &a, &cfg()).unwrap();
        let scaled = luxemburg_norm(&u.scale(lambda).unwrap(), &a, &cfg()).unwrap();
        prop_assert!((scaled * lambda / base - 1.0).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn seminorm_is_monotone_in_the_gauge(s in 0.15f64..0.85) {
        let u = TestFunction::tent();
        let small = frac_modular_1d(&u, &YoungFunction::power(2.0).unwrap(), s, &cfg()).unwrap().value;
        let large = frac_modular_1d(&u, &YoungFunction::poly(&[(1.0, 2.0), (1.0, 3.0)]).unwrap(), s, &cfg()).unwrap().value;
        prop_assert!(small <= large);
    }

    #[test]
    fn seminorm_is_two_homogeneous_for_squares(s in 0.15f64..0.85, lambda in 0.5f64..4.0) {
        let a = YoungFunction::power(2.0).unwrap();
        let u = TestFunction::tent();
        let base = frac_modular_1d(&u, &a, s, &cfg()).unwrap().value;
        let scaled = frac_modular_1d(&u.scale(lambda).unwrap(), &a, s, &cfg()).unwrap().value;
        prop_assert!((scaled * lambda * lambda / base - 1.0).abs() < 1e-6);
    }

    #[test]
    fn monte_carlo_ignores_translation(offset in -20.0f64..20.0, seed in 0u64..1000) {
        let a = YoungFunction::power(2.0).unwrap();
        let cfg = QuadratureConfig { mc_samples: 40_000, rng_seed: seed, ..QuadratureConfig::default() };
        let u = TestFunction::tent();
        let base = frac_modular_mc(&u, &a, 0.5, &cfg).unwrap();
        let moved = frac_modular_mc(&u.translate(offset).unwrap(), &a, 0.5, &cfg).unwrap();
        let band = 4.0 * (base.standard_error.unwrap().powi(2) + moved.standard_error.unwrap().powi(2)).sqrt();
        prop_assert!((base.value - moved.value).abs() <= band);
    }
}
