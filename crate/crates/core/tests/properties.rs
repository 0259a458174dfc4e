use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nonradial_core::biradial_solver::{nehari_scale, negative_endpoint, mpa_solve_on_grid, MpaOptions};
use nonradial_core::discretization::{BiradialGrid, BiradialProfile, Functional, RadialGrid};
use nonradial_core::nonlinearity::{Family, NonlinearitySpec};
use nonradial_core::quadrature::dot;
use nonradial_core::radial_solver::{fibering_max, random_radial_profile};
use nonradial_core::report::fit_slope;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::MinPower), Just(Family::RationalQuotient), Just(Family::RationalDerivative)]
}

fn spec() -> impl Strategy<Value = NonlinearitySpec> {
    (family(), 2.1f64..4.0, 0.5f64..4.0).prop_map(|(f, p1, d)| NonlinearitySpec::builtin(f, p1, p1 + d).unwrap())
}

fn biradial_fixture(a: f64) -> Functional<BiradialGrid> {
    let g = Arc::new(BiradialGrid::square(4, 2, 8.0, 20).unwrap());
    Functional::new(g, &NonlinearitySpec::min_power(2.5, 5.0).unwrap(), a, 1.0).unwrap()
}

fn blob(g: &Arc<BiradialGrid>, cs: f64, ct: f64, w: f64, amp: f64) -> Vec<f64> {
    BiradialProfile::from_fn(g.clone(), |s, t| amp * (-((s - cs).powi(2) + (t - ct).powi(2)) / (w * w)).exp()).values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nonlinearity_structure(sp in spec(), s in 1e-4f64..1e4, r in 1.0001f64..3.0) {
        let (f, big_f) = (sp.f(s), sp.big_f(s));
        prop_assert!(f > 0.0 && big_f > 0.0);
        prop_assert_eq!(sp.f(-s), 0.0);
        prop_assert!(sp.theta * big_f <= f * s * (1.0 + 1e-9));
        prop_assert!(f * s <= sp.mu * big_f * (1.0 + 1e-9));
        prop_assert!(sp.f(r * s) / (r * s) >= f / s * (1.0 - 1e-12));
        prop_assert!(big_f <= sp.m2 * s.powf(sp.p1).min(s.powf(sp.p2)) * (1.0 + 1e-9));
        prop_assert!(f <= sp.m1 * s.powf(sp.p1 - 1.0).min(s.powf(sp.p2 - 1.0)) * (1.0 + 1e-9));
    }

    #[test]
    fn stiffness_is_symmetric_positive(seed in 0u64..1000, a in 0.1f64..100.0) {
        let fun = biradial_fixture(a);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = fun.len();
        let u: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let (uv, vu) = (dot(&fun.apply(&u), &v), dot(&u, &fun.apply(&v)));
        prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(1.0));
        prop_assert!(fun.norm_sq(&u) > 0.0);
        let back = fun.apply(&fun.riesz(&u));
        let err = back.iter().zip(&u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn fibering_max_dominates_ray(cs in 1.0f64..5.0, ct in 0.0f64..5.0, w in 0.5f64..2.0, t in 0.01f64..50.0) {
        let fun = biradial_fixture(1.0);
        let u = blob(&fun.grid, cs, ct, w, 1.0);
        let fib = fibering_max(&fun, &u).unwrap();
        let tu: Vec<f64> = u.iter().map(|x| t * x).collect();
        prop_assert!(fun.energy(&tu).unwrap() <= fib.max_value * (1.0 + 1e-10));
        let s = nehari_scale(&fun, &u).unwrap();
        prop_assert!((s / fib.t_u - 1.0).abs() < 1e-5);
    }

    #[test]
    fn slope_fit_recovers_power_laws(k in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = (0..6).map(|i| 10f64.powi(i)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(k)).collect();
        prop_assert!((fit_slope(&xs, &ys).unwrap().slope - k).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_output_is_a_nonnegative_nehari_point(cs in 2.0f64..5.0, w in 0.6f64..1.5) {
        let fun = biradial_fixture(2.0);
        let u = blob(&fun.grid, cs, 0.0, w, 1.0);
        let e = negative_endpoint(&fun, &u).unwrap();
        let rec = mpa_solve_on_grid(&fun, &u, &e, &MpaOptions::default()).unwrap();
        prop_assert!(rec.converged);
        prop_assert!(rec.level > 0.0);
        prop_assert!(rec.residual < 1e-6);
        prop_assert!(rec.u_k.values.iter().all(|&x| x >= -1e-10));
        prop_assert!(rec.history_is_monotone(1e-12));
        prop_assert!(rec.level <= rec.path.max_energy() * (1.0 + 1e-12));
    }

    #[test]
    fn radial_random_profiles_are_finite(seed in 0u64..10_000) {
        let g = Arc::new(RadialGrid::log_spaced(4, 1e-4, 8.0, 300).unwrap());
        let u = random_radial_profile(g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(u.is_finite());
        prop_assert!(u.values.iter().all(|&x| x >= 0.0));
        prop_assert!(u.max_abs() > 0.0);
    }
}
