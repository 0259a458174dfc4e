use nonradial_core::biradial_solver::{mpa_solve_radial, trial_scan, Axis, MpaOptions};
use nonradial_core::nonlinearity::NonlinearitySpec;
use nonradial_core::radial_solver::{default_trial_family, estimate_ma, LowerBoundCert};

#[test]
fn radial_level_sits_between_floor_and_trial_estimate() {
    let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
    let (n, alpha, a) = (4, 1.0, 10.0);
    let sol = mpa_solve_radial(&spec, n, alpha, a, 1200, &MpaOptions::default()).unwrap();
    assert!(sol.converged, "residual {}", sol.residual);
    let est = estimate_ma(&default_trial_family(a, alpha), n, &spec, a, alpha, 1200).unwrap();
    let floor = LowerBoundCert::new(n, alpha, &spec).unwrap().m_lower(a);
    assert!(sol.level >= floor, "{} < {}", sol.level, floor);
    assert!(sol.level <= est.m_upper * (1.0 + 1e-9));
    assert!(sol.u.values.iter().all(|&x| x >= -1e-10));
}

#[test]
fn scan_is_sorted_and_symmetric_for_equal_split() {
    let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
    let scan = trial_scan(&spec, 4, 2, 1.0, 100.0, 32).unwrap();
    assert!(scan.windows(2).all(|w| w[0].ray_max <= w[1].ray_max));
    let best = scan[0];
    let mirror = scan
        .iter()
        .find(|e| e.blob.axis != best.blob.axis && e.blob.center == best.blob.center && e.blob.width == best.blob.width)
        .unwrap();
    assert!((mirror.ray_max / best.ray_max - 1.0).abs() < 1e-10);
    assert!(matches!(best.blob.axis, Axis::S | Axis::T));
}
