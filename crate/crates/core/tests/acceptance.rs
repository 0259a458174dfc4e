//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonradial_core::biradial_solver::{
    crossover, mpa_solve, refine_solution, separation_check, solution_distinctness, sphere_sample_min, verify_solution,
    SolverConfig,
};
use nonradial_core::discretization::{BiradialGrid, BiradialProfile, Functional, Lattice, RadialGrid, RadialProfile};
use nonradial_core::exponents::{
    classify_region, critical_exponents, level_exponents, nu_and_admissible_k, two_star, RegionStatus,
};
use nonradial_core::nonlinearity::{Family, NonlinearitySpec};
use nonradial_core::radial_solver::{check_radial_bound, lower_bound_chain, mountain_pass_floor, random_radial_profile};
use nonradial_core::report::{fit_slope, gradient_check};
use nonradial_core::testfunction::{
    direct_integrals, path_upper_bound, ratio_and_a0, reduced_integrals, support_grid, BumpSpec,
};
use nonradial_core::Result;

type Outcome = Result<(bool, String)>;

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * y.abs().max(1.0)
}

fn min_power(p1: f64, p2: f64) -> NonlinearitySpec {
    NonlinearitySpec::min_power(p1, p2).expect("valid powers")
}

fn exponents() -> Outcome {
    let mut bad = Vec::new();
    let t = critical_exponents(4, 2.0)?;
    want(&mut bad, "2*(4)", t.two_star, 4.0);
    want(&mut bad, "2*_a(4,2)", t.two_star_alpha.unwrap_or(f64::NAN), 4.0);
    want(&mut bad, "2_a(4,2)", t.two_alpha.unwrap_or(f64::NAN), 4.0);
    let t = critical_exponents(4, 1.0)?;
    want(&mut bad, "2*_a(4,1)", t.two_star_alpha.unwrap_or(f64::NAN), 2.8);
    want(&mut bad, "2_a(4,1)", t.two_alpha.unwrap_or(f64::NAN), 8.0 / 3.0);
    want(&mut bad, "p1*(4,1)", t.p1_star.unwrap_or(f64::NAN), 26.0 / 9.0);
    let t = critical_exponents(5, 3.0)?;
    want(&mut bad, "2*(5)", t.two_star, 10.0 / 3.0);
    want(&mut bad, "2*_a(5,3)", t.two_star_alpha.unwrap_or(f64::NAN), 4.4);
    want(&mut bad, "2_a(5,3)", t.two_alpha.unwrap_or(f64::NAN), 5.0);
    want(&mut bad, "p2*(5,3)", t.p2_star.unwrap_or(f64::NAN), 3.6);
    for (n, al, p1, p2, nu, ks) in
        [(4, 1.0, 2.5, 5.0, 1, vec![2]), (6, 1.0, 2.2, 4.0, 3, vec![2, 3, 4]), (5, 3.0, 3.0, 6.0, 2, vec![2, 3])]
    {
        let m = nu_and_admissible_k(n, al, p1, p2)?;
        want(&mut bad, &format!("nu({n},{al},{p1},{p2})"), m.nu as f64, nu as f64);
        if m.k_list != ks {
            bad.push(format!("K list for N={n}: {:?}", m.k_list));
        }
    }
    let l = level_exponents(5, 3.0, 3.0, 6.0, 2)?;
    want(&mut bad, "m_exp(5,3)", l.m_exp, 4.0 / 3.0);
    want(&mut bad, "c_exp(5,3,2)", l.c_exp, 0.5);
    want(&mut bad, "gap(5,3,2)", l.gap, 5.0 / 6.0);
    let l = level_exponents(6, 1.0, 2.2, 4.0, 4)?;
    want(&mut bad, "m_exp(6,1)", l.m_exp, 5.0);
    want(&mut bad, "c_exp(6,1,4)", l.c_exp, 4.5);
    want(&mut bad, "gap(6,1,4)", l.gap, 0.5);
    want(&mut bad, "gap(6,1,2)", level_exponents(6, 1.0, 2.2, 4.0, 2)?.gap, 1.5);
    let regions = [
        (4, 2.0, 4.0, RegionStatus::ExistsRadial),
        (4, 1.0, 2.7, RegionStatus::NoRadialSolution),
        (4, 1.0, 2.5, RegionStatus::NoSolution),
        (4, 5.0, 3.5, RegionStatus::NoSolution),
        (4, 3.0, 7.0, RegionStatus::NoRadialSolution),
    ];
    for (n, al, p, st) in regions {
        let v = classify_region(n, al, p)?;
        if v.status != st {
            bad.push(format!("region ({n},{al},{p}) = {:?}", v.status));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 1000;
    let mut min_nu = i64::MAX;
    for _ in 0..draws {
        let n: usize = rng.random_range(4..=9);
        let nf = n as f64;
        let ts = two_star(n);
        let (al, p1, p2) = if rng.random_bool(0.5) {
            let al = rng.random_range(2.0 / (nf - 1.0)..2.0);
            let t = critical_exponents(n, al)?;
            let p1 = rng.random_range(2.0..t.p1_star.unwrap_or(ts).min(ts));
            (al, p1, rng.random_range(ts..ts + 10.0))
        } else {
            let al = rng.random_range(2.0..2.0 * nf - 2.0);
            let t = critical_exponents(n, al)?;
            let lo = t.p2_star.unwrap_or(ts).max(ts);
            (al, rng.random_range(2.0..ts), rng.random_range(lo..lo + 10.0))
        };
        match nu_and_admissible_k(n, al, p1, p2) {
            Ok(m) => min_nu = min_nu.min(m.nu),
            Err(e) => bad.push(format!("rejected admissible draw ({n},{al},{p1},{p2}): {e}")),
        }
    }
    if min_nu < 1 {
        bad.push(format!("nu = {min_nu} on a random draw"));
    }
    Ok((bad.is_empty(), format!("{draws} random draws, min nu = {min_nu}; {}", summary(&bad))))
}

fn want(bad: &mut Vec<String>, name: &str, got: f64, exp: f64) {
    if !close(got, exp) {
        bad.push(format!("{name}: {got} != {exp}"));
    }
}

fn summary(bad: &[String]) -> String {
    if bad.is_empty() {
        "all examples match".into()
    } else {
        bad.join("; ")
    }
}

fn identities() -> Outcome {
    let spec = min_power(2.5, 5.0);
    let bump = BumpSpec::default();
    let mut worst = 0.0f64;
    for &(n, k, al) in &[(4usize, 2usize, 1.0), (5, 2, 3.0), (6, 3, 1.0)] {
        for eps in [1.0, 0.5, 0.25, 0.1] {
            let red = reduced_integrals(&bump, &spec, n, k, al, eps)?;
            let grid = support_grid(n, k, eps, 512)?;
            let dir = direct_integrals(&bump, &spec, n, k, al, eps, &grid)?;
            if dir.under_resolved {
                return Ok((false, format!("support under-resolved at ({n},{k},{al}), eps = {eps}")));
            }
            worst = worst.max(red.max_rel_diff(&dir.integrals));
        }
    }
    Ok((worst < 1e-6, format!("max relative difference {worst:.3e} (tol 1e-6)")))
}

fn ratio_divergence() -> Outcome {
    let bump = BumpSpec::default();
    let grid: Vec<f64> = (1..=32).map(|i| 10f64.powf(0.25 * i as f64)).collect();
    let mut worst = 0.0f64;
    let mut max_a0 = 0.0f64;
    for fam in [Family::MinPower, Family::RationalQuotient, Family::RationalDerivative] {
        for &(n, k, al) in &[(4usize, 2usize, 1.0), (5, 2, 3.0)] {
            let spec = NonlinearitySpec::builtin(fam, 2.5, 5.0)?;
            let sw = ratio_and_a0(&bump, &spec, n, k, al, &grid)?;
            let at = |a: f64| sw.points.iter().find(|p| close(p.a, a)).map(|p| p.ratio_over_a).unwrap_or(f64::NAN);
            let (r6, r8) = (at(1e6), at(1e8));
            worst = worst.max((r6 - r8).abs() / r8);
            max_a0 = max_a0.max(sw.a0);
        }
    }
    Ok((worst < 0.05, format!("max |ratio/A change| 1e6..1e8 = {worst:.3e} (tol 0.05), largest A0 = {max_a0:.3e}")))
}

fn bound_slopes() -> Outcome {
    let spec = min_power(2.5, 5.0);
    let bump = BumpSpec::default();
    let xs: Vec<f64> = (2..=6).map(|e| 10f64.powi(e)).collect();
    let mut ok = true;
    let mut msg = Vec::new();
    for &(n, k, al, want) in &[(4usize, 2usize, 1.0, 2.5), (5, 2, 3.0, 0.5)] {
        let ys = xs.iter().map(|&a| Ok(path_upper_bound(&bump, &spec, n, k, al, a)?.bound)).collect::<Result<Vec<_>>>()?;
        let fit = fit_slope(&xs, &ys)?;
        ok &= (fit.slope - want).abs() <= 0.05;
        msg.push(format!("({n},{k},{al}) slope {:.4} vs {want}", fit.slope));
    }
    Ok((ok, msg.join(", ")))
}

fn random_profiles(n: usize, count: usize, seed: u64) -> Result<Vec<RadialProfile>> {
    let grid = Arc::new(RadialGrid::log_spaced(n, 1e-4, 8.0, 1500)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count).map(|_| random_radial_profile(grid.clone(), &mut rng)).collect())
}

const CHAIN_CASES: [(usize, f64, f64, f64); 2] = [(4, 1.0, 2.5, 5.0), (5, 3.0, 3.0, 6.0)];

fn chain() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut worst_name = String::new();
    let mut checks = 0;
    for (i, &(n, al, p1, p2)) in CHAIN_CASES.iter().enumerate() {
        let spec = min_power(p1, p2);
        for u in random_profiles(n, 100, 100 + i as u64)? {
            for a in [1.0, 1e2, 1e4] {
                let rep = lower_bound_chain(&u, &spec, a, al)?;
                let w = rep.worst();
                checks += 1;
                if w.margin < worst {
                    worst = w.margin;
                    worst_name = format!("{} at N={n}, A={a}", w.name);
                }
            }
        }
    }
    Ok((worst >= -1e-8, format!("{checks} chains, worst margin {worst:.3e} ({worst_name})")))
}

fn radial_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    for (i, &(n, al, _, _)) in CHAIN_CASES.iter().enumerate() {
        for u in random_profiles(n, 100, 100 + i as u64)? {
            for a in [1.0, 1e2, 1e4] {
                worst = worst.min(check_radial_bound(&u, a, al)?.worst_margin);
            }
        }
    }
    Ok((worst >= 0.0, format!("worst nodal margin {worst:.3e}")))
}

fn mountain_pass() -> Outcome {
    let spec = min_power(2.5, 5.0);
    let (n, k, al, a) = (4, 2, 1.0, 100.0);
    let cfg = SolverConfig::new(n, k, al, a, 128);
    let rep = mpa_solve(&spec, &cfg)?;
    let rec = &rep.best;
    let floor = mountain_pass_floor(n, &spec)?;
    let bound = path_upper_bound(&BumpSpec::default(), &spec, n, k, al, a)?;
    let fun = Functional::new(rec.u_k.grid.clone(), &spec, a, al)?;
    let sphere = sphere_sample_min(&fun, floor.radius, 200, 5)?;
    let ver = verify_solution(rec, &spec, 20, 17, 1e-6)?;
    let fine = refine_solution(rec, &spec, 2, &cfg.opts)?;
    let change = (fine.level / rec.level - 1.0).abs();
    let checks = [
        (rec.converged && rec.residual < 1e-6, format!("residual {:.2e}", rec.residual)),
        (rec.level > floor.floor && rec.level <= bound.bound, format!("level {:.6e} in ({:.3e}, {:.3e}]", rec.level, floor.floor, bound.bound)),
        (rec.level >= sphere, format!("sphere sample min {sphere:.3e}")),
        (ver.passed(), format!("weak form {:.2e}", ver.weak_form)),
        (rec.nonradiality > 0.1, format!("nonradiality {:.3}", rec.nonradiality)),
        (fine.converged && change < 0.02, format!("doubling change {:.3}%", 100.0 * change)),
    ];
    let ok = checks.iter().all(|c| c.0);
    let msg: Vec<String> = checks.iter().map(|(p, m)| if *p { m.clone() } else { format!("{m} [FAILED]") }).collect();
    Ok((ok, msg.join(", ")))
}

fn separation() -> Outcome {
    let spec = min_power(3.0, 6.0);
    let (n, al) = (5, 3.0);
    let ks = nu_and_admissible_k(n, al, 3.0, 6.0)?.k_list;
    let bump = BumpSpec::default();
    let mut a_star = 0.0f64;
    for &k in &ks {
        a_star = a_star.max(crossover(&bump, &spec, n, k, al)?.a_star);
    }
    let a = 100.0 * a_star;
    let base = SolverConfig::new(n, ks[0], al, a, 96);
    let rep = separation_check(&spec, &base, &ks, &[a], 2000)?;
    let mut ok = rep.rows.iter().all(|r| r.separated);
    let mut msg: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("K={} c {:.3e} < m_lower {:.3e}: {}", r.k, r.c_estimate.unwrap_or(f64::NAN), r.m_lower, r.separated))
        .collect();
    let sols: Vec<_> = ks.iter().filter_map(|k| rep.solutions.iter().find(|s| s.2.k == *k)).collect();
    if sols.len() == 2 {
        let d = solution_distinctness(&sols[0].2, &sols[1].2)?;
        ok &= d > 0.0;
        msg.push(format!("distinctness {d:.3}"));
    } else {
        ok = false;
        msg.push("missing solution".into());
    }
    Ok((ok, format!("A* = {a_star:.3e}, A = {a:.3e}; {}", msg.join(", "))))
}

fn gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = f64::INFINITY;
    for fam in [Family::MinPower, Family::RationalQuotient, Family::RationalDerivative] {
        let spec = NonlinearitySpec::builtin(fam, 2.5, 5.0)?;
        let grid = Arc::new(BiradialGrid::square(4, 2, 6.0, 24)?);
        let fun = Functional::new(grid.clone(), &spec, 3.0, 1.0)?;
        for _ in 0..3 {
            let (cs, ct, w) = (rng.random_range(0.5..4.0), rng.random_range(0.5..4.0), rng.random_range(0.5..1.5));
            let amp = rng.random_range(0.5..3.0);
            let u = BiradialProfile::from_fn(grid.clone(), |s, t| amp * (-((s - cs).powi(2) + (t - ct).powi(2)) / (w * w)).exp());
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            worst = worst.min(gradient_check(&fun, &u.values, &v, 1e-2, 5)?.order);
        }
        let rg = Arc::new(RadialGrid::log_spaced(4, 1e-3, 8.0, 300)?);
        let rf = Functional::new(rg.clone(), &spec, 3.0, 1.0)?;
        let u = random_radial_profile(rg.clone(), &mut rng);
        let v: Vec<f64> = (0..u.values.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.min(gradient_check(&rf, &u.values, &v, 1e-2, 5)?.order);
    }
    Ok((worst >= 1.9, format!("min observed order {worst:.3}")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 exponent arithmetic", exponents),
        ("2 change-of-variables identities", identities),
        ("3 ratio divergence and threshold", ratio_divergence),
        ("4 path-bound scaling", bound_slopes),
        ("5 radial lower-bound chain", chain),
        ("6 pointwise radial bound", radial_bound),
        ("7 mountain-pass solve", mountain_pass),
        ("8 separation", separation),
        ("9 gradient consistency", gradient),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let (ok, msg) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {msg} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
