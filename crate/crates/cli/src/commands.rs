//! Subcommand pipelines. Each returns a report plus auxiliary output files;
//! per-point failures become rows and failed checks instead of aborting.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use nonradial_core::biradial_solver::{
    crossover, mpa_solve, refine_solution, separation_check, solution_distinctness, verify_solution,
    Crossover, SolutionMeta, SolutionRecord, VerificationReport,
};
use nonradial_core::discretization::{ProfileRecord, RadialGrid};
use nonradial_core::exponents::{
    c_exponent, classify_region, critical_exponents, level_exponents, m_exponent, nu_and_admissible_k, p_used,
};
use nonradial_core::nonlinearity::check_assumptions;
use nonradial_core::radial_solver::{
    check_radial_bound, default_trial_family, estimate_ma, lower_bound_chain, mountain_pass_floor,
    random_radial_profile, LowerBoundCert,
};
use nonradial_core::report::{fmt_f, SweepReport, Table};
use nonradial_core::testfunction::{direct_integrals, path_upper_bound, ratio_and_a0, ratio_at, reduced_integrals, support_grid, BumpSpec};
use nonradial_core::{Error, Result};

use crate::config::ExperimentConfig;

pub const COMMANDS: [&str; 11] = [
    "classify",
    "nu",
    "exponents",
    "check-nonlinearity",
    "identities",
    "ratio",
    "m-bounds",
    "c-bounds",
    "solve",
    "separate",
    "theorem-demo",
];

/// A report with extra named output files.
pub struct Outcome {
    pub report: SweepReport,
    pub files: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: SweepReport) -> Self {
        Self { report, files: Vec::new() }
    }
}

pub fn run(command: &str, cfg: &ExperimentConfig) -> Result<Outcome> {
    match command {
        "classify" => classify(cfg),
        "nu" => nu(cfg),
        "exponents" => exponents(cfg),
        "check-nonlinearity" => check_nonlinearity(cfg),
        "identities" => identities(cfg),
        "ratio" => ratio(cfg),
        "m-bounds" => m_bounds(cfg),
        "c-bounds" => c_bounds(cfg),
        "solve" => solve(cfg),
        "separate" => separate(cfg),
        "theorem-demo" => theorem_demo(cfg),
        other => Err(Error::InvalidParameter(format!("unknown subcommand `{other}`"))),
    }
}

fn report(command: &str, cfg: &ExperimentConfig, columns: &[&str]) -> SweepReport {
    SweepReport::new(command, cfg.to_toml(), Table::new(columns))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "undefined".into())
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn powers(cfg: &ExperimentConfig) -> (usize, f64, f64, f64) {
    (cfg.problem.n, cfg.problem.alpha, cfg.nonlinearity.p1, cfg.nonlinearity.p2)
}

/// K from the config, else the admissible list.
fn k_list(cfg: &ExperimentConfig) -> Result<Vec<usize>> {
    if let Some(k) = cfg.problem.k {
        return Ok(vec![k]);
    }
    let (n, al, p1, p2) = powers(cfg);
    Ok(nu_and_admissible_k(n, al, p1, p2)?.k_list)
}

fn classify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut ps: Vec<f64> = cfg.problem.p.into_iter().chain(cfg.sweep.p_list.iter().copied()).collect();
    if ps.is_empty() {
        return Err(Error::InvalidParameter("classify needs problem.p or sweep.p_list".into()));
    }
    ps.sort_by(f64::total_cmp);
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let mut r = report("classify", cfg, &["n", "alpha", "p", "status", "rule"]);
    for p in ps {
        match classify_region(n, al, p) {
            Ok(v) => r.table.push(vec![n.to_string(), fmt_f(al), fmt_f(p), format!("{:?}", v.status), v.rule.clone()]),
            Err(e) => {
                r.table.push(vec![n.to_string(), fmt_f(al), fmt_f(p), "error".into(), e.to_string()]);
                r.check(&format!("classify p = {p}"), false, e.to_string());
            }
        }
    }
    Ok(Outcome::new(r))
}

fn nu(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (n, al, p1, p2) = powers(cfg);
    let m = nu_and_admissible_k(n, al, p1, p2)?;
    let mut r = report("nu", cfg, &["k", "m_exp", "c_exp", "gap"]);
    let ks: Vec<String> = m.k_list.iter().map(|k| k.to_string()).collect();
    let clamp = if m.clamped { " (clamped to N-2)" } else { "" };
    r.check("nu", m.nu >= 1, format!("nu = {}, K in {{{}}}{clamp}", m.nu, ks.join(",")));
    for &k in &m.k_list {
        let l = level_exponents(n, al, p1, p2, k)?;
        r.table.push(vec![k.to_string(), fmt_f(l.m_exp), fmt_f(l.c_exp), fmt_f(l.gap)]);
        r.check(&format!("gap K={k}"), l.gap > 0.0, format!("gap = {:.6}", l.gap));
    }
    Ok(Outcome::new(r))
}

fn exponents(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (n, al, p1, p2) = powers(cfg);
    let t = critical_exponents(n, al)?;
    let mut r = report("exponents", cfg, &["name", "value"]);
    let mut row = |name: &str, v: String| r.table.push(vec![name.into(), v]);
    row("two_star", fmt_f(t.two_star));
    row("two_star_alpha", opt(t.two_star_alpha));
    row("two_alpha", opt(t.two_alpha));
    row("p1_star", opt(t.p1_star));
    row("p2_star", opt(t.p2_star));
    if let Ok(m) = nu_and_admissible_k(n, al, p1, p2) {
        row("p_used", fmt_f(p_used(n, al, p1, p2)?));
        row("nu", m.nu.to_string());
        row("m_exp", fmt_f(m_exponent(n, al, p1, p2)));
        for &k in &m.k_list {
            let l = level_exponents(n, al, p1, p2, k)?;
            row(&format!("c_exp_k{k}"), fmt_f(l.c_exp));
        }
    }
    Ok(Outcome::new(r))
}

fn check_nonlinearity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let rep = check_assumptions(&spec, cfg.grid.samples)?;
    let mut r = report("check-nonlinearity", cfg, &["assumption", "pass", "worst_margin", "worst_s"]);
    for c in &rep.checks {
        r.table.push(vec![c.name.clone(), c.pass.to_string(), fmt_f(c.worst_margin), fmt_f(c.worst_s)]);
        let detail = if c.pass {
            format!("worst margin {:.3e} at s = {:.3e}", c.worst_margin, c.worst_s)
        } else {
            format!("violated near s in {:?}", c.violating_s)
        };
        r.check(&c.name, c.pass, detail);
    }
    let mut out = Outcome::new(r);
    out.files.push(("check-nonlinearity_assumptions.json".into(), json(&rep)));
    Ok(out)
}

fn identities(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let k = cfg.problem.k.unwrap_or(2);
    let bump = BumpSpec::default();
    let mut eps = cfg.sweep.eps_list.clone();
    eps.sort_by(f64::total_cmp);
    let cols = ["eps", "pot_reduced", "pot_direct", "mass_reduced", "mass_direct", "grad_reduced", "grad_direct", "max_rel_diff", "error"];
    let mut r = report("identities", cfg, &cols);
    let rows: Vec<_> = eps
        .par_iter()
        .map(|&e| -> Result<_> {
            let red = reduced_integrals(&bump, &spec, n, k, al, e)?;
            let grid = support_grid(n, k, e, cfg.grid.support_cells)?;
            let dir = direct_integrals(&bump, &spec, n, k, al, e, &grid)?;
            Ok((red, dir))
        })
        .collect();
    for (e, row) in eps.iter().zip(rows) {
        match row {
            Ok((red, dir)) => {
                let d = red.max_rel_diff(&dir.integrals);
                let di = dir.integrals;
                r.table.push(vec![
                    fmt_f(*e),
                    fmt_f(red.pot),
                    fmt_f(di.pot),
                    fmt_f(red.mass_f),
                    fmt_f(di.mass_f),
                    fmt_f(red.grad),
                    fmt_f(di.grad),
                    fmt_f(d),
                    String::new(),
                ]);
                let ok = d <= cfg.sweep.identity_tol && !dir.under_resolved;
                let note = if dir.under_resolved { ", support under-resolved" } else { "" };
                r.check(&format!("eps = {e}"), ok, format!("max relative difference {d:.3e}{note}"));
            }
            Err(err) => {
                let mut v = vec![fmt_f(*e)];
                v.extend(std::iter::repeat_n(String::new(), 7));
                v.push(err.to_string());
                r.table.push(v);
                r.check(&format!("eps = {e}"), false, err.to_string());
            }
        }
    }
    Ok(Outcome::new(r))
}

fn ratio(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let k = cfg.problem.k.unwrap_or(2);
    let bump = BumpSpec::default();
    let mut r = report("ratio", cfg, &["a", "eps", "ratio", "ratio_over_a", "error"]);
    let a_list = &cfg.sweep.a_list;
    let points: Vec<_> = a_list.par_iter().map(|&a| ratio_at(&bump, &spec, n, k, al, a)).collect();
    let mut good = Vec::new();
    for (a, p) in a_list.iter().zip(points) {
        match p {
            Ok(p) => {
                r.table.push(vec![fmt_f(p.a), fmt_f(p.eps), fmt_f(p.ratio), fmt_f(p.ratio_over_a), String::new()]);
                good.push(p);
            }
            Err(e) => {
                r.table.push(vec![fmt_f(*a), String::new(), String::new(), String::new(), e.to_string()]);
                r.check(&format!("A = {a}"), false, e.to_string());
            }
        }
    }
    match ratio_and_a0(&bump, &spec, n, k, al, a_list) {
        Ok(sw) => r.check("threshold", true, format!("ratio > 1 from A0 = {:.6e} on the listed A", sw.a0)),
        Err(e) => r.check("threshold", false, e.to_string()),
    }
    if let [.., x, y] = good.as_slice() {
        let change = (x.ratio_over_a - y.ratio_over_a).abs() / y.ratio_over_a;
        r.check("ratio/A settles", change < 0.05, format!("relative change {change:.3e} between the last two A"));
    }
    Ok(Outcome::new(r))
}

fn m_bounds(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let cert = LowerBoundCert::new(n, al, &spec)?;
    let grid = Arc::new(RadialGrid::log_spaced(n, 1e-4, 8.0, cfg.grid.radial_nodes)?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let profiles: Vec<_> = (0..cfg.sweep.profiles).map(|_| random_radial_profile(grid.clone(), &mut rng)).collect();
    let cols = ["a", "m_lower", "m_upper", "min_fibering_max", "worst_chain_margin", "worst_link", "worst_radial_margin", "error"];
    let mut r = report("m-bounds", cfg, &cols);
    let rows: Vec<_> = cfg
        .sweep
        .a_list
        .par_iter()
        .map(|&a| -> Result<_> {
            let upper = estimate_ma(&default_trial_family(a, al), n, &spec, a, al, cfg.grid.radial_nodes)?.m_upper;
            let mut worst = (f64::INFINITY, String::new());
            let mut fib = f64::INFINITY;
            let mut radial = f64::INFINITY;
            for u in &profiles {
                let ch = lower_bound_chain(u, &spec, a, al)?;
                let w = ch.worst();
                if w.margin < worst.0 {
                    worst = (w.margin, w.name.clone());
                }
                fib = fib.min(ch.fibering_max);
                radial = radial.min(check_radial_bound(u, a, al)?.worst_margin);
            }
            Ok((upper, fib, worst, radial))
        })
        .collect();
    let (mut xs, mut lows) = (Vec::new(), Vec::new());
    for (&a, row) in cfg.sweep.a_list.iter().zip(rows) {
        let low = cert.m_lower(a);
        match row {
            Ok((upper, fib, worst, radial)) => {
                r.table.push(vec![fmt_f(a), fmt_f(low), fmt_f(upper), fmt_f(fib), fmt_f(worst.0), worst.1.clone(), fmt_f(radial), String::new()]);
                r.check(&format!("A = {a:e} chain"), worst.0 >= -1e-8, format!("worst margin {:.3e} ({})", worst.0, worst.1));
                r.check(&format!("A = {a:e} radial bound"), radial >= 0.0, format!("worst margin {radial:.3e}"));
                r.check(&format!("A = {a:e} ordering"), upper >= low, format!("m_upper {upper:.4e} >= m_lower {low:.4e}"));
                xs.push(a);
                lows.push(low);
            }
            Err(e) => {
                r.table.push(vec![fmt_f(a), fmt_f(low), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
                r.check(&format!("A = {a:e}"), false, e.to_string());
            }
        }
    }
    if xs.len() >= 4 {
        r.slope("m_lower", &xs, &lows, Some(cert.m_exp), Some(1e-10));
    }
    let mut out = Outcome::new(r);
    out.files.push(("m-bounds_certificate.json".into(), json(&cert)));
    Ok(out)
}

fn c_bounds(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let k = cfg.problem.k.unwrap_or(2);
    if k + 2 > n {
        return Err(Error::InvalidParameter(format!("c-bounds needs 2 <= K <= N-2 (K = {k}, N = {n})")));
    }
    let bump = BumpSpec::default();
    let mut r = report("c-bounds", cfg, &["a", "lambda", "bound", "straight_max", "t_max", "energy_end", "error"]);
    let rows: Vec<_> = cfg.sweep.a_list.par_iter().map(|&a| path_upper_bound(&bump, &spec, n, k, al, a)).collect();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&a, row) in cfg.sweep.a_list.iter().zip(rows) {
        match row {
            Ok(p) => {
                r.table.push(vec![fmt_f(a), fmt_f(p.lambda), fmt_f(p.bound), fmt_f(p.straight_max), fmt_f(p.t_max), fmt_f(p.energy_end), String::new()]);
                r.check(&format!("A = {a:e}"), p.straight_max <= p.bound && p.energy_end < 0.0, format!("straight {:.4e} <= bound {:.4e}", p.straight_max, p.bound));
                xs.push(a);
                ys.push(p.bound);
            }
            Err(e) => {
                r.table.push(vec![fmt_f(a), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
                r.check(&format!("A = {a:e}"), false, e.to_string());
            }
        }
    }
    if xs.len() >= 4 {
        r.slope("c_bound", &xs, &ys, Some(c_exponent(n, al, k)), Some(cfg.sweep.slope_tol));
    }
    Ok(Outcome::new(r))
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    meta: SolutionMeta,
    verification: Option<&'a VerificationReport>,
    refined_level: Option<f64>,
    profile: ProfileRecord,
}

fn profile_files(prefix: &str, rec: &SolutionRecord, ver: Option<&VerificationReport>, refined: Option<f64>, cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut files = vec![(
        format!("{prefix}_solution.json"),
        json(&SolutionFile { meta: rec.meta(), verification: ver, refined_level: refined, profile: ProfileRecord::from(&rec.u_k) }),
    )];
    if cfg.output.profiles {
        files.push((format!("{prefix}_profile.txt"), rec.u_k.to_columnar()));
    }
    let mut path = String::from("# node energy\n");
    for (i, e) in rec.path.energies.iter().enumerate() {
        path.push_str(&format!("{i} {e:.17e}\n"));
    }
    files.push((format!("{prefix}_path.txt"), path));
    files
}

fn solve(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let (n, al, a) = (cfg.problem.n, cfg.problem.alpha, cfg.problem.a);
    let k = match cfg.problem.k {
        Some(k) => k,
        None => k_list(cfg)?.first().copied().ok_or_else(|| Error::InvalidParameter("no admissible K".into()))?,
    };
    let scfg = cfg.solver_config(k);
    let cols = ["n", "k", "a", "alpha", "level", "residual", "converged", "iterations", "nonradiality", "edge_ratio", "floor", "bound", "refined_level"];
    let mut r = report("solve", cfg, &cols);
    let rep = mpa_solve(&spec, &scfg)?;
    let rec = &rep.best;
    let floor = mountain_pass_floor(n, &spec).ok().map(|f| f.floor);
    let bound = path_upper_bound(&BumpSpec::default(), &spec, n, k, al, a).ok().map(|p| p.bound);
    let ver = if rec.converged { verify_solution(rec, &spec, cfg.solver.verify_tests, cfg.seed, cfg.solver.verify_tol).ok() } else { None };
    let refined = if cfg.solver.refine && rec.converged { Some(refine_solution(rec, &spec, 2, &scfg.opts)) } else { None };
    let refined_level = refined.as_ref().and_then(|x| x.as_ref().ok()).map(|x| x.level);
    r.table.push(vec![
        n.to_string(),
        k.to_string(),
        fmt_f(a),
        fmt_f(al),
        fmt_f(rec.level),
        fmt_f(rec.residual),
        rec.converged.to_string(),
        rec.iterations.to_string(),
        fmt_f(rec.nonradiality),
        fmt_f(rec.edge_ratio),
        opt(floor),
        opt(bound),
        opt(refined_level),
    ]);
    r.check("converged", rec.converged, format!("relative dual residual {:.3e} after {} iterations", rec.residual, rec.iterations));
    r.check("nonnegative", rec.u_k.values.iter().all(|&x| x >= -1e-10), "min u >= -1e-10");
    if let Some(f) = floor {
        r.check("above floor", rec.level > f, format!("level {:.6e} > floor {f:.6e}", rec.level));
    }
    if let Some(b) = bound {
        r.check("below bound", rec.level <= b, format!("level {:.6e} <= bound {b:.6e}", rec.level));
    }
    r.check("box", rec.edge_ratio <= cfg.solver.edge_tol, format!("edge ratio {:.3e}", rec.edge_ratio));
    if rep.spread_flag {
        r.check("multistart spread", true, format!("levels differ by {:.2}% across starts", 100.0 * rep.spread));
    }
    match &ver {
        Some(v) => r.check("verification", v.passed(), if v.passed() { format!("weak form {:.2e}", v.weak_form) } else { v.failures.join("; ") }),
        None => r.check("verification", false, "not run (solver did not converge)"),
    }
    match refined {
        Some(Ok(fine)) => {
            let change = (fine.level / rec.level - 1.0).abs();
            r.check("grid doubling", fine.converged && change < cfg.solver.refine_tol, format!("level change {:.3}%", 100.0 * change));
        }
        Some(Err(e)) => r.check("grid doubling", false, e.to_string()),
        None => {}
    }
    let mut out = Outcome::new(r);
    out.files = profile_files(&format!("solve_k{k}"), rec, ver.as_ref(), refined_level, cfg);
    Ok(out)
}

struct SeparationRun {
    crossovers: Vec<Crossover>,
    a_list: Vec<f64>,
    outcome: Outcome,
}

fn run_separation(cfg: &ExperimentConfig, command: &str, ks: &[usize]) -> Result<SeparationRun> {
    let spec = cfg.spec()?;
    let (n, al) = (cfg.problem.n, cfg.problem.alpha);
    let bump = BumpSpec::default();
    let crossovers = ks.iter().map(|&k| crossover(&bump, &spec, n, k, al)).collect::<Result<Vec<_>>>()?;
    let a_max = crossovers.iter().map(|c| c.a_star).fold(0.0, f64::max);
    let a_list = if cfg.sweep.a_list.is_empty() || command == "theorem-demo" {
        vec![cfg.sweep.a_star_factor * a_max]
    } else {
        cfg.sweep.a_list.clone()
    };
    let base = cfg.solver_config(ks[0]);
    let rep = separation_check(&spec, &base, ks, &a_list, cfg.grid.radial_nodes)?;
    let cols = ["a", "k", "c_estimate", "c_bound", "straight_max", "m_lower", "m_upper", "residual", "nonradiality", "converged", "separated", "error"];
    let mut r = report(command, cfg, &cols);
    for row in &rep.rows {
        r.table.push(vec![
            fmt_f(row.a),
            row.k.to_string(),
            opt(row.c_estimate),
            fmt_f(row.c_bound),
            fmt_f(row.straight_max),
            fmt_f(row.m_lower),
            fmt_f(row.m_upper),
            opt(row.residual),
            opt(row.nonradiality),
            row.converged.to_string(),
            row.separated.to_string(),
            row.error.clone().unwrap_or_default(),
        ]);
        let a_star = crossovers.iter().find(|c| c.k == row.k).map(|c| c.a_star).unwrap_or(f64::INFINITY);
        r.check(&format!("A = {:e}, K = {} converged", row.a, row.k), row.converged, row.error.clone().unwrap_or_else(|| format!("residual {:.2e}", row.residual.unwrap_or(f64::NAN))));
        if row.a >= a_star {
            let detail = format!("c = {} vs m_lower = {:.4e}", opt(row.c_estimate), row.m_lower);
            r.check(&format!("A = {:e}, K = {} separated", row.a, row.k), row.separated, detail);
        }
    }
    for c in &crossovers {
        r.check(&format!("crossover K = {}", c.k), c.a_star.is_finite(), format!("A* = {:.6e} (A0 = {:.3e})", c.a_star, c.a0));
    }
    let mut files = Vec::new();
    for &a in &a_list {
        let sols: Vec<&SolutionRecord> = rep.solutions.iter().filter(|s| s.0 == a).map(|s| &s.2).collect();
        for (i, s1) in sols.iter().enumerate() {
            for s2 in &sols[i + 1..] {
                match solution_distinctness(s1, s2) {
                    Ok(d) => r.check(&format!("A = {a:e}, K = {} vs {} distinct", s1.k, s2.k), d > 0.0, format!("distinctness {d:.4}")),
                    Err(e) => r.check(&format!("A = {a:e}, K = {} vs {} distinct", s1.k, s2.k), false, e.to_string()),
                }
            }
        }
        let idx = a_list.iter().position(|x| *x == a).unwrap_or(0);
        for s in &sols {
            let ver = verify_solution(s, &spec, cfg.solver.verify_tests, cfg.seed, cfg.solver.verify_tol);
            match &ver {
                Ok(v) => {
                    let detail = if v.passed() { format!("weak form {:.2e}, Nehari {:.2e}", v.weak_form, v.nehari) } else { v.failures.join("; ") };
                    r.check(&format!("A = {a:e}, K = {} verification", s.k), v.passed(), detail)
                }
                Err(e) => r.check(&format!("A = {a:e}, K = {} verification", s.k), false, e.to_string()),
            }
            files.extend(profile_files(&format!("{command}_a{idx}_k{}", s.k), s, ver.as_ref().ok(), None, cfg));
        }
    }
    files.push((format!("{command}_crossovers.json"), json(&crossovers)));
    Ok(SeparationRun { crossovers, a_list, outcome: Outcome { report: r, files } })
}

fn separate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ks = k_list(cfg)?;
    Ok(run_separation(cfg, "separate", &ks)?.outcome)
}

fn theorem_demo(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (n, al, p1, p2) = powers(cfg);
    let m = nu_and_admissible_k(n, al, p1, p2)?;
    let run = run_separation(cfg, "theorem-demo", &m.k_list)?;
    let mut out = run.outcome;
    out.report.check("nu", m.nu >= 1, format!("nu = {}", m.nu));
    let mut text = String::new();
    text.push_str(&format!("N = {n}, alpha = {al}, p1 = {p1}, p2 = {p2}, family = {:?}\n", cfg.nonlinearity.family));
    text.push_str(&format!("nu = {}, admissible K = {:?}{}\n", m.nu, m.k_list, if m.clamped { " (clamped)" } else { "" }));
    for c in &run.crossovers {
        text.push_str(&format!("K = {}: A0 = {:.4e}, crossover A* = {:.4e}\n", c.k, c.a0, c.a_star));
    }
    text.push_str(&format!("A used: {:?}\n", run.a_list));
    for row in &out.report.table.rows {
        text.push_str(&format!("A = {}, K = {}: c = {}, m_lower = {}, separated = {}\n", row[0], row[1], row[2], row[5], row[10]));
    }
    text.push_str(&format!("overall: {}\n", if out.report.passed() { "PASS" } else { "FAIL" }));
    out.files.push(("theorem-demo_summary.txt".into(), text));
    Ok(out)
}
