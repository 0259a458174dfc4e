//! Radial level estimates: fibering maxima along rays, trial upper estimates of
//! m_A, the pointwise decay bound for radial functions, the explicit lower
//! bound chain C0·A^{m_exp} and the mountain-pass floor.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Closure, Functional, Lattice, RadialGrid, RadialProfile};
use crate::error::{invalid, Error, Result};
use crate::exponents::{critical_exponents, m_exponent, m_exponent_at, p_used, two_star};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::{golden_max, integrate_adaptive, GaussLegendre, Neumaier};
use crate::special::{sobolev_constant_closed_form, sphere_area};
use crate::testfunction::unit_bump;

/// Largest ray parameter tried while bracketing the fibering maximum.
pub const T_BRACKET_MAX: f64 = 1e60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberingResult {
    pub t_u: f64,
    pub max_value: f64,
    pub norm_sq: f64,
}

/// Maximizes g(t) = ½t²‖u‖² − ∫F(tu) given g and g′: bracket from [1e-6, 1]
/// by doubling until g′ < 0, then golden section.
pub(crate) fn maximize_ray(g: impl Fn(f64) -> f64, slope: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (1e-6, 1.0);
    while slope(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > T_BRACKET_MAX {
            return Err(Error::BracketFailure(hi));
        }
    }
    while slope(lo) <= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::BracketFailure(lo));
        }
    }
    Ok(golden_max(g, lo, hi, 1e-12))
}

fn check_nonzero(u: &[f64]) -> Result<()> {
    if !u.iter().any(|&x| x > 0.0) {
        return Err(Error::Degenerate("profile has no positive part".into()));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return invalid("profile has non-finite values");
    }
    Ok(())
}

/// max_{t≥0} I(tu) for the discrete energy on any lattice.
pub fn fibering_max<G: Lattice>(fun: &Functional<G>, u: &[f64]) -> Result<FiberingResult> {
    check_nonzero(u)?;
    let norm_sq = fun.norm_sq(u);
    let (t_u, max_value) = maximize_ray(|t| fun.ray_energy(u, norm_sq, t), |t| fun.ray_slope(u, norm_sq, t))?;
    Ok(FiberingResult { t_u, max_value, norm_sq })
}

pub fn fibering_max_profile(profile: &RadialProfile, spec: &NonlinearitySpec, a: f64, alpha: f64) -> Result<FiberingResult> {
    let fun = Functional::new(profile.grid.clone(), spec, a, alpha)?;
    fibering_max(&fun, &profile.values)
}

/// Continuum integrals of the piecewise-linear interpolant of a radial profile,
/// extended by its first value down to r = 0 under a natural inner closure.
#[derive(Debug, Clone, Copy)]
pub struct RadialInterpolant<'a> {
    grid: &'a RadialGrid,
    values: &'a [f64],
}

const SEG_GL: usize = 8;

impl<'a> RadialInterpolant<'a> {
    pub fn new(profile: &'a RadialProfile) -> Self {
        Self { grid: &profile.grid, values: &profile.values }
    }

    /// (r_a, r_b, u_a, u_b) for each linear piece, plus the constant inner piece.
    fn segments(&self) -> (Option<(f64, f64)>, Vec<(f64, f64, f64, f64)>) {
        let nodes = self.grid.all_nodes();
        let m = nodes.len();
        let first = if self.grid.inner() == Closure::Dirichlet { 1 } else { 0 };
        let val = |i: usize| if i < first || i + 1 >= m { 0.0 } else { self.values[i - first] };
        let inner = (first == 0).then(|| (nodes[0], val(0)));
        let segs = (0..m - 1).map(|i| (nodes[i], nodes[i + 1], val(i), val(i + 1))).collect();
        (inner, segs)
    }

    /// σ_N ∫ g(u(r), r) r^{N−1} dr over the linear pieces, plus the inner piece
    /// via `inner(u0, r0)`.
    fn integrate(&self, g: impl Fn(f64, f64) -> f64, inner: impl Fn(f64, f64) -> f64) -> f64 {
        let sig = sphere_area(self.grid.dim());
        let e = self.grid.dim() as f64 - 1.0;
        let gl = GaussLegendre::new(SEG_GL);
        let (inn, segs) = self.segments();
        let mut acc = Neumaier::default();
        if let Some((r0, u0)) = inn {
            acc.add(inner(u0, r0));
        }
        for (ra, rb, ua, ub) in segs {
            if ua == 0.0 && ub == 0.0 {
                continue;
            }
            let h = rb - ra;
            acc.add(gl.integrate(ra, rb, |r| {
                let u = ua + (ub - ua) * (r - ra) / h;
                sig * g(u, r) * r.powf(e)
            }));
        }
        acc.sum()
    }

    /// ∫|∇u|², exact for the interpolant.
    pub fn grad_sq(&self) -> f64 {
        let sig = sphere_area(self.grid.dim());
        let e = self.grid.dim() as f64 - 1.0;
        let (_, segs) = self.segments();
        let mut acc = Neumaier::default();
        for (ra, rb, ua, ub) in segs {
            let d = (ub - ua) / (rb - ra);
            acc.add(sig * d * d * crate::discretization::moment(ra, rb, e));
        }
        acc.sum()
    }

    /// ∫u²|x|^{−α}; infinite when α ≥ N and the inner value is nonzero.
    pub fn pot(&self, alpha: f64) -> f64 {
        let n = self.grid.dim() as f64;
        let sig = sphere_area(self.grid.dim());
        self.integrate(
            |u, r| u * u * r.powf(-alpha),
            |u0, r0| {
                if u0 == 0.0 {
                    0.0
                } else if alpha >= n {
                    f64::INFINITY
                } else {
                    sig * u0 * u0 * r0.powf(n - alpha) / (n - alpha)
                }
            },
        )
    }

    pub fn norm_sq(&self, a: f64, alpha: f64) -> f64 {
        self.grad_sq() + a * self.pot(alpha)
    }

    /// ∫|u|^q.
    pub fn lp(&self, q: f64) -> f64 {
        let n = self.grid.dim() as f64;
        let sig = sphere_area(self.grid.dim());
        self.integrate(|u, _| u.abs().powf(q), |u0, r0| sig * u0.abs().powf(q) * r0.powf(n) / n)
    }

    /// ∫F(t u).
    pub fn integral_f(&self, spec: &NonlinearitySpec, t: f64) -> f64 {
        let n = self.grid.dim() as f64;
        let sig = sphere_area(self.grid.dim());
        self.integrate(|u, _| spec.big_f(t * u), |u0, r0| sig * spec.big_f(t * u0) * r0.powf(n) / n)
    }

    /// ∫f(t u) u.
    pub fn integral_fu(&self, spec: &NonlinearitySpec, t: f64) -> f64 {
        let n = self.grid.dim() as f64;
        let sig = sphere_area(self.grid.dim());
        self.integrate(|u, _| spec.f(t * u) * u, |u0, r0| sig * spec.f(t * u0) * u0 * r0.powf(n) / n)
    }
}

/// Fibering maximum of the continuum interpolant.
pub fn fibering_max_continuum(profile: &RadialProfile, spec: &NonlinearitySpec, a: f64, alpha: f64) -> Result<FiberingResult> {
    check_nonzero(&profile.values)?;
    let ip = RadialInterpolant::new(profile);
    let norm_sq = ip.norm_sq(a, alpha);
    if !norm_sq.is_finite() {
        return Err(Error::DivergedEnergy("profile is not in the energy space".into()));
    }
    let (t_u, max_value) =
        maximize_ray(|t| 0.5 * t * t * norm_sq - ip.integral_f(spec, t), |t| t * norm_sq - ip.integral_fu(spec, t))?;
    Ok(FiberingResult { t_u, max_value, norm_sq })
}

/// A member of the radial trial family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialProfile {
    /// exp(−(r/w)²).
    Gaussian { width: f64 },
    /// Unit bump on (center − half_width, center + half_width).
    Shell { center: f64, half_width: f64 },
}

impl TrialProfile {
    /// The profile on a grid fitted to its own scale.
    pub fn realize(&self, n_dim: usize, nodes: usize) -> Result<RadialProfile> {
        match *self {
            TrialProfile::Gaussian { width } => {
                let g = Arc::new(RadialGrid::log_spaced(n_dim, 1e-6 * width, 8.0 * width, nodes)?);
                Ok(RadialProfile::from_fn(g, |r| (-(r / width) * (r / width)).exp()))
            }
            TrialProfile::Shell { center, half_width } => {
                let (lo, hi) = (center - half_width, center + half_width);
                if !(lo > 0.0) {
                    return invalid("shell must stay away from the origin");
                }
                let g = Arc::new(RadialGrid::uniform_shell(n_dim, lo, hi, nodes)?);
                Ok(RadialProfile::from_fn(g, |r| unit_bump((r - lo) / (hi - lo))))
            }
        }
    }
}

/// Default family: Gaussians and shells on scales log-spaced around A^{1/α}.
pub fn default_trial_family(a: f64, alpha: f64) -> Vec<TrialProfile> {
    let base = a.powf(1.0 / alpha);
    let mut fam: Vec<TrialProfile> =
        (-12..=12).map(|k| TrialProfile::Gaussian { width: base * 2f64.powf(k as f64 / 2.0) }).collect();
    for k in -8..=16 {
        let center = base * 2f64.powf(k as f64 / 2.0);
        for frac in [0.05, 0.2, 0.5] {
            fam.push(TrialProfile::Shell { center, half_width: frac * center });
        }
    }
    fam
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaEstimate {
    pub m_upper: f64,
    pub argmin: TrialProfile,
    pub t_u: f64,
    /// Members whose fibering maximum could not be computed.
    pub failures: usize,
}

/// min over the family of the discrete fibering maximum: an upper estimate of m_A.
pub fn estimate_ma(
    family: &[TrialProfile],
    n_dim: usize,
    spec: &NonlinearitySpec,
    a: f64,
    alpha: f64,
    nodes: usize,
) -> Result<MaEstimate> {
    if family.is_empty() {
        return invalid("trial family is empty");
    }
    let results: Vec<Option<(TrialProfile, FiberingResult)>> = family
        .par_iter()
        .map(|m| {
            let p = m.realize(n_dim, nodes).ok()?;
            fibering_max_profile(&p, spec, a, alpha).ok().map(|r| (*m, r))
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_none()).count();
    let best = results
        .into_iter()
        .flatten()
        .min_by(|x, y| x.1.max_value.total_cmp(&y.1.max_value))
        .ok_or_else(|| Error::Degenerate("no trial member produced a fibering maximum".into()))?;
    Ok(MaEstimate { m_upper: best.1.max_value, argmin: best.0, t_u: best.1.t_u, failures })
}

/// Sobolev quotient ‖U‖_{2*}/‖∇U‖_2 for U(r) = (1 + (r/s)²)^{−(N−2)/2}.
fn talenti_quotient(n: usize, scale: f64) -> f64 {
    let nf = n as f64;
    let ts = two_star(n);
    let sig = sphere_area(n);
    let b = (nf - 2.0) / 2.0;
    // r = s·x/(1−x) maps (0, 1) onto (0, ∞)
    let map = |x: f64| (scale * x / (1.0 - x), scale / ((1.0 - x) * (1.0 - x)));
    let lp = integrate_adaptive(
        |x| {
            if x >= 1.0 {
                return 0.0;
            }
            let (r, jac) = map(x);
            let q = 1.0 + (r / scale) * (r / scale);
            q.powf(-b * ts) * r.powf(nf - 1.0) * jac
        },
        0.0,
        1.0,
        1e-14,
        0.0,
    );
    let gr = integrate_adaptive(
        |x| {
            if x >= 1.0 {
                return 0.0;
            }
            let (r, jac) = map(x);
            let q = 1.0 + (r / scale) * (r / scale);
            let du = -2.0 * b * r / (scale * scale) * q.powf(-b - 1.0);
            du * du * r.powf(nf - 1.0) * jac
        },
        0.0,
        1.0,
        1e-14,
        0.0,
    );
    (sig * lp).powf(1.0 / ts) / (sig * gr).sqrt()
}

/// Tolerance for the numeric Sobolev constant against its closed form.
pub const SOBOLEV_TOL: f64 = 1e-6;

/// S_N maximized over rescalings of the Aubin–Talenti profile; fails when it
/// disagrees with the closed form by more than `SOBOLEV_TOL`.
pub fn sobolev_constant(n: usize) -> Result<f64> {
    if n < 3 {
        return invalid(format!("Sobolev constant needs N >= 3 (got {n})"));
    }
    let (_, best) = golden_max(|ls| talenti_quotient(n, ls.exp()), -3.0, 3.0, 1e-6);
    let closed = sobolev_constant_closed_form(n);
    if (best / closed - 1.0).abs() > SOBOLEV_TOL {
        return Err(Error::Linalg(format!("numeric S_N = {best} disagrees with closed form {closed}")));
    }
    Ok(best)
}

/// Constants of the radial lower bound, independent of A and of u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCert {
    pub n: usize,
    pub alpha: f64,
    pub p_used: f64,
    pub two_star: f64,
    pub two_star_alpha: f64,
    /// λ with p = λ2* + (1−λ)2*_α.
    pub lambda_interp: f64,
    /// S_N^{λ2*}(2/σ_N)^{2α(1−λ)/(2N−2−α)}.
    pub c_interp: f64,
    pub c0: f64,
    pub m_exp: f64,
    pub s_n: f64,
    pub m2: f64,
}

impl LowerBoundCert {
    pub fn new(n: usize, alpha: f64, spec: &NonlinearitySpec) -> Result<Self> {
        if (alpha - 2.0).abs() < 1e-12 {
            return invalid("alpha = 2 is excluded");
        }
        let nf = n as f64;
        let t = critical_exponents(n, alpha)?;
        let tsa = t.two_star_alpha.ok_or_else(|| Error::InvalidParameter("alpha must be below 2N-2".into()))?;
        let ts = t.two_star;
        let p = p_used(n, alpha, spec.p1, spec.p2)?;
        if !(p >= spec.p1 && p <= spec.p2) {
            return invalid(format!("p = {p} lies outside [p1, p2]"));
        }
        let lambda = (p - tsa) / (ts - tsa);
        if !(0.0..1.0).contains(&lambda) {
            return invalid(format!("interpolation parameter {lambda} outside [0, 1)"));
        }
        let s_n = sobolev_constant(n)?;
        let sig = sphere_area(n);
        let d = 2.0 * nf - 2.0 - alpha;
        let c_interp = s_n.powf(lambda * ts) * (2.0 / sig).powf(2.0 * alpha * (1.0 - lambda) / d);
        let mc = spec.m2 * c_interp;
        let c0 = (p - 2.0) / (2.0 * p.powf(p / (p - 2.0))) * mc.powf(-2.0 / (p - 2.0));
        let m_exp = m_exponent(n, alpha, spec.p1, spec.p2);
        let chain_exp = (2.0 * nf - 2.0) * (1.0 - lambda) / d * 2.0 / (p - 2.0);
        if (chain_exp - m_exp).abs() > 1e-10 * m_exp.abs().max(1.0) || (m_exponent_at(n, alpha, p) - m_exp).abs() > 1e-10 {
            return Err(Error::Degenerate(format!("exponent mismatch: chain {chain_exp} vs {m_exp}")));
        }
        Ok(Self {
            n,
            alpha,
            p_used: p,
            two_star: ts,
            two_star_alpha: tsa,
            lambda_interp: lambda,
            c_interp,
            c0,
            m_exp,
            s_n,
            m2: spec.m2,
        })
    }

    /// C0·A^{m_exp}.
    pub fn m_lower(&self, a: f64) -> f64 {
        self.c0 * a.powf(self.m_exp)
    }
}

/// One inequality of the chain: lhs ≤ rhs, margin = (rhs − lhs)/|rhs|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl ChainLink {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        let margin = if rhs == 0.0 && lhs == 0.0 { 1.0 } else { (rhs - lhs) / rhs.abs() };
        Self { name: name.to_string(), lhs, rhs, margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub cert: LowerBoundCert,
    pub a: f64,
    pub links: Vec<ChainLink>,
    /// Fibering maximum of the continuum interpolant.
    pub fibering_max: f64,
    pub m_lower: f64,
}

impl ChainReport {
    pub fn worst(&self) -> &ChainLink {
        self.links.iter().min_by(|x, y| x.margin.total_cmp(&y.margin)).expect("links are nonempty")
    }
}

/// Evaluates every link of the lower-bound chain on the continuum interpolant
/// of a radial profile.
pub fn lower_bound_chain(profile: &RadialProfile, spec: &NonlinearitySpec, a: f64, alpha: f64) -> Result<ChainReport> {
    let n = profile.grid.dim();
    let cert = LowerBoundCert::new(n, alpha, spec)?;
    let ip = RadialInterpolant::new(profile);
    let nf = n as f64;
    let d = 2.0 * nf - 2.0 - alpha;
    let grad = ip.grad_sq();
    let norm_sq = grad + a * ip.pot(alpha);
    if !norm_sq.is_finite() {
        return Err(Error::DivergedEnergy("profile is not in the energy space".into()));
    }
    let norm = norm_sq.sqrt();
    let (ts, tsa, p, lam) = (cert.two_star, cert.two_star_alpha, cert.p_used, cert.lambda_interp);
    let sig = sphere_area(n);
    let l_tsa = ip.lp(tsa);
    let l_ts = ip.lp(ts);
    let l_p = ip.lp(p);
    let a_pow = a.powf(-(2.0 * nf - 2.0) * (1.0 - lam) / d);
    let mut links = vec![
        ChainLink::new("radial_decay", l_tsa, (2.0 / sig).powf(2.0 * alpha / d) * a.powf(-(2.0 * nf - 2.0) / d) * norm.powf(tsa)),
        ChainLink::new("sobolev", l_ts, cert.s_n.powf(ts) * grad.sqrt().powf(ts)),
        ChainLink::new("holder", l_p, l_ts.powf(lam) * l_tsa.powf(1.0 - lam)),
        ChainLink::new("interpolation", l_p, cert.c_interp * norm.powf(p) * a_pow),
        ChainLink::new("envelope", ip.integral_f(spec, 1.0), spec.m2 * l_p),
    ];
    let fib = fibering_max_continuum(profile, spec, a, alpha)?;
    let m_lower = cert.m_lower(a);
    links.push(ChainLink::new("fibering", m_lower, fib.max_value));
    Ok(ChainReport { cert, a, links, fibering_max: fib.max_value, m_lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialBoundCheck {
    pub worst_margin: f64,
    pub worst_r: f64,
}

/// |u(r)| ≤ √(2/σ_N)·A^{−1/4}‖u‖_A·r^{−(2N−2−α)/4} at every node, with ‖u‖_A
/// of the continuum interpolant; margin = (RHS − LHS)/RHS.
pub fn check_radial_bound(profile: &RadialProfile, a: f64, alpha: f64) -> Result<RadialBoundCheck> {
    let n = profile.grid.dim();
    let nf = n as f64;
    if !(alpha < 2.0 * nf - 2.0) {
        return invalid("the radial bound needs alpha < 2N-2");
    }
    let ip = RadialInterpolant::new(profile);
    let norm = ip.norm_sq(a, alpha).sqrt();
    if !norm.is_finite() {
        return Err(Error::DivergedEnergy("profile is not in the energy space".into()));
    }
    let c = (2.0 / sphere_area(n)).sqrt() * a.powf(-0.25) * norm;
    let e = (2.0 * nf - 2.0 - alpha) / 4.0;
    let mut out = RadialBoundCheck { worst_margin: 1.0, worst_r: profile.grid.nodes()[0] };
    for (&r, &u) in profile.grid.nodes().iter().zip(&profile.values) {
        let rhs = c * r.powf(-e);
        let m = if rhs == 0.0 { if u == 0.0 { 1.0 } else { f64::NEG_INFINITY } } else { (rhs - u.abs()) / rhs };
        if m < out.worst_margin {
            out = RadialBoundCheck { worst_margin: m, worst_r: r };
        }
    }
    Ok(out)
}

/// Mountain-pass floor from I(u) ≥ ½‖u‖² − M2 S_N^{2*}‖u‖^{2*}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MountainPassFloor {
    /// Radius R with inf_{‖u‖=R} I(u) ≥ floor.
    pub radius: f64,
    pub floor: f64,
}

pub fn mountain_pass_floor(n: usize, spec: &NonlinearitySpec) -> Result<MountainPassFloor> {
    let ts = two_star(n);
    if !(spec.p1 <= ts && ts <= spec.p2) {
        return invalid("the floor needs p1 <= 2* <= p2");
    }
    let s = sobolev_constant(n)?;
    let c = spec.m2 * s.powf(ts);
    let r2 = (1.0 / (ts * c)).powf(2.0 / (ts - 2.0));
    Ok(MountainPassFloor { radius: r2.sqrt(), floor: (0.5 - 1.0 / ts) * r2 })
}

/// Random nonnegative radial profile: one to three Gaussian bumps with
/// log-uniform amplitudes and widths and uniform centers in [0, 0.4·r_max].
pub fn random_radial_profile<R: Rng + ?Sized>(grid: Arc<RadialGrid>, rng: &mut R) -> RadialProfile {
    let r_max = grid.r_max();
    let terms = rng.random_range(1..=3);
    let bumps: Vec<(f64, f64, f64)> = (0..terms)
        .map(|_| {
            let amp = 10f64.powf(rng.random_range(-1.0..1.0));
            let width = r_max * 10f64.powf(rng.random_range(-3.0..-1.3));
            let center = rng.random_range(0.0..0.4) * r_max;
            (amp, width, center)
        })
        .collect();
    RadialProfile::from_fn(grid, |r| bumps.iter().map(|(a, w, c)| a * (-((r - c) / w).powi(2)).exp()).sum())
}
