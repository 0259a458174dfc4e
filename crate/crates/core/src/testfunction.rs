//! The bump ψ on E = (1/4, 3/4) × (π/6, π/3), its anisotropic rescalings
//! ψ_ε(ρ, θ) = ψ(ρ^{1/ε}, θ/ε), the lifted biradial functions v_ε, their
//! reduced and direct integrals, the ratio ‖w_A‖²_A/∫F(w_A) and the
//! straight-path upper bound on the biradial mountain-pass level.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{BiradialBox, BiradialGrid, BiradialProfile, Functional, Lattice};
use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::{golden_max, GaussLegendre, Neumaier};
use crate::special::sphere_area;

pub const R_LO: f64 = 0.25;
pub const R_HI: f64 = 0.75;
pub const PHI_LO: f64 = PI / 6.0;
pub const PHI_HI: f64 = PI / 3.0;

/// exp(4 − 1/(x(1−x))) on (0, 1), zero elsewhere; peak value 1 at x = 1/2.
#[inline]
pub fn unit_bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (4.0 - 1.0 / (x * (1.0 - x))).exp()
    }
}

#[inline]
pub fn unit_bump_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let q = x * (1.0 - x);
        unit_bump(x) * (1.0 - 2.0 * x) / (q * q)
    }
}

/// Angular weight H(θ) = cos^{K−1}θ · sin^{N−K−1}θ.
#[inline]
pub fn angular_weight(n: usize, k: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    c.powi(k as i32 - 1) * s.powi((n - k) as i32 - 1)
}

/// Tensor bump ψ(r, φ) = B((r − 1/4)/(1/2))·B((φ − π/6)/(π/6)) with B the unit bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    /// Gauss–Legendre nodes per direction for integrals over E.
    pub quad_nodes: usize,
    /// Relative tolerance of the node-doubling convergence test.
    pub quad_tol: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self { quad_nodes: 64, quad_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceIntegrals {
    /// ∫_E (ψ_r² + ψ_φ²/r²) dr dφ.
    pub q_grad: f64,
    /// ∫_E ψ² dr dφ.
    pub q_mass: f64,
    /// ∫_E F(ψ) dr dφ.
    pub q_f: f64,
}

/// Integrals of v_ε: ∫v²|x|^{−α}, ∫F(v), ∫|∇v|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    pub pot: f64,
    pub mass_f: f64,
    pub grad: f64,
}

impl Integrals {
    pub fn max_rel_diff(&self, o: &Integrals) -> f64 {
        let d = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        d(self.pot, o.pot).max(d(self.mass_f, o.mass_f)).max(d(self.grad, o.grad))
    }
}

struct Nodes {
    r: Vec<f64>,
    phi: Vec<f64>,
    w: Vec<f64>,
}

impl BumpSpec {
    pub fn with_nodes(quad_nodes: usize) -> Self {
        Self { quad_nodes, ..Self::default() }
    }

    #[inline]
    pub fn psi(&self, r: f64, phi: f64) -> f64 {
        unit_bump((r - R_LO) / (R_HI - R_LO)) * unit_bump((phi - PHI_LO) / (PHI_HI - PHI_LO))
    }

    #[inline]
    pub fn psi_r(&self, r: f64, phi: f64) -> f64 {
        unit_bump_deriv((r - R_LO) / (R_HI - R_LO)) / (R_HI - R_LO) * unit_bump((phi - PHI_LO) / (PHI_HI - PHI_LO))
    }

    #[inline]
    pub fn psi_phi(&self, r: f64, phi: f64) -> f64 {
        unit_bump((r - R_LO) / (R_HI - R_LO)) * unit_bump_deriv((phi - PHI_LO) / (PHI_HI - PHI_LO)) / (PHI_HI - PHI_LO)
    }

    fn nodes(&self, n: usize) -> Nodes {
        let gl = GaussLegendre::new(n);
        let (rx, rw) = gl.mapped(R_LO, R_HI);
        let (px, pw) = gl.mapped(PHI_LO, PHI_HI);
        let mut out = Nodes { r: Vec::with_capacity(n * n), phi: Vec::with_capacity(n * n), w: Vec::with_capacity(n * n) };
        for (r, wr) in rx.iter().zip(&rw) {
            for (p, wp) in px.iter().zip(&pw) {
                out.r.push(*r);
                out.phi.push(*p);
                out.w.push(wr * wp);
            }
        }
        out
    }

    /// Tensor Gauss–Legendre over E, doubling nodes until the relative change
    /// falls below the tolerance (at most 1024 nodes per direction).
    fn converged<T>(&self, eval: impl Fn(&Nodes) -> T, diff: impl Fn(&T, &T) -> f64) -> T {
        let mut n = self.quad_nodes.max(4);
        let mut prev = eval(&self.nodes(n));
        while n < 1024 {
            n *= 2;
            let next = eval(&self.nodes(n));
            let d = diff(&prev, &next);
            prev = next;
            if d <= self.quad_tol {
                break;
            }
        }
        prev
    }

    pub fn reference_integrals(&self, spec: &NonlinearitySpec) -> ReferenceIntegrals {
        let eval = |nd: &Nodes| {
            let (mut g, mut m, mut f) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
            for i in 0..nd.w.len() {
                let (r, p, w) = (nd.r[i], nd.phi[i], nd.w[i]);
                let psi = self.psi(r, p);
                let (pr, pp) = (self.psi_r(r, p), self.psi_phi(r, p));
                g.add(w * (pr * pr + pp * pp / (r * r)));
                m.add(w * psi * psi);
                f.add(w * spec.big_f(psi));
            }
            ReferenceIntegrals { q_grad: g.sum(), q_mass: m.sum(), q_f: f.sum() }
        };
        self.converged(eval, |a, b| {
            let d = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
            d(a.q_grad, b.q_grad).max(d(a.q_mass, b.q_mass)).max(d(a.q_f, b.q_f))
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("epsilon = {eps} must lie in (0, 1]"));
    }
    Ok(())
}

fn check_split(n: usize, k: usize) -> Result<()> {
    if k < 2 || k + 2 > n {
        return invalid(format!("K = {k} must satisfy 2 <= K <= N-2 (N = {n})"));
    }
    Ok(())
}

/// ψ_ε and the lifted v_ε(s, t) = ψ_ε(ρ, θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBump {
    pub bump: BumpSpec,
    pub eps: f64,
}

/// Support of ψ_ε in polar coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarSupport {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl PolarSupport {
    /// Bounding box of φ(E_ε) in the (s, t) plane.
    pub fn bounding_box(&self) -> BiradialBox {
        BiradialBox {
            s_lo: self.rho_lo * self.theta_hi.cos(),
            s_hi: self.rho_hi * self.theta_lo.cos(),
            t_lo: self.rho_lo * self.theta_lo.sin(),
            t_hi: self.rho_hi * self.theta_hi.sin(),
        }
    }
}

impl ScaledBump {
    pub fn new(bump: BumpSpec, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self { bump, eps })
    }

    pub fn support(&self) -> PolarSupport {
        PolarSupport {
            rho_lo: R_LO.powf(self.eps),
            rho_hi: R_HI.powf(self.eps),
            theta_lo: PHI_LO * self.eps,
            theta_hi: PHI_HI * self.eps,
        }
    }

    #[inline]
    pub fn psi_eps(&self, rho: f64, theta: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        self.bump.psi(rho.powf(1.0 / self.eps), theta / self.eps)
    }

    /// v_ε(s, t).
    #[inline]
    pub fn value(&self, s: f64, t: f64) -> f64 {
        self.psi_eps(s.hypot(t), t.atan2(s))
    }

    /// (∂_s v_ε, ∂_t v_ε) by the chain rule through polar coordinates.
    pub fn gradient(&self, s: f64, t: f64) -> (f64, f64) {
        let rho = s.hypot(t);
        if rho <= 0.0 {
            return (0.0, 0.0);
        }
        let theta = t.atan2(s);
        let e = self.eps;
        let r = rho.powf(1.0 / e);
        let phi = theta / e;
        let d_rho = self.bump.psi_r(r, phi) * r / (e * rho);
        let d_theta = self.bump.psi_phi(r, phi) / e;
        let (sn, cs) = theta.sin_cos();
        (cs * d_rho - sn / rho * d_theta, sn * d_rho + cs / rho * d_theta)
    }
}

/// Right-hand sides of the change-of-variables identities: integrals over E
/// with the factors r^{…ε…} and H(εφ).
pub fn reduced_integrals(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, eps: f64) -> Result<Integrals> {
    check_eps(eps)?;
    check_split(n, k)?;
    let nf = n as f64;
    let c = sphere_area(k) * sphere_area(n - k);
    let eval = |nd: &Nodes| {
        let (mut p, mut f, mut g) = (Neumaier::default(), Neumaier::default(), Neumaier::default());
        for i in 0..nd.w.len() {
            let (r, ph, w) = (nd.r[i], nd.phi[i], nd.w[i]);
            let h = angular_weight(n, k, eps * ph);
            let psi = bump.psi(r, ph);
            let (pr, pp) = (bump.psi_r(r, ph), bump.psi_phi(r, ph));
            p.add(w * psi * psi * r.powf((nf - alpha) * eps - 1.0) * h);
            f.add(w * spec.big_f(psi) * r.powf(nf * eps - 1.0) * h);
            g.add(w * (pr * pr + pp * pp / (r * r)) * r.powf((nf - 2.0) * eps + 1.0) * h);
        }
        Integrals { pot: c * eps * eps * p.sum(), mass_f: c * eps * eps * f.sum(), grad: c * g.sum() }
    };
    Ok(bump.converged(eval, |a, b| a.max_rel_diff(b)))
}

/// Reduced ∫F(t ψ) r^{Nε−1} H(εφ) including σ_Kσ_{N−K}ε², for a list of t.
fn reduced_mass_f_scaled(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, eps: f64, t: f64) -> f64 {
    let c = sphere_area(k) * sphere_area(n - k);
    let nf = n as f64;
    let eval = |nd: &Nodes| {
        let mut f = Neumaier::default();
        for i in 0..nd.w.len() {
            let (r, ph, w) = (nd.r[i], nd.phi[i], nd.w[i]);
            f.add(w * spec.big_f(t * bump.psi(r, ph)) * r.powf(nf * eps - 1.0) * angular_weight(n, k, eps * ph));
        }
        c * eps * eps * f.sum()
    };
    bump.converged(eval, |a, b| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
}

/// Grid with `cells` × `cells` cells on the bounding box of supp v_ε.
pub fn support_grid(n: usize, k: usize, eps: f64, cells: usize) -> Result<BiradialGrid> {
    let sb = ScaledBump::new(BumpSpec::default(), eps)?;
    BiradialGrid::new(n, k, sb.support().bounding_box(), cells, cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectIntegrals {
    pub integrals: Integrals,
    /// Fewer than 32 cells across the support in some direction.
    pub under_resolved: bool,
}

/// Left-hand sides of the identities: midpoint quadrature of v_ε on a
/// physical (s, t) grid with weight σ_Kσ_{N−K}s^{K−1}t^{N−K−1}.
pub fn direct_integrals(
    bump: &BumpSpec,
    spec: &NonlinearitySpec,
    n: usize,
    k: usize,
    alpha: f64,
    eps: f64,
    grid: &BiradialGrid,
) -> Result<DirectIntegrals> {
    check_split(n, k)?;
    if grid.dim() != n || grid.k() != k {
        return invalid("grid dimension or splitting does not match");
    }
    let sb = ScaledBump::new(*bump, eps)?;
    let bb = sb.support().bounding_box();
    let g = grid.bbox();
    if g.s_lo > bb.s_lo || g.s_hi < bb.s_hi || g.t_lo > bb.t_lo || g.t_hi < bb.t_hi {
        return Err(Error::Unresolved(format!("grid box {g:?} does not contain the support {bb:?}")));
    }
    let across_s = (bb.s_hi - bb.s_lo) / grid.hs();
    let across_t = (bb.t_hi - bb.t_lo) / grid.ht();
    let pot = grid.integrate_midpoint(|s, t| {
        let v = sb.value(s, t);
        v * v * (s * s + t * t).powf(-0.5 * alpha)
    });
    let mass_f = grid.integrate_midpoint(|s, t| spec.big_f(sb.value(s, t)));
    let grad = grid.integrate_midpoint(|s, t| {
        let (gs, gt) = sb.gradient(s, t);
        gs * gs + gt * gt
    });
    Ok(DirectIntegrals { integrals: Integrals { pot, mass_f, grad }, under_resolved: across_s < 32.0 || across_t < 32.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub a: f64,
    pub eps: f64,
    pub ratio: f64,
    pub ratio_over_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweep {
    pub points: Vec<RatioPoint>,
    /// Least listed A from which on every listed ratio exceeds 1.
    pub a0: f64,
}

/// ‖w_A‖²_A / ∫F(w_A) at w_A = v_{A^{−1/2}}.
pub fn ratio_at(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, a: f64) -> Result<RatioPoint> {
    if !(a > 1.0) {
        return invalid(format!("A = {a} must exceed 1"));
    }
    let eps = a.powf(-0.5);
    let it = reduced_integrals(bump, spec, n, k, alpha, eps)?;
    let ratio = (it.grad + a * it.pot) / it.mass_f;
    Ok(RatioPoint { a, eps, ratio, ratio_over_a: ratio / a })
}

pub fn ratio_and_a0(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, a_list: &[f64]) -> Result<RatioSweep> {
    if a_list.is_empty() || a_list.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("A list must be nonempty and strictly increasing");
    }
    let points: Vec<RatioPoint> =
        a_list.par_iter().map(|&a| ratio_at(bump, spec, n, k, alpha, a)).collect::<Result<Vec<_>>>()?;
    let mut a0 = None;
    for p in points.iter().rev() {
        if p.ratio > 1.0 {
            a0 = Some(p.a);
        } else {
            break;
        }
    }
    let a0 = a0.ok_or(Error::NoThreshold)?;
    Ok(RatioSweep { points, a0 })
}

/// Scale λ of ū(x) = w_A(x/λ): (‖w‖²/∫F)^{1/α} for α < 2, (‖w‖²/∫F)^{1/2} for α > 2.
pub fn lambda_for(alpha: f64, ratio: f64) -> f64 {
    if alpha < 2.0 {
        ratio.powf(1.0 / alpha)
    } else {
        ratio.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct Ubar {
    pub profile: BiradialProfile,
    pub lambda: f64,
    /// I(ū) from the reduced integrals and exact scaling.
    pub energy: f64,
    /// I(ū) from the discrete functional on the profile's grid.
    pub energy_discrete: f64,
    /// Reduced integrals of w_A.
    pub w: Integrals,
}

fn scaled_energy(n: usize, alpha: f64, a: f64, w: &Integrals, lambda: f64) -> f64 {
    let nf = n as f64;
    0.5 * lambda.powf(nf - 2.0) * w.grad + 0.5 * lambda.powf(nf - alpha) * a * w.pot - lambda.powf(nf) * w.mass_f
}

/// ū(x) = w_A(x/λ) sampled on a `cells`² grid fitted to its support.
pub fn build_ubar(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, a: f64, cells: usize) -> Result<Ubar> {
    if (alpha - 2.0).abs() < 1e-12 {
        return invalid("alpha = 2 is excluded");
    }
    let rp = ratio_at(bump, spec, n, k, alpha, a)?;
    if !(rp.ratio > 1.0) {
        return invalid(format!("A = {a} is not above the threshold: ratio = {} <= 1", rp.ratio));
    }
    let lambda = lambda_for(alpha, rp.ratio);
    let w = reduced_integrals(bump, spec, n, k, alpha, rp.eps)?;
    let sb = ScaledBump::new(*bump, rp.eps)?;
    let bb = sb.support().bounding_box();
    let pad = 0.02;
    let (ws, wt) = (bb.s_hi - bb.s_lo, bb.t_hi - bb.t_lo);
    let bx = BiradialBox {
        s_lo: lambda * (bb.s_lo - pad * ws).max(0.0),
        s_hi: lambda * (bb.s_hi + pad * ws),
        t_lo: lambda * (bb.t_lo - pad * wt).max(0.0),
        t_hi: lambda * (bb.t_hi + pad * wt),
    };
    let grid = Arc::new(BiradialGrid::new(n, k, bx, cells, cells)?);
    let profile = BiradialProfile::from_fn(grid.clone(), |s, t| sb.value(s / lambda, t / lambda));
    let fun = Functional::new(grid, spec, a, alpha)?;
    let energy_discrete = fun.energy(&profile.values)?;
    Ok(Ubar { profile, lambda, energy: scaled_energy(n, alpha, a, &w, lambda), energy_discrete, w })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathBound {
    pub a: f64,
    pub lambda: f64,
    /// ‖ū‖²_A.
    pub norm_sq: f64,
    /// ∫F(ū).
    pub int_f: f64,
    /// I(ū) < 0.
    pub energy_end: f64,
    /// argmax of I(tū) on [0, 1].
    pub t_max: f64,
    /// max_{t∈[0,1]} I(tū).
    pub straight_max: f64,
    /// Maximizer (a/(bμ))^{1/(μ−2)} of the majorant ½t²a − t^μ b.
    pub t_majorant: f64,
    /// m·a^{μ/(μ−2)} b^{−2/(μ−2)}, m = (1/μ)^{2/(μ−2)}(½ − 1/μ).
    pub bound: f64,
}

/// Straight path t ↦ tū, its maximum, and the closed-form majorant.
pub fn path_upper_bound(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, a: f64) -> Result<PathBound> {
    if (alpha - 2.0).abs() < 1e-12 {
        return invalid("alpha = 2 is excluded");
    }
    let rp = ratio_at(bump, spec, n, k, alpha, a)?;
    if !(rp.ratio > 1.0) {
        return invalid(format!("A = {a} is not above the threshold: ratio = {} <= 1", rp.ratio));
    }
    let eps = rp.eps;
    let lambda = lambda_for(alpha, rp.ratio);
    let w = reduced_integrals(bump, spec, n, k, alpha, eps)?;
    let nf = n as f64;
    let norm_sq = lambda.powf(nf - 2.0) * w.grad + lambda.powf(nf - alpha) * a * w.pot;
    let ln = lambda.powf(nf);
    let int_f = ln * w.mass_f;
    let energy_end = 0.5 * norm_sq - int_f;
    let mu = spec.mu;
    let path = |t: f64| 0.5 * t * t * norm_sq - ln * reduced_mass_f_scaled(bump, spec, n, k, eps, t);
    let (t_max, straight_max) = golden_max(path, 0.0, 1.0, 1e-10);
    let m = (1.0 / mu).powf(2.0 / (mu - 2.0)) * (0.5 - 1.0 / mu);
    let bound = m * norm_sq.powf(mu / (mu - 2.0)) * int_f.powf(-2.0 / (mu - 2.0));
    let t_majorant = (norm_sq / (int_f * mu)).powf(1.0 / (mu - 2.0));
    Ok(PathBound { a, lambda, norm_sq, int_f, energy_end, t_max, straight_max, t_majorant, bound })
}

/// (min, max) of H(εφ)/ε^{N−K−1} over φ ∈ [π/6, π/3] on a fine sample.
pub fn h_scaled_range(n: usize, k: usize, eps: f64) -> (f64, f64) {
    let e = (n - k) as i32 - 1;
    (0..=1000).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
        let phi = PHI_LO + (PHI_HI - PHI_LO) * i as f64 / 1000.0;
        let v = angular_weight(n, k, eps * phi) / eps.powi(e);
        (lo.min(v), hi.max(v))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> NonlinearitySpec {
        NonlinearitySpec::min_power(2.5, 5.0).unwrap()
    }

    #[test]
    fn bump_is_positive_inside_and_zero_outside() {
        let b = BumpSpec::default();
        assert_eq!(b.psi(0.5, PI / 4.0), 1.0);
        assert_eq!(b.psi(0.25, PI / 4.0), 0.0);
        assert_eq!(b.psi(0.5, PI / 3.0 + 1e-9), 0.0);
        assert!(b.psi(0.26, 0.53) > 0.0);
    }

    #[test]
    fn h_at_quarter_pi() {
        assert!((angular_weight(4, 2, PI / 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reference_integrals_are_positive() {
        let r = BumpSpec::default().reference_integrals(&spec());
        assert!(r.q_grad > 0.0 && r.q_mass > 0.0 && r.q_f > 0.0);
    }

    #[test]
    fn unit_eps_reduced_equals_direct() {
        let b = BumpSpec::default();
        let red = reduced_integrals(&b, &spec(), 4, 2, 1.0, 1.0).unwrap();
        let grid = support_grid(4, 2, 1.0, 512).unwrap();
        let dir = direct_integrals(&b, &spec(), 4, 2, 1.0, 1.0, &grid).unwrap();
        assert!(!dir.under_resolved);
        assert!(red.max_rel_diff(&dir.integrals) < 1e-10, "{}", red.max_rel_diff(&dir.integrals));
    }

    #[test]
    fn support_scales_with_eps() {
        let sb = ScaledBump::new(BumpSpec::default(), 0.2).unwrap();
        let s = sb.support();
        assert!((s.theta_lo - PI * 0.2 / 6.0).abs() < 1e-15 && (s.theta_hi - PI * 0.2 / 3.0).abs() < 1e-15);
        assert!(ScaledBump::new(BumpSpec::default(), 0.0).is_err());
        assert!(ScaledBump::new(BumpSpec::default(), 1.5).is_err());
    }

    #[test]
    fn h_bounds_hold_for_small_eps() {
        for &(n, k) in &[(4usize, 2usize), (5, 2), (6, 3)] {
            for eps in [0.1, 0.01, 0.001] {
                let (lo, hi) = h_scaled_range(n, k, eps);
                let e = (n - k) as i32 - 1;
                let c1 = (PHI_LO / 2.0).powi(e) * 0.5f64.powi(k as i32 - 1);
                let c2 = PHI_HI.powi(e);
                assert!(lo > c1 && hi < c2, "n={n} k={k} eps={eps}");
            }
        }
    }

    #[test]
    fn straight_path_below_bound() {
        let pb = path_upper_bound(&BumpSpec::default(), &spec(), 4, 2, 1.0, 1e3).unwrap();
        assert!(pb.energy_end < 0.0);
        assert!(pb.straight_max <= pb.bound);
        assert!(pb.t_max > 0.0 && pb.t_max < 1.0);
    }
}

#[cfg(test)]
mod identity_tests {
    use super::*;

    #[test]
    fn reduced_matches_direct_for_small_eps() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let b = BumpSpec::default();
        for &(n, k, al) in &[(5usize, 2usize, 3.0), (6, 3, 1.0)] {
            let red = reduced_integrals(&b, &spec, n, k, al, 0.1).unwrap();
            let g = support_grid(n, k, 0.1, 256).unwrap();
            let d = direct_integrals(&b, &spec, n, k, al, 0.1, &g).unwrap();
            assert!(red.max_rel_diff(&d.integrals) < 1e-8);
        }
    }

    #[test]
    fn coarse_grid_is_flagged() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let g = support_grid(4, 2, 0.5, 16).unwrap();
        let d = direct_integrals(&BumpSpec::default(), &spec, 4, 2, 1.0, 0.5, &g).unwrap();
        assert!(d.under_resolved);
    }

    #[test]
    fn grid_missing_support_is_rejected() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let g = BiradialGrid::square(4, 2, 0.5, 64).unwrap();
        assert!(direct_integrals(&BumpSpec::default(), &spec, 4, 2, 1.0, 0.5, &g).is_err());
    }

    #[test]
    fn ratio_over_a_converges_and_diverges() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let b = BumpSpec::default();
        let sw = ratio_and_a0(&b, &spec, 4, 2, 1.0, &[1e4, 1e6, 1e8]).unwrap();
        let (r6, r8) = (sw.points[1].ratio_over_a, sw.points[2].ratio_over_a);
        assert!((r6 - r8).abs() / r8 < 0.05);
        assert!(sw.points[0].ratio < sw.points[1].ratio);
    }

    #[test]
    fn bound_slopes_match_exponents() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let b = BumpSpec::default();
        for &(n, k, al, want) in &[(4usize, 2usize, 1.0, 2.5), (5, 2, 3.0, 0.5)] {
            let xs: Vec<f64> = (2..=6).map(|e| 10f64.powi(e)).collect();
            let ys: Vec<f64> = xs.iter().map(|&a| path_upper_bound(&b, &spec, n, k, al, a).unwrap().bound).collect();
            let slope = (ys[4].ln() - ys[0].ln()) / (xs[4].ln() - xs[0].ln());
            assert!((slope - want).abs() < 0.05, "n={n} slope={slope}");
        }
    }

    #[test]
    fn ubar_has_negative_energy() {
        let spec = NonlinearitySpec::min_power(2.5, 5.0).unwrap();
        let u = build_ubar(&BumpSpec::default(), &spec, 4, 2, 1.0, 100.0, 128).unwrap();
        assert!(u.lambda > 1.0);
        assert!(u.energy < 0.0 && u.energy_discrete < 0.0);
        assert!(u.energy <= -0.5 * u.lambda.powi(4) * u.w.mass_f * 0.999);
    }
}
