//! Radial projection of biradial profiles and the cross-K comparison map.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use super::banded::BandedMatrix;
use super::functional::norm_parts_with;
use super::{BiradialGrid, BiradialProfile, Closure, Lattice, RadialGrid, RadialProfile};
use crate::error::{invalid, Result};
use crate::quadrature::GaussLegendre;
use crate::special::beta_half;

#[derive(Debug, Clone)]
pub struct Radialization {
    /// Piecewise-linear radial profile in ρ = √(s² + t²).
    pub radial: RadialProfile,
    /// The radial profile evaluated on the biradial grid.
    pub lift: BiradialProfile,
    /// ‖u − lift‖_A / ‖u‖_A (zero for the zero profile).
    pub nonradiality: f64,
}

/// Uniform cubic B-spline centered at 0 with unit knot spacing.
fn bspline3(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a < 2.0 {
        let b = 2.0 - a;
        b * b * b / 6.0
    } else {
        0.0
    }
}

/// Mass-weighted least-squares fit of a cubic spline in ρ = √(s² + t²) over the
/// grid cells, i.e. the weighted angular average over the part of each shell
/// covered by the box. The fit is a projection, so applying it to its own lift
/// returns the same radial profile.
pub fn radialize(u: &BiradialProfile, a: f64, alpha: f64) -> Result<Radialization> {
    let g = &*u.grid;
    let rho = g.radius();
    let (lo, hi) = rho.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    let m = g.ns().max(g.nt()) + 1;
    let dr = (hi - lo) / (m - 1) as f64;
    if !(dr > 0.0) {
        return invalid("degenerate radial range");
    }
    // basis index b ↔ knot lo + (b − 1)·dr, b = 0..m+1
    let nb = m + 2;
    let basis = |r: f64| -> (usize, [f64; 4]) {
        let x = (r - lo) / dr;
        let k = (x.floor() as isize).clamp(0, m as isize - 2) as usize;
        let mut w = [0.0; 4];
        for (q, wq) in w.iter_mut().enumerate() {
            // basis k + q has knot at lo + (k + q − 1)·dr
            *wq = bspline3(x - (k + q) as f64 + 1.0);
        }
        (k, w)
    };
    let mut gram = BandedMatrix::zeros(nb, 3);
    let mut rhs = vec![0.0; nb];
    for ((&r, &w), &x) in rho.iter().zip(g.mass()).zip(&u.values) {
        let (k, b) = basis(r);
        for p in 0..4 {
            rhs[k + p] += w * b[p] * x;
            for q in 0..=p {
                gram.add(k + p, k + q, w * b[p] * b[q]);
            }
        }
    }
    let scale = (0..nb).map(|k| gram.get(k, k)).fold(0.0f64, f64::max);
    for k in 0..nb {
        if gram.get(k, k) <= 1e-14 * scale {
            gram.add(k, k, scale);
            rhs[k] = 0.0;
        }
    }
    let coef = gram.cholesky()?.solve(&rhs);
    let eval = |r: f64| -> f64 {
        let (k, b) = basis(r);
        (0..4).map(|p| b[p] * coef[k + p]).sum()
    };
    let lift_vals: Vec<f64> = rho.iter().map(|&r| eval(r)).collect();
    let mut nodes: Vec<f64> = (0..m).map(|k| lo + dr * k as f64).collect();
    let radial_vals: Vec<f64> = nodes.iter().map(|&r| eval(r)).collect();
    nodes.push(hi + dr);
    let rgrid = Arc::new(RadialGrid::from_nodes(g.dim(), nodes, Closure::Natural)?);
    let pot: Vec<f64> = g.potential_weights(alpha).into_iter().map(|p| a * p).collect();
    let base = norm_parts_with(g, &pot, &u.values).norm_sq;
    let diff: Vec<f64> = u.values.iter().zip(&lift_vals).map(|(x, y)| x - y).collect();
    let nonradiality = if base > 0.0 { (norm_parts_with(g, &pot, &diff).norm_sq / base).max(0.0).sqrt() } else { 0.0 };
    Ok(Radialization {
        radial: RadialProfile::new(rgrid, radial_vals),
        lift: BiradialProfile::new(u.grid.clone(), lift_vals),
        nonradiality,
    })
}

const BETA_NODES: usize = 48;

/// The average of `u` (a K₂-biradial profile) over the symmetry orbits of the
/// K₁ splitting, sampled on `target` (a K₁ grid).
pub fn project_across_k(u: &BiradialProfile, target: &Arc<BiradialGrid>) -> Result<BiradialProfile> {
    let (k1, k2, n) = (target.k(), u.grid.k(), target.dim());
    if u.grid.dim() != n {
        return invalid("profiles live in different dimensions");
    }
    if k1 == k2 {
        return Ok(BiradialProfile::from_fn(target.clone(), |s, t| u.interpolate(s, t)));
    }
    // β = |w|²/r² ~ Beta(a/2, b/2), substituted β = sin²φ
    let (a2, b2) = if k2 > k1 { (k2 - k1, n - k2) } else { (k1 - k2, k2) };
    let gl = GaussLegendre::new(BETA_NODES);
    let (phi, wphi) = gl.mapped(0.0, FRAC_PI_2);
    let norm = beta_half(a2, b2);
    let samples: Vec<(f64, f64)> = phi
        .iter()
        .zip(&wphi)
        .map(|(&p, &w)| {
            let (sn, cs) = p.sin_cos();
            let dens = 2.0 * sn.powi(a2 as i32 - 1) * cs.powi(b2 as i32 - 1) / norm;
            (sn * sn, w * dens)
        })
        .collect();
    Ok(BiradialProfile::from_fn(target.clone(), |s, t| {
        samples
            .iter()
            .map(|&(beta, w)| {
                let (sp, tp) = if k2 > k1 {
                    ((s * s + t * t * beta).sqrt(), t * (1.0 - beta).sqrt())
                } else {
                    (s * (1.0 - beta).sqrt(), (t * t + s * s * beta).sqrt())
                };
                w * u.interpolate(sp, tp)
            })
            .sum()
    }))
}

/// ‖u₁ − Π u₂‖_A / ‖u₁‖_A on the grid of u₁.
pub fn distinctness(u1: &BiradialProfile, u2: &BiradialProfile, a: f64, alpha: f64) -> Result<f64> {
    let proj = project_across_k(u2, &u1.grid)?;
    let g = &*u1.grid;
    let pot: Vec<f64> = g.potential_weights(alpha).into_iter().map(|p| a * p).collect();
    let base = norm_parts_with(g, &pot, &u1.values).norm_sq;
    if base <= 0.0 {
        return invalid("reference profile is zero");
    }
    let diff: Vec<f64> = u1.values.iter().zip(&proj.values).map(|(x, y)| x - y).collect();
    Ok((norm_parts_with(g, &pot, &diff).norm_sq / base).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(k: usize) -> Arc<BiradialGrid> {
        Arc::new(BiradialGrid::square(5, k, 6.0, 96).unwrap())
    }

    #[test]
    fn radial_input_is_nearly_radial() {
        let u = BiradialProfile::from_fn(grid(2), |s, t| (-(s * s + t * t)).exp());
        let r = radialize(&u, 1.0, 1.0).unwrap();
        assert!(r.nonradiality <= 1e-3, "{}", r.nonradiality);
    }

    #[test]
    fn odd_input_is_nonradial() {
        let u = BiradialProfile::from_fn(grid(2), |s, t| s * (-(s * s + t * t)).exp());
        let r = radialize(&u, 1.0, 1.0).unwrap();
        assert!(r.nonradiality > 0.1, "{}", r.nonradiality);
    }

    #[test]
    fn projection_is_idempotent() {
        let u = BiradialProfile::from_fn(grid(3), |s, t| s * t * (-(s * s + 2.0 * t * t)).exp());
        let r1 = radialize(&u, 1.0, 1.0).unwrap();
        let r2 = radialize(&r1.lift, 1.0, 1.0).unwrap();
        for (a, b) in r1.radial.values.iter().zip(&r2.radial.values) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        assert!(r2.nonradiality < 1e-10);
    }

    #[test]
    fn radial_functions_are_k_independent() {
        let f = |s: f64, t: f64| (-(s * s + t * t) / 2.0).exp();
        let u2 = BiradialProfile::from_fn(grid(2), f);
        let u3 = BiradialProfile::from_fn(grid(3), f);
        assert!(distinctness(&u2, &u3, 1.0, 3.0).unwrap() < 2e-3);
        assert!(distinctness(&u3, &u2, 1.0, 3.0).unwrap() < 2e-3);
        let v3 = BiradialProfile::from_fn(grid(3), |s, t| t * t * (-(s * s + t * t)).exp());
        assert!(distinctness(&u2, &v3, 1.0, 3.0).unwrap() > 0.1);
    }

    #[test]
    fn zero_profile_has_zero_nonradiality() {
        let u = BiradialProfile::zeros(grid(2));
        assert_eq!(radialize(&u, 1.0, 1.0).unwrap().nonradiality, 0.0);
    }
}
