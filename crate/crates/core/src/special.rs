//! Gamma values at half-integers, sphere areas and the Sobolev constant.

use std::f64::consts::PI;

/// Γ(m/2) for a positive integer m, by the recurrence Γ(x+1) = xΓ(x).
pub fn gamma_half(m: usize) -> f64 {
    assert!(m >= 1, "gamma_half needs m >= 1");
    let (mut x, mut g) = if m % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface area σ_d = 2π^{d/2}/Γ(d/2) of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Beta function B(a/2, b/2) for positive integers a, b.
pub fn beta_half(a: usize, b: usize) -> f64 {
    gamma_half(a) * gamma_half(b) / gamma_half(a + b)
}

/// Best constant S_N in ‖u‖_{2*} ≤ S_N‖∇u‖_2 (Aubin–Talenti closed form).
pub fn sobolev_constant_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    (PI * nf * (nf - 2.0)).powf(-0.5) * (gamma_half(2 * n) / gamma_half(n)).powf(1.0 / nf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_half_matches_factorials() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(8), 6.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn sobolev_matches_talenti_sphere_form() {
        // S_N^{-2} = N(N-2)/4 · σ_{N+1}^{2/N}
        for n in 3..9 {
            let nf = n as f64;
            let alt = (nf * (nf - 2.0) / 4.0 * sphere_area(n + 1).powf(2.0 / nf)).powf(-0.5);
            assert!((sobolev_constant_closed_form(n) / alt - 1.0).abs() < 1e-13);
        }
    }
}
