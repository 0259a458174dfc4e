//! The discrete energy I(u) = ½‖u‖²_A − ∫F(u), its gradient, the A-metric
//! Riesz map and dual residuals.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::banded::{BandedCholesky, BandedMatrix};
use super::{Lattice, Profile};
use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::{dot, Neumaier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParts {
    pub grad_part: f64,
    pub pot_part: f64,
    pub norm_sq: f64,
}

/// Gradient and potential parts of ‖u‖²_A for given scaled potential weights.
pub fn norm_parts_with<G: Lattice + ?Sized>(grid: &G, pot: &[f64], u: &[f64]) -> NormParts {
    let st = grid.stencil();
    let mut g = Neumaier::default();
    for &(i, j, w) in &st.edges {
        let d = u[i as usize] - u[j as usize];
        g.add(w * d * d);
    }
    for (b, x) in st.boundary.iter().zip(u) {
        if *b != 0.0 {
            g.add(b * x * x);
        }
    }
    let mut p = Neumaier::default();
    for (w, x) in pot.iter().zip(u) {
        p.add(w * x * x);
    }
    let (grad_part, pot_part) = (g.sum(), p.sum());
    NormParts { grad_part, pot_part, norm_sq: grad_part + pot_part }
}

/// Energy functional on a lattice for fixed (f, A, α), with the operator
/// L = K + A·diag(P) assembled and factorized once.
#[derive(Debug, Clone)]
pub struct Functional<G: Lattice> {
    pub grid: Arc<G>,
    pub spec: NonlinearitySpec,
    pub a: f64,
    pub alpha: f64,
    pot: Vec<f64>,
    chol: BandedCholesky,
}

impl<G: Lattice> Functional<G> {
    pub fn new(grid: Arc<G>, spec: &NonlinearitySpec, a: f64, alpha: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return invalid(format!("A = {a} must be positive"));
        }
        if !(alpha > 0.0) {
            return invalid(format!("alpha = {alpha} must be positive"));
        }
        let pot: Vec<f64> = grid.potential_weights(alpha).into_iter().map(|p| a * p).collect();
        let n = grid.len();
        let st = grid.stencil();
        let mut m = BandedMatrix::zeros(n, grid.bandwidth());
        for i in 0..n {
            m.add(i, i, st.boundary[i] + pot[i]);
        }
        for &(i, j, w) in &st.edges {
            let (i, j) = (i as usize, j as usize);
            m.add(i, i, w);
            m.add(j, j, w);
            m.add(i, j, -w);
        }
        let chol = m.cholesky()?;
        Ok(Self { grid, spec: spec.clone(), a, alpha, pot, chol })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len() == 0
    }

    /// A·P, the scaled potential weights.
    pub fn potential(&self) -> &[f64] {
        &self.pot
    }

    pub fn mass(&self) -> &[f64] {
        self.grid.mass()
    }

    pub fn norm_parts(&self, u: &[f64]) -> NormParts {
        norm_parts_with(&*self.grid, &self.pot, u)
    }

    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        self.norm_parts(u).norm_sq
    }

    /// (u, v)_A.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(&self.apply(u), v)
    }

    /// L u.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let st = self.grid.stencil();
        let mut y: Vec<f64> = u.iter().zip(&self.pot).zip(&st.boundary).map(|((x, p), b)| (p + b) * x).collect();
        for &(i, j, w) in &st.edges {
            let (i, j) = (i as usize, j as usize);
            let d = w * (u[i] - u[j]);
            y[i] += d;
            y[j] -= d;
        }
        y
    }

    /// Σ M F(u).
    pub fn integral_f(&self, u: &[f64]) -> f64 {
        let mut acc = Neumaier::default();
        for (m, x) in self.grid.mass().iter().zip(u) {
            acc.add(m * self.spec.big_f(*x));
        }
        acc.sum()
    }

    /// Σ M f(u) v.
    pub fn integral_fv(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = Neumaier::default();
        for ((m, x), y) in self.grid.mass().iter().zip(u).zip(v) {
            acc.add(m * self.spec.f(*x) * y);
        }
        acc.sum()
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let e = 0.5 * self.norm_sq(u) - self.integral_f(u);
        if !e.is_finite() {
            return Err(Error::DivergedEnergy(format!("I(u) = {e}")));
        }
        Ok(e)
    }

    /// g = L u − M f(u), the Euclidean gradient of the discrete energy.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.apply(u);
        for ((gi, m), x) in g.iter_mut().zip(self.grid.mass()).zip(u) {
            *gi -= m * self.spec.f(*x);
        }
        g
    }

    /// L^{-1} g: the A-metric representative of a gradient.
    pub fn riesz(&self, g: &[f64]) -> Vec<f64> {
        self.chol.solve(g)
    }

    /// sqrt(gᵀ L^{-1} g).
    pub fn dual_norm(&self, g: &[f64]) -> f64 {
        dot(g, &self.riesz(g)).max(0.0).sqrt()
    }

    /// (I, gradient, dual residual).
    pub fn energy_and_gradient(&self, u: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let e = self.energy(u)?;
        let g = self.gradient(u);
        let r = self.dual_norm(&g);
        Ok((e, g, r))
    }

    /// (L − M f′(u)) v.
    pub fn hess_vec(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut y = self.apply(v);
        for (((yi, m), x), w) in y.iter_mut().zip(self.grid.mass()).zip(u).zip(v) {
            *yi -= m * self.spec.df(*x) * w;
        }
        y
    }

    pub fn profile_energy(&self, p: &Profile<G>) -> Result<f64> {
        self.energy(&p.values)
    }

    /// I(t u) = ½t²‖u‖² − ∫F(tu) given ‖u‖².
    pub fn ray_energy(&self, u: &[f64], norm_sq: f64, t: f64) -> f64 {
        let mut acc = Neumaier::default();
        for (m, x) in self.grid.mass().iter().zip(u) {
            acc.add(m * self.spec.big_f(t * x));
        }
        0.5 * t * t * norm_sq - acc.sum()
    }

    /// d/dt I(t u) = t‖u‖² − ∫f(tu)u.
    pub fn ray_slope(&self, u: &[f64], norm_sq: f64, t: f64) -> f64 {
        let mut acc = Neumaier::default();
        for (m, x) in self.grid.mass().iter().zip(u) {
            acc.add(m * self.spec.f(t * x) * x);
        }
        t * norm_sq - acc.sum()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{BiradialGrid, RadialGrid};
    use super::*;
    use crate::nonlinearity::NonlinearitySpec;

    fn spec() -> NonlinearitySpec {
        NonlinearitySpec::min_power(2.5, 5.0).unwrap()
    }

    #[test]
    fn zero_profile_has_zero_energy() {
        let g = Arc::new(BiradialGrid::square(4, 2, 5.0, 16).unwrap());
        let f = Functional::new(g, &spec(), 10.0, 1.0).unwrap();
        let z = vec![0.0; f.len()];
        let (e, gr, r) = f.energy_and_gradient(&z).unwrap();
        assert_eq!((e, r), (0.0, 0.0));
        assert!(gr.iter().all(|x| *x == 0.0));
        assert_eq!(f.norm_parts(&z).norm_sq, 0.0);
    }

    #[test]
    fn norm_is_quadratic_and_matches_operator() {
        let g = Arc::new(BiradialGrid::square(5, 2, 4.0, 12).unwrap());
        let f = Functional::new(g.clone(), &spec(), 3.0, 3.0).unwrap();
        let u: Vec<f64> = (0..f.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0).collect();
        let n1 = f.norm_sq(&u);
        let n3 = f.norm_sq(&u.iter().map(|x| 3.0 * x).collect::<Vec<_>>());
        assert!((n3 / n1 - 9.0).abs() < 1e-12);
        assert!((f.inner(&u, &u) / n1 - 1.0).abs() < 1e-12);
        let back = f.apply(&f.riesz(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn radial_gradient_matches_closed_form() {
        let g = Arc::new(RadialGrid::log_spaced(4, 1e-4, 10.0, 20000).unwrap());
        let f = Functional::new(g.clone(), &spec(), 1.0, 1.0).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|r| (-r * r).exp()).collect();
        let parts = f.norm_parts(&u);
        // σ_4 ∫ 4r² e^{-2r²} r³ dr = 2π² · 4 · (1/8) = π²
        let exact = std::f64::consts::PI.powi(2);
        assert!((parts.grad_part / exact - 1.0).abs() < 1e-6, "{}", parts.grad_part / exact - 1.0);
    }
}
