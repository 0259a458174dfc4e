//! Grids, profiles, the discrete norm ‖·‖_A, the energy I and its gradient on
//! the radial (1D) and biradial (2D) symmetry reductions.

pub mod banded;
pub mod biradial;
pub mod functional;
pub mod radial;
pub mod radialize;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use biradial::{BiradialBox, BiradialGrid};
pub use functional::{norm_parts_with, Functional, NormParts};
pub use radial::{Closure, RadialGrid};
pub use radialize::{distinctness, radialize, Radialization};

/// Graph-Laplacian form of the gradient term: Σ_e w_e (u_i − u_j)² + Σ_i b_i u_i²,
/// where `boundary[i]` collects edges to zero Dirichlet ghosts.
#[derive(Debug, Clone, Default)]
pub struct Stencil {
    pub edges: Vec<(u32, u32, f64)>,
    pub boundary: Vec<f64>,
}

/// A discretized symmetry-reduced domain.
pub trait Lattice: Send + Sync + std::fmt::Debug {
    /// Number of unknowns.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Space dimension N.
    fn dim(&self) -> usize;
    /// Cell measures ∫_cell dx (including sphere-area factors).
    fn mass(&self) -> &[f64];
    /// Cell integrals of |x|^{−α}.
    fn potential_weights(&self, alpha: f64) -> Vec<f64>;
    /// |x| at the unknowns.
    fn radius(&self) -> Vec<f64>;
    fn stencil(&self) -> &Stencil;
    /// Half bandwidth of the stiffness matrix in the natural ordering.
    fn bandwidth(&self) -> usize;
}

/// Nodal values on a shared grid; zero outside the grid.
#[derive(Debug, Clone)]
pub struct Profile<G> {
    pub grid: Arc<G>,
    pub values: Vec<f64>,
}

pub type RadialProfile = Profile<RadialGrid>;
pub type BiradialProfile = Profile<BiradialGrid>;

impl<G: Lattice> Profile<G> {
    pub fn new(grid: Arc<G>, values: Vec<f64>) -> Self {
        assert_eq!(grid.len(), values.len(), "profile length must match grid");
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<G>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl RadialProfile {
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    /// Columnar text: `r value` per line.
    pub fn to_columnar(&self) -> String {
        let mut out = String::from("# r value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{r:.17e} {v:.17e}");
        }
        out
    }
}

impl BiradialProfile {
    pub fn from_fn(grid: Arc<BiradialGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.ns() {
            for j in 0..grid.nt() {
                values.push(f(grid.s(i), grid.t(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nt() + j]
    }

    /// Bilinear interpolation from cell centers; zero outside the box and
    /// linear decay to zero across Dirichlet faces.
    pub fn interpolate(&self, s: f64, t: f64) -> f64 {
        let g = &*self.grid;
        let b = g.bbox();
        if s < b.s_lo || s > b.s_hi || t < b.t_lo || t > b.t_hi {
            return 0.0;
        }
        let (ns, nt) = (g.ns() as isize, g.nt() as isize);
        let fs = (s - b.s_lo) / g.hs() - 0.5;
        let ft = (t - b.t_lo) / g.ht() - 0.5;
        let i0 = fs.floor() as isize;
        let j0 = ft.floor() as isize;
        let (ws, wt) = (fs - i0 as f64, ft - j0 as f64);
        let val = |i: isize, j: isize| -> f64 {
            let ic = if i < 0 && b.s_lo == 0.0 { 0 } else { i };
            let jc = if j < 0 && b.t_lo == 0.0 { 0 } else { j };
            if ic < 0 || jc < 0 || ic >= ns || jc >= nt {
                0.0
            } else {
                self.values[(ic * nt + jc) as usize]
            }
        };
        (1.0 - ws) * ((1.0 - wt) * val(i0, j0) + wt * val(i0, j0 + 1))
            + ws * ((1.0 - wt) * val(i0 + 1, j0) + wt * val(i0 + 1, j0 + 1))
    }

    /// Columnar text: `s t value` per line, s-major.
    pub fn to_columnar(&self) -> String {
        let mut out = String::from("# s t value\n");
        for i in 0..self.grid.ns() {
            for j in 0..self.grid.nt() {
                let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", self.grid.s(i), self.grid.t(j), self.at(i, j));
            }
        }
        out
    }
}

/// JSON-friendly description of a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub kind: String,
    pub dim: usize,
    pub k: Option<usize>,
    pub extent: Vec<f64>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl From<&RadialProfile> for ProfileRecord {
    fn from(p: &RadialProfile) -> Self {
        let nodes = p.grid.nodes();
        Self {
            kind: "radial".into(),
            dim: p.grid.dim(),
            k: None,
            extent: vec![nodes[0], *nodes.last().expect("nonempty grid")],
            shape: vec![nodes.len()],
            values: p.values.clone(),
        }
    }
}

impl From<&BiradialProfile> for ProfileRecord {
    fn from(p: &BiradialProfile) -> Self {
        let b = p.grid.bbox();
        Self {
            kind: "biradial".into(),
            dim: p.grid.dim(),
            k: Some(p.grid.k()),
            extent: vec![b.s_lo, b.s_hi, b.t_lo, b.t_hi],
            shape: vec![p.grid.ns(), p.grid.nt()],
            values: p.values.clone(),
        }
    }
}

/// ∫_a^b x^e dx without cancellation for nearby a, b.
pub fn moment(a: f64, b: f64, e: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let e1 = e + 1.0;
    if a <= 0.0 {
        return b.powf(e1) / e1;
    }
    let l = ((b - a) / a).ln_1p();
    if e1.abs() < 1e-14 {
        return l;
    }
    a.powf(e1) * (e1 * l).exp_m1() / e1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_is_accurate_far_from_origin() {
        let (a, b) = (6.0e6, 6.0e6 + 0.2);
        let h = b - a;
        let m = moment(a, b, 2.0);
        let exact = h * (3.0 * a * a + 3.0 * a * h + h * h) / 3.0;
        assert!((m / exact - 1.0).abs() < 1e-13);
        assert!((moment(0.0, 2.0, 3.0) - 4.0).abs() < 1e-15);
        assert!((moment(1.0, std::f64::consts::E, -1.0) - 1.0).abs() < 1e-15);
    }
}
