//! One-dimensional radial grids with sphere-area weights.

use serde::{Deserialize, Serialize};

use super::{moment, Lattice, Stencil};
use crate::error::{invalid, Result};
use crate::quadrature::Neumaier;
use crate::special::sphere_area;

/// Closure at the inner end of a radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Closure {
    /// Natural (zero-flux) end, used when the grid reaches toward the origin.
    Natural,
    /// Zero value at the first node.
    Dirichlet,
}

/// Nodes r_0 < … < r_n. The unknowns live at r_0 … r_{n−1}; the last node is a
/// zero Dirichlet ghost. With a Dirichlet inner closure the first node is a
/// ghost too.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    n_dim: usize,
    all_nodes: Vec<f64>,
    inner: Closure,
    first: usize,
    quad_weights: Vec<f64>,
    mass: Vec<f64>,
    stencil: Stencil,
}

impl RadialGrid {
    /// Log-spaced grid on [r_min, r_max] with `n` unknowns and a natural inner end.
    pub fn log_spaced(n_dim: usize, r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || n < 3 {
            return invalid(format!("need 0 < r_min < r_max and n >= 3 (got {r_min}, {r_max}, {n})"));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        let nodes = (0..=n).map(|i| (a + (b - a) * i as f64 / n as f64).exp()).collect();
        Self::from_nodes(n_dim, nodes, Closure::Natural)
    }

    /// Log-spaced grid with r_min = 1e-6·r_max.
    pub fn standard(n_dim: usize, r_max: f64, n: usize) -> Result<Self> {
        Self::log_spaced(n_dim, 1e-6 * r_max, r_max, n)
    }

    /// Uniform grid on [r_lo, r_hi] with zero values at both ends, for shells.
    pub fn uniform_shell(n_dim: usize, r_lo: f64, r_hi: f64, n: usize) -> Result<Self> {
        if !(r_lo > 0.0 && r_hi > r_lo) || n < 3 {
            return invalid(format!("need 0 < r_lo < r_hi and n >= 3 (got {r_lo}, {r_hi}, {n})"));
        }
        let h = (r_hi - r_lo) / (n + 1) as f64;
        let nodes = (0..=n + 1).map(|i| r_lo + h * i as f64).collect();
        Self::from_nodes(n_dim, nodes, Closure::Dirichlet)
    }

    /// Grid on the given strictly increasing positive nodes (ghosts included).
    pub fn from_nodes(n_dim: usize, all_nodes: Vec<f64>, inner: Closure) -> Result<Self> {
        if n_dim < 1 {
            return invalid("dimension must be positive");
        }
        if all_nodes.len() < 3 || !(all_nodes[0] > 0.0) || all_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("radial nodes must be positive and strictly increasing");
        }
        let sig = sphere_area(n_dim);
        let e = n_dim as f64 - 1.0;
        let m = all_nodes.len();
        let mid = |i: usize| 0.5 * (all_nodes[i] + all_nodes[i + 1]);
        let quad_weights: Vec<f64> = (0..m)
            .map(|i| {
                let lo = if i == 0 { all_nodes[0] } else { mid(i - 1) };
                let hi = if i + 1 == m { all_nodes[m - 1] } else { mid(i) };
                sig * moment(lo, hi, e)
            })
            .collect();
        let first = if inner == Closure::Dirichlet { 1 } else { 0 };
        let last = m - 1;
        let n = last - first;
        let mass = quad_weights[first..last].to_vec();
        let mut stencil = Stencil { edges: Vec::with_capacity(n), boundary: vec![0.0; n] };
        for i in first..last {
            let (a, b) = (all_nodes[i], all_nodes[i + 1]);
            let w = sig * moment(a, b, e) / ((b - a) * (b - a));
            if i + 1 == last {
                stencil.boundary[i - first] += w;
            } else {
                stencil.edges.push(((i - first) as u32, (i + 1 - first) as u32, w));
            }
        }
        if first == 1 {
            let (a, b) = (all_nodes[0], all_nodes[1]);
            stencil.boundary[0] += sig * moment(a, b, e) / ((b - a) * (b - a));
        }
        Ok(Self { n_dim, all_nodes, inner, first, quad_weights, mass, stencil })
    }

    /// Radii of the unknowns.
    pub fn nodes(&self) -> &[f64] {
        &self.all_nodes[self.first..self.all_nodes.len() - 1]
    }

    /// All nodes including ghosts.
    pub fn all_nodes(&self) -> &[f64] {
        &self.all_nodes
    }

    pub fn inner(&self) -> Closure {
        self.inner
    }

    pub fn r_min(&self) -> f64 {
        self.all_nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.all_nodes.last().expect("nonempty")
    }

    /// Dual-cell weights σ_N∫r^{N−1} for every node, ghosts included.
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Σ_i w_i g(r_i) over all nodes.
    pub fn integrate_fn(&self, g: impl Fn(f64) -> f64) -> f64 {
        let mut acc = Neumaier::default();
        for (&r, &w) in self.all_nodes.iter().zip(&self.quad_weights) {
            acc.add(w * g(r));
        }
        acc.sum()
    }

    /// Same grid with every radius multiplied by λ.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        Self::from_nodes(self.n_dim, self.all_nodes.iter().map(|r| lambda * r).collect(), self.inner)
    }

    /// Piecewise-linear interpolation of nodal values (zero at ghosts and beyond).
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let nodes = &self.all_nodes;
        let m = nodes.len();
        let val = |i: usize| -> f64 {
            if i < self.first || i + 1 >= m {
                0.0
            } else {
                values[i - self.first]
            }
        };
        if r <= nodes[0] {
            return if self.inner == Closure::Natural && r >= 0.0 { val(0) } else { 0.0 };
        }
        if r >= nodes[m - 1] {
            return 0.0;
        }
        let k = nodes.partition_point(|&x| x <= r) - 1;
        let w = (r - nodes[k]) / (nodes[k + 1] - nodes[k]);
        (1.0 - w) * val(k) + w * val(k + 1)
    }
}

impl Lattice for RadialGrid {
    fn len(&self) -> usize {
        self.mass.len()
    }

    fn dim(&self) -> usize {
        self.n_dim
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn potential_weights(&self, alpha: f64) -> Vec<f64> {
        let sig = sphere_area(self.n_dim);
        let e = self.n_dim as f64 - 1.0 - alpha;
        let nodes = &self.all_nodes;
        let m = nodes.len();
        let mid = |i: usize| 0.5 * (nodes[i] + nodes[i + 1]);
        (self.first..m - 1)
            .map(|i| {
                let lo = if i == 0 { nodes[0] } else { mid(i - 1) };
                sig * moment(lo, mid(i), e)
            })
            .collect()
    }

    fn radius(&self) -> Vec<f64> {
        self.nodes().to_vec()
    }

    fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    fn bandwidth(&self) -> usize {
        1
    }
}
