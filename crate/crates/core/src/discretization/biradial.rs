//! Cell-centered tensor grids in (s, t) = (|y|, |z|) for ℝ^N = ℝ^K × ℝ^{N−K}.

use serde::{Deserialize, Serialize};

use super::{moment, Lattice, Stencil};
use crate::error::{invalid, Result};
use crate::quadrature::{integrate_adaptive, GaussLegendre, Neumaier};
use crate::special::sphere_area;

/// Axis-aligned box [s_lo, s_hi] × [t_lo, t_hi] in the (s, t) quarter plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiradialBox {
    pub s_lo: f64,
    pub s_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl BiradialBox {
    pub fn square(side: f64) -> Self {
        Self { s_lo: 0.0, s_hi: side, t_lo: 0.0, t_hi: side }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s_lo >= 0.0 && self.s_hi > self.s_lo && self.t_lo >= 0.0 && self.t_hi > self.t_lo) {
            return invalid(format!("invalid box {self:?}"));
        }
        if !(self.s_hi.is_finite() && self.t_hi.is_finite()) {
            return invalid("box must be finite");
        }
        Ok(())
    }
}

const POT_GL: usize = 6;

/// Cell-centered grid; unknown (i, j) sits at the center of cell i in s and j in t
/// and is stored at index i·nt + j. Faces on s = 0 or t = 0 are natural; every
/// other face carries a zero Dirichlet value.
#[derive(Debug, Clone)]
pub struct BiradialGrid {
    n_dim: usize,
    k: usize,
    bbox: BiradialBox,
    ns: usize,
    nt: usize,
    hs: f64,
    ht: f64,
    weight_const: f64,
    mass: Vec<f64>,
    stencil: Stencil,
}

impl BiradialGrid {
    pub fn new(n_dim: usize, k: usize, bbox: BiradialBox, ns: usize, nt: usize) -> Result<Self> {
        if k < 1 || k >= n_dim {
            return invalid(format!("need 1 <= K < N (got K = {k}, N = {n_dim})"));
        }
        bbox.validate()?;
        if ns < 2 || nt < 2 {
            return invalid("need at least 2 cells per direction");
        }
        let hs = (bbox.s_hi - bbox.s_lo) / ns as f64;
        let ht = (bbox.t_hi - bbox.t_lo) / nt as f64;
        let weight_const = sphere_area(k) * sphere_area(n_dim - k);
        let (es, et) = ((k - 1) as f64, (n_dim - k - 1) as f64);
        let s_edge = |i: usize| bbox.s_lo + hs * i as f64;
        let t_edge = |j: usize| bbox.t_lo + ht * j as f64;
        let s_ctr = |i: usize| bbox.s_lo + hs * (i as f64 + 0.5);
        let t_ctr = |j: usize| bbox.t_lo + ht * (j as f64 + 0.5);
        let ms: Vec<f64> = (0..ns).map(|i| moment(s_edge(i), s_edge(i + 1), es)).collect();
        let mt: Vec<f64> = (0..nt).map(|j| moment(t_edge(j), t_edge(j + 1), et)).collect();
        let mut mass = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            for j in 0..nt {
                mass.push(weight_const * ms[i] * mt[j]);
            }
        }
        // dual-interval moments between consecutive centers, and half cells at faces
        let ds: Vec<f64> = (0..ns - 1).map(|i| moment(s_ctr(i), s_ctr(i + 1), es) / (hs * hs)).collect();
        let dt: Vec<f64> = (0..nt - 1).map(|j| moment(t_ctr(j), t_ctr(j + 1), et) / (ht * ht)).collect();
        let q = |h: f64| 4.0 / (h * h);
        let s_low_face = if bbox.s_lo > 0.0 { moment(bbox.s_lo, s_ctr(0), es) * q(hs) } else { 0.0 };
        let s_high_face = moment(s_ctr(ns - 1), bbox.s_hi, es) * q(hs);
        let t_low_face = if bbox.t_lo > 0.0 { moment(bbox.t_lo, t_ctr(0), et) * q(ht) } else { 0.0 };
        let t_high_face = moment(t_ctr(nt - 1), bbox.t_hi, et) * q(ht);
        let mut stencil = Stencil { edges: Vec::with_capacity(2 * ns * nt), boundary: vec![0.0; ns * nt] };
        for i in 0..ns {
            for j in 0..nt {
                let p = (i * nt + j) as u32;
                if j + 1 < nt {
                    stencil.edges.push((p, p + 1, weight_const * ms[i] * dt[j]));
                }
                if i + 1 < ns {
                    stencil.edges.push((p, p + nt as u32, weight_const * ds[i] * mt[j]));
                }
                let mut b = 0.0;
                if i == 0 {
                    b += s_low_face * mt[j];
                }
                if i + 1 == ns {
                    b += s_high_face * mt[j];
                }
                if j == 0 {
                    b += t_low_face * ms[i];
                }
                if j + 1 == nt {
                    b += t_high_face * ms[i];
                }
                stencil.boundary[p as usize] = weight_const * b;
            }
        }
        Ok(Self { n_dim, k, bbox, ns, nt, hs, ht, weight_const, mass, stencil })
    }

    /// Square box [0, side]² with n × n cells.
    pub fn square(n_dim: usize, k: usize, side: f64, n: usize) -> Result<Self> {
        Self::new(n_dim, k, BiradialBox::square(side), n, n)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn hs(&self) -> f64 {
        self.hs
    }

    pub fn ht(&self) -> f64 {
        self.ht
    }

    pub fn bbox(&self) -> BiradialBox {
        self.bbox
    }

    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        self.bbox.s_lo + self.hs * (i as f64 + 0.5)
    }

    #[inline]
    pub fn t(&self, j: usize) -> f64 {
        self.bbox.t_lo + self.ht * (j as f64 + 0.5)
    }

    /// σ_K σ_{N−K} s^{K−1} t^{N−K−1}.
    #[inline]
    pub fn weight(&self, s: f64, t: f64) -> f64 {
        self.weight_const * s.powi(self.k as i32 - 1) * t.powi((self.n_dim - self.k) as i32 - 1)
    }

    /// Same layout refined by a factor in each direction.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n_dim, self.k, self.bbox, self.ns * factor, self.nt * factor)
    }

    /// Same layout on another box.
    pub fn with_box(&self, bbox: BiradialBox) -> Result<Self> {
        Self::new(self.n_dim, self.k, bbox, self.ns, self.nt)
    }

    /// ∫ g · weight over the box by q×q Gauss–Legendre per cell.
    pub fn integrate_fn(&self, q: usize, g: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let gl = GaussLegendre::new(q);
        let mut acc = Neumaier::default();
        for i in 0..self.ns {
            let (sx, sw) = gl.mapped(self.bbox.s_lo + self.hs * i as f64, self.bbox.s_lo + self.hs * (i + 1) as f64);
            for j in 0..self.nt {
                let (tx, tw) =
                    gl.mapped(self.bbox.t_lo + self.ht * j as f64, self.bbox.t_lo + self.ht * (j + 1) as f64);
                let mut cell = 0.0;
                for (s, ws) in sx.iter().zip(&sw) {
                    for (t, wt) in tx.iter().zip(&tw) {
                        cell += ws * wt * self.weight(*s, *t) * g(*s, *t);
                    }
                }
                acc.add(cell);
            }
        }
        acc.sum()
    }

    /// Σ over cell centers of g · weight · hs · ht (midpoint rule).
    pub fn integrate_midpoint(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = Neumaier::default();
        for i in 0..self.ns {
            let s = self.s(i);
            for j in 0..self.nt {
                let t = self.t(j);
                acc.add(self.weight(s, t) * g(s, t));
            }
        }
        acc.sum() * self.hs * self.ht
    }

    /// Measure of {s² + t² < R²} ∩ box, with exact inner t-moments and
    /// adaptive quadrature in s on cut cells.
    pub fn disc_measure(&self, radius: f64) -> f64 {
        let (es, et) = ((self.k - 1) as f64, (self.n_dim - self.k - 1) as f64);
        let r2 = radius * radius;
        let mut acc = Neumaier::default();
        for i in 0..self.ns {
            let (sa, sb) = (self.bbox.s_lo + self.hs * i as f64, self.bbox.s_lo + self.hs * (i + 1) as f64);
            for j in 0..self.nt {
                let (ta, tb) = (self.bbox.t_lo + self.ht * j as f64, self.bbox.t_lo + self.ht * (j + 1) as f64);
                if sa * sa + ta * ta >= r2 {
                    continue;
                }
                if sb * sb + tb * tb <= r2 {
                    acc.add(self.mass[i * self.nt + j]);
                    continue;
                }
                let s_end = sb.min(radius);
                let v = integrate_adaptive(
                    |s| {
                        let top = (r2 - s * s).max(0.0).sqrt().clamp(ta, tb);
                        s.powf(es) * moment(ta, top, et)
                    },
                    sa,
                    s_end,
                    1e-12,
                    0.0,
                );
                acc.add(self.weight_const * v);
            }
        }
        acc.sum()
    }

    fn cell_potential(&self, gl: &GaussLegendre, sa: f64, sb: f64, ta: f64, tb: f64, alpha: f64, depth: u32) -> f64 {
        if sa == 0.0 && ta == 0.0 && depth < 40 {
            // refine toward the singular corner
            let (sm, tm) = (0.5 * sb, 0.5 * tb);
            return self.cell_potential(gl, 0.0, sm, 0.0, tm, alpha, depth + 1)
                + self.cell_potential(gl, sm, sb, 0.0, tm, alpha, 41)
                + self.cell_potential(gl, 0.0, sm, tm, tb, alpha, 41)
                + self.cell_potential(gl, sm, sb, tm, tb, alpha, 41);
        }
        let (sx, sw) = gl.mapped(sa, sb);
        let (tx, tw) = gl.mapped(ta, tb);
        let mut cell = 0.0;
        for (s, ws) in sx.iter().zip(&sw) {
            for (t, wt) in tx.iter().zip(&tw) {
                cell += ws * wt * self.weight(*s, *t) * (s * s + t * t).powf(-0.5 * alpha);
            }
        }
        cell
    }
}

impl Lattice for BiradialGrid {
    fn len(&self) -> usize {
        self.ns * self.nt
    }

    fn dim(&self) -> usize {
        self.n_dim
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn potential_weights(&self, alpha: f64) -> Vec<f64> {
        let gl = GaussLegendre::new(POT_GL);
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.ns {
            let (sa, sb) = (self.bbox.s_lo + self.hs * i as f64, self.bbox.s_lo + self.hs * (i + 1) as f64);
            for j in 0..self.nt {
                let (ta, tb) = (self.bbox.t_lo + self.ht * j as f64, self.bbox.t_lo + self.ht * (j + 1) as f64);
                out.push(self.cell_potential(&gl, sa, sb, ta, tb, alpha, 0));
            }
        }
        out
    }

    fn radius(&self) -> Vec<f64> {
        let mut r = Vec::with_capacity(self.len());
        for i in 0..self.ns {
            for j in 0..self.nt {
                r.push(self.s(i).hypot(self.t(j)));
            }
        }
        r
    }

    fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    fn bandwidth(&self) -> usize {
        self.nt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_integrate_exactly() {
        let g = BiradialGrid::new(5, 2, BiradialBox { s_lo: 0.0, s_hi: 2.0, t_lo: 0.5, t_hi: 3.0 }, 7, 9).unwrap();
        let c = sphere_area(2) * sphere_area(3);
        for a in 0..=4 {
            for b in 0..=4 {
                let v = g.integrate_fn(6, |s, t| s.powi(a) * t.powi(b));
                let exact = c * moment(0.0, 2.0, (a + 1) as f64) * moment(0.5, 3.0, (b + 2) as f64);
                assert!((v / exact - 1.0).abs() < 1e-12, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn masses_tile_the_box() {
        let g = BiradialGrid::square(4, 2, 3.0, 16).unwrap();
        let total: f64 = g.mass().iter().sum();
        let exact = sphere_area(2) * sphere_area(2) * 4.5 * 4.5;
        assert!((total / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn quarter_disc_is_the_ball() {
        for &(n, k) in &[(4usize, 2usize), (5, 2), (5, 3), (6, 3)] {
            let g = BiradialGrid::square(n, k, 2.0, 64).unwrap();
            let r: f64 = 1.7;
            let exact = sphere_area(n) * r.powi(n as i32) / n as f64;
            assert!((g.disc_measure(r) / exact - 1.0).abs() < 1e-6, "n={n} k={k}");
        }
    }

    #[test]
    fn axis_faces_are_natural() {
        let g = BiradialGrid::square(4, 2, 1.0, 4).unwrap();
        // cell (0,0) touches both axes but not the outer faces
        assert_eq!(g.stencil().boundary[0], 0.0);
        assert!(g.stencil().boundary[3] > 0.0);
        let shifted = g.with_box(BiradialBox { s_lo: 1.0, s_hi: 2.0, t_lo: 0.0, t_hi: 1.0 }).unwrap();
        assert!(shifted.stencil().boundary[0] > 0.0);
    }

    #[test]
    fn corner_potential_is_finite_and_positive() {
        let g = BiradialGrid::square(4, 2, 1.0, 8).unwrap();
        let p = g.potential_weights(1.0);
        assert!(p.iter().all(|v| v.is_finite() && *v > 0.0));
        let total: f64 = p.iter().sum();
        // ∫_{[0,1]²} weight·ρ^{-1} compared with the adaptive route
        let exact = sphere_area(2).powi(2)
            * integrate_adaptive(
                |s| integrate_adaptive(|t| s * t / (s * s + t * t).sqrt(), 0.0, 1.0, 1e-13, 0.0),
                0.0,
                1.0,
                1e-12,
                0.0,
            );
        assert!((total / exact - 1.0).abs() < 1e-10);
    }
}
