//! Mountain-pass solver on biradial profiles: Nehari-manifold descent with
//! A-metric preconditioning, Newton polishing, box fitting, verification of
//! computed critical points and the separation check against the radial floor.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{
    distinctness, norm_parts_with, radialize, BiradialBox, BiradialGrid, BiradialProfile, Functional, Lattice,
    Profile, RadialGrid, RadialProfile,
};
use crate::error::{invalid, Error, Result};
use crate::minres::minres;
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::{dot, Neumaier};
use crate::radial_solver::{default_trial_family, estimate_ma, maximize_ray, LowerBoundCert, TrialProfile, T_BRACKET_MAX};
use crate::testfunction::{path_upper_bound, ratio_and_a0, unit_bump, BumpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Descent {
    Lbfgs,
    Steepest,
}

impl std::str::FromStr for Descent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(Descent::Lbfgs),
            "steepest" => Ok(Descent::Steepest),
            other => invalid(format!("unknown descent method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpaOptions {
    /// Dual residual tolerance relative to ‖u‖_A.
    pub tol: f64,
    pub max_iter: usize,
    /// Nodes of the reported path, at least 33.
    pub path_nodes: usize,
    pub descent: Descent,
    /// L-BFGS memory.
    pub memory: usize,
    /// Relative residual targeted by the Newton polish; 0 disables it.
    pub polish_tol: f64,
    pub polish_steps: usize,
}

impl Default for MpaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            path_nodes: 33,
            descent: Descent::Lbfgs,
            memory: 10,
            polish_tol: 1e-11,
            polish_steps: 20,
        }
    }
}

impl MpaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return invalid(format!("tol = {} must be positive", self.tol));
        }
        if self.path_nodes < 33 {
            return invalid(format!("path needs at least 33 nodes (got {})", self.path_nodes));
        }
        if self.max_iter == 0 || self.memory == 0 {
            return invalid("max_iter and memory must be positive");
        }
        Ok(())
    }
}

/// t > 0 with I(tv) maximal on the ray, by safeguarded Newton on d/dt I(tv).
pub fn nehari_scale<G: Lattice>(fun: &Functional<G>, v: &[f64]) -> Result<f64> {
    let q = fun.norm_sq(v);
    if !(q > 0.0) || !v.iter().any(|&x| x > 0.0) {
        return Err(Error::Degenerate("ray has no positive part".into()));
    }
    let (m, spec) = (fun.mass(), &fun.spec);
    let phi = |t: f64| -> (f64, f64) {
        let (mut a, mut b) = (Neumaier::default(), Neumaier::default());
        for (mi, &x) in m.iter().zip(v) {
            if x > 0.0 {
                a.add(mi * spec.f(t * x) * x);
                b.add(mi * spec.df(t * x) * x * x);
            }
        }
        (t * q - a.sum(), q - b.sum())
    };
    let (mut lo, mut hi);
    if phi(1.0).0 > 0.0 {
        lo = 1.0;
        hi = 2.0;
        while phi(hi).0 > 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > T_BRACKET_MAX {
                return Err(Error::BracketFailure(hi));
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        while phi(lo).0 <= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::BracketFailure(lo));
            }
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p, dp) = phi(t);
        if p > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if p.abs() <= 1e-15 * t * q || hi - lo <= 1e-15 * hi {
            return Ok(t);
        }
        let tn = t - p / dp;
        t = if dp < 0.0 && tn > lo && tn < hi { tn } else { 0.5 * (lo + hi) };
    }
    Ok(t)
}

/// Outcome of the descent on one grid.
#[derive(Debug, Clone)]
pub struct DescentRun {
    pub u: Vec<f64>,
    pub level: f64,
    pub residual: f64,
    pub rel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// max_t I(t u_k) after every accepted step.
    pub history: Vec<f64>,
    pub polish_steps: usize,
}

fn residual<G: Lattice>(fun: &Functional<G>, u: &[f64], g: &[f64]) -> (f64, f64) {
    let res = fun.dual_norm(g);
    (res, res / fun.norm_sq(u).sqrt())
}

/// Projects v onto the Nehari set and returns (t v, I(t v)).
fn project<G: Lattice>(fun: &Functional<G>, v: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let t = nehari_scale(fun, &v)?;
    let w: Vec<f64> = v.into_iter().map(|x| t * x).collect();
    let j = fun.energy(&w)?;
    Ok((w, j))
}

/// Minimizes J(w) = max_t I(tw) from `start`: every iterate sits at its ray
/// maximum, so J is the maximum of I over the path 0 → T·u → T·e → e.
pub fn nehari_descent<G: Lattice>(fun: &Functional<G>, start: &[f64], opts: &MpaOptions) -> Result<DescentRun> {
    opts.validate()?;
    let (mut u, mut j) = project(fun, start.to_vec())?;
    let mut g = fun.gradient(&u);
    let mut history = vec![j];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut tau_prev = 1.0f64;
    let mut it = 0;
    let mut converged = false;
    loop {
        let r = fun.riesz(&g);
        let res = dot(&g, &r).max(0.0).sqrt();
        if res / fun.norm_sq(&u).sqrt() < opts.tol {
            converged = true;
            break;
        }
        if it >= opts.max_iter {
            break;
        }
        let mut d = match opts.descent {
            Descent::Steepest => r.iter().map(|x| -x).collect(),
            Descent::Lbfgs => lbfgs_direction(fun, &g, &mem),
        };
        let mut gd = dot(&g, &d);
        if !(gd < 0.0) {
            d = r.iter().map(|x| -x).collect();
            gd = -res * res;
            mem.clear();
        }
        let mut tau = if opts.descent == Descent::Lbfgs && !mem.is_empty() { 1.0 } else { (2.0 * tau_prev).min(1.0) };
        let mut accepted = None;
        while tau > 1e-14 {
            let v: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + tau * b).collect();
            if let Ok((w, jn)) = project(fun, v) {
                if jn <= j + 1e-4 * tau * gd {
                    accepted = Some((w, jn));
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some((w, jn)) = accepted else { break };
        tau_prev = tau;
        let gn = fun.gradient(&w);
        let s: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 * fun.norm_sq(&s) {
            let hy = fun.riesz(&y);
            mem.push_back((s, y, hy, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        u = w;
        g = gn;
        j = jn;
        history.push(j);
        it += 1;
    }
    let mut polish_steps = 0;
    if converged && opts.polish_tol > 0.0 {
        polish_steps = newton_polish(fun, &mut u, opts.polish_tol, opts.polish_steps)?;
        g = fun.gradient(&u);
        j = fun.energy(&u)?;
    }
    let (res, rel) = residual(fun, &u, &g);
    Ok(DescentRun { u, level: j, residual: res, rel_residual: rel, iterations: it, converged, history, polish_steps })
}

fn lbfgs_direction<G: Lattice>(
    fun: &Functional<G>,
    g: &[f64],
    mem: &VecDeque<(Vec<f64>, Vec<f64>, Vec<f64>, f64)>,
) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, _, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut r = fun.riesz(&q);
    if let Some((s, y, hy, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, hy);
        for ri in r.iter_mut() {
            *ri *= gamma;
        }
    }
    for ((s, y, _, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter().map(|x| -x).collect()
}

/// Newton steps H δ = −I′(u) solved by MINRES preconditioned with the A-metric
/// operator; a step is kept only if it lowers the dual residual.
pub fn newton_polish<G: Lattice>(fun: &Functional<G>, u: &mut Vec<f64>, tol: f64, max_steps: usize) -> Result<usize> {
    let mut g = fun.gradient(u);
    let (mut res, mut rel) = residual(fun, u, &g);
    let mut steps = 0;
    while steps < max_steps && rel > tol {
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let cur = u.clone();
        let (delta, _) = minres(|v| fun.hess_vec(&cur, v), |r| fun.riesz(r), &rhs, 1e-10, 1000);
        let mut lam = 1.0;
        let mut improved = false;
        while lam > 1e-3 {
            let v: Vec<f64> = u.iter().zip(&delta).map(|(a, b)| a + lam * b).collect();
            let gv = fun.gradient(&v);
            let (rv, relv) = residual(fun, &v, &gv);
            if rv.is_finite() && rv < res {
                *u = v;
                g = gv;
                res = rv;
                rel = relv;
                improved = true;
                break;
            }
            lam *= 0.5;
        }
        if !improved {
            break;
        }
        steps += 1;
    }
    Ok(steps)
}

/// Discrete path from 0 to the endpoint through the ray of the solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MountainPassPath {
    pub nodes: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    /// Scale T of the far part of the path.
    pub far_scale: f64,
}

impl MountainPassPath {
    pub fn max_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        self.energies.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0)
    }
}

/// Path 0 → u → T·u → T·e → e with `count` nodes, where T is doubled until the
/// far part has negative energy.
pub fn mountain_pass_path<G: Lattice>(fun: &Functional<G>, u: &[f64], endpoint: &[f64], count: usize) -> Result<MountainPassPath> {
    if count < 33 {
        return invalid("path needs at least 33 nodes");
    }
    if !(fun.energy(endpoint)? < 0.0) {
        return Err(Error::Degenerate("path endpoint must have negative energy".into()));
    }
    let q = (count - 9) / 3;
    let (n_up, n_seg) = (q, q);
    let n_down = count - 9 - 2 * q;
    let scaled = |v: &[f64], c: f64| -> Vec<f64> { v.iter().map(|x| c * x).collect() };
    let mix = |s: f64, c: f64| -> Vec<f64> { u.iter().zip(endpoint).map(|(a, b)| c * ((1.0 - s) * a + s * b)).collect() };
    let mut big = 2.0;
    loop {
        let far_ok = (0..=n_seg + 1).all(|i| {
            let s = i as f64 / (n_seg + 1) as f64;
            fun.energy(&mix(s, big)).map(|e| e < 0.0).unwrap_or(false)
        });
        if far_ok {
            break;
        }
        big *= 2.0;
        if big > 1e15 {
            return Err(Error::Degenerate("could not place the far part of the path below zero".into()));
        }
    }
    let mut nodes = Vec::with_capacity(count);
    for i in 0..=8 {
        nodes.push(scaled(u, i as f64 / 8.0));
    }
    for i in 1..=n_up {
        nodes.push(scaled(u, big.powf(i as f64 / n_up as f64)));
    }
    for i in 1..=n_seg {
        nodes.push(mix(i as f64 / (n_seg + 1) as f64, big));
    }
    for i in 0..n_down {
        let e = if n_down > 1 { 1.0 - i as f64 / (n_down - 1) as f64 } else { 0.0 };
        nodes.push(scaled(endpoint, big.powf(e)));
    }
    let energies = nodes.iter().map(|v| fun.energy(v)).collect::<Result<Vec<_>>>()?;
    Ok(MountainPassPath { nodes, energies, far_scale: big })
}

/// Which axis of the (s, t) quarter plane a trial blob sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    S,
    T,
}

/// exp(−|(s, t) − c|²/w²) with c = (L, 0) or (0, L).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub axis: Axis,
    pub center: f64,
    pub width: f64,
}

/// Half extent of a blob's box in widths.
pub const BLOB_BOX_WIDTHS: f64 = 12.0;

impl Blob {
    pub fn value(&self, s: f64, t: f64) -> f64 {
        let (cs, ct) = match self.axis {
            Axis::S => (self.center, 0.0),
            Axis::T => (0.0, self.center),
        };
        let d2 = (s - cs) * (s - cs) + (t - ct) * (t - ct);
        (-d2 / (self.width * self.width)).exp()
    }

    pub fn bbox(&self) -> BiradialBox {
        let h = BLOB_BOX_WIDTHS * self.width;
        let (lo, hi) = ((self.center - h).max(0.0), self.center + h);
        match self.axis {
            Axis::S => BiradialBox { s_lo: lo, s_hi: hi, t_lo: 0.0, t_hi: h },
            Axis::T => BiradialBox { s_lo: 0.0, s_hi: h, t_lo: lo, t_hi: hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub blob: Blob,
    /// max_t I(t·blob) on the scan grid.
    pub ray_max: f64,
}

/// Ray maxima of Gaussian blobs on both axes, centers L log-spaced over
/// A^{1/α}·[1/4, 16] and widths over (A L^{−α})^{−1/2}·[1/4, 16]; sorted.
pub fn trial_scan(spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64, a: f64, cells: usize) -> Result<Vec<ScanEntry>> {
    let base = a.powf(1.0 / alpha);
    let mut blobs = Vec::new();
    for axis in [Axis::S, Axis::T] {
        for i in -4..=8 {
            let center = base * 2f64.powf(i as f64 / 2.0);
            let local = (a * center.powf(-alpha)).powf(-0.5);
            for j in -4..=8 {
                blobs.push(Blob { axis, center, width: local * 2f64.powf(j as f64 / 2.0) });
            }
        }
    }
    let mut out: Vec<ScanEntry> = blobs
        .par_iter()
        .filter_map(|b| {
            let grid = BiradialGrid::new(n, k, b.bbox(), cells, cells).ok()?;
            let pot: Vec<f64> = grid.potential_weights(alpha).into_iter().map(|p| a * p).collect();
            let u: Vec<f64> = (0..grid.ns()).flat_map(|i| (0..grid.nt()).map(move |j| (i, j))).map(|(i, j)| b.value(grid.s(i), grid.t(j))).collect();
            let q = norm_parts_with(&grid, &pot, &u).norm_sq;
            let m = grid.mass();
            let en = |t: f64| {
                let mut acc = Neumaier::default();
                for (mi, x) in m.iter().zip(&u) {
                    acc.add(mi * spec.big_f(t * x));
                }
                0.5 * t * t * q - acc.sum()
            };
            let sl = |t: f64| {
                let mut acc = Neumaier::default();
                for (mi, x) in m.iter().zip(&u) {
                    acc.add(mi * spec.f(t * x) * x);
                }
                t * q - acc.sum()
            };
            let (_, v) = maximize_ray(en, sl).ok()?;
            v.is_finite().then_some(ScanEntry { blob: *b, ray_max: v })
        })
        .collect();
    if out.is_empty() {
        return Err(Error::Degenerate("trial scan produced no admissible blob".into()));
    }
    out.sort_by(|x, y| x.ray_max.total_cmp(&y.ray_max));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub a: f64,
    pub ns: usize,
    pub nt: usize,
    pub opts: MpaOptions,
    /// Number of distinct starting blobs.
    pub multistart: usize,
    /// Maximum number of box enlargements.
    pub box_rounds: usize,
    /// Largest admissible max|u| on Dirichlet faces relative to max|u|.
    pub edge_tol: f64,
    pub scan_cells: usize,
}

impl SolverConfig {
    pub fn new(n: usize, k: usize, alpha: f64, a: f64, cells: usize) -> Self {
        Self {
            n,
            k,
            alpha,
            a,
            ns: cells,
            nt: cells,
            opts: MpaOptions::default(),
            multistart: 3,
            box_rounds: 3,
            edge_tol: 1e-4,
            scan_cells: 48,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k + 2 > self.n {
            return invalid(format!("K = {} must satisfy 2 <= K <= N-2", self.k));
        }
        if self.ns < 8 || self.nt < 8 || self.scan_cells < 8 {
            return invalid("grids need at least 8 cells per direction");
        }
        if self.multistart == 0 {
            return invalid("multistart must be at least 1");
        }
        if !(self.a > 0.0 && self.alpha > 0.0) {
            return invalid("A and alpha must be positive");
        }
        self.opts.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub u_k: BiradialProfile,
    pub level: f64,
    /// Dual residual relative to ‖u_K‖_A.
    pub residual: f64,
    pub residual_abs: f64,
    pub nonradiality: f64,
    pub k: usize,
    pub a: f64,
    pub alpha: f64,
    pub converged: bool,
    pub iterations: usize,
    pub polish_steps: usize,
    pub edge_ratio: f64,
    pub box_rounds: usize,
    pub start: Option<Blob>,
    pub endpoint: Vec<f64>,
    pub path: MountainPassPath,
    pub history: Vec<f64>,
    /// True when the path maximum is not positive.
    pub degenerate: bool,
}

/// Serializable metadata of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub alpha: f64,
    pub level: f64,
    pub residual: f64,
    pub residual_abs: f64,
    pub nonradiality: f64,
    pub converged: bool,
    pub iterations: usize,
    pub polish_steps: usize,
    pub edge_ratio: f64,
    pub box_rounds: usize,
    pub bbox: BiradialBox,
    pub ns: usize,
    pub nt: usize,
    pub start: Option<Blob>,
    pub path_energies: Vec<f64>,
    pub degenerate: bool,
}

impl SolutionRecord {
    pub fn meta(&self) -> SolutionMeta {
        let g = &self.u_k.grid;
        SolutionMeta {
            n: g.dim(),
            k: self.k,
            a: self.a,
            alpha: self.alpha,
            level: self.level,
            residual: self.residual,
            residual_abs: self.residual_abs,
            nonradiality: self.nonradiality,
            converged: self.converged,
            iterations: self.iterations,
            polish_steps: self.polish_steps,
            edge_ratio: self.edge_ratio,
            box_rounds: self.box_rounds,
            bbox: g.bbox(),
            ns: g.ns(),
            nt: g.nt(),
            start: self.start,
            path_energies: self.path.energies.clone(),
            degenerate: self.degenerate,
        }
    }

    /// Monotone descent of the path maximum up to a relative slack.
    pub fn history_is_monotone(&self, slack: f64) -> bool {
        self.history.windows(2).all(|w| w[1] <= w[0] + slack * w[0].abs())
    }
}

/// max|u| in the cells next to Dirichlet faces divided by max|u|.
pub fn edge_ratio(u: &BiradialProfile) -> f64 {
    let g = &*u.grid;
    let b = g.bbox();
    let top = u.max_abs();
    if top == 0.0 {
        return 0.0;
    }
    let mut e = 0.0f64;
    for i in 0..g.ns() {
        for j in 0..g.nt() {
            let on = i + 1 == g.ns() || j + 1 == g.nt() || (i == 0 && b.s_lo > 0.0) || (j == 0 && b.t_lo > 0.0);
            if on {
                e = e.max(u.at(i, j).abs());
            }
        }
    }
    e / top
}

fn face_ratios(u: &BiradialProfile) -> [f64; 4] {
    let g = &*u.grid;
    let top = u.max_abs().max(f64::MIN_POSITIVE);
    let (ns, nt) = (g.ns(), g.nt());
    let col = |i: usize| (0..nt).map(|j| u.at(i, j).abs()).fold(0.0, f64::max) / top;
    let row = |j: usize| (0..ns).map(|i| u.at(i, j).abs()).fold(0.0, f64::max) / top;
    [col(0), col(ns - 1), row(0), row(nt - 1)]
}

fn expanded(u: &BiradialProfile, tol: f64) -> BiradialBox {
    let b = u.grid.bbox();
    let [s_lo, s_hi, t_lo, t_hi] = face_ratios(u);
    let (ws, wt) = (b.s_hi - b.s_lo, b.t_hi - b.t_lo);
    let mut nb = b;
    if b.s_lo > 0.0 && s_lo > tol {
        nb.s_lo = (b.s_lo - 0.5 * ws).max(0.0);
    }
    if s_hi > tol {
        nb.s_hi = b.s_hi + 0.5 * ws;
    }
    if b.t_lo > 0.0 && t_lo > tol {
        nb.t_lo = (b.t_lo - 0.5 * wt).max(0.0);
    }
    if t_hi > tol {
        nb.t_hi = b.t_hi + 0.5 * wt;
    }
    nb
}

/// Endpoint T·w with I(T·w) < 0 on the functional's grid.
pub fn negative_endpoint<G: Lattice>(fun: &Functional<G>, w: &[f64]) -> Result<Vec<f64>> {
    let mut t = 2.0 * nehari_scale(fun, w)?;
    for _ in 0..60 {
        let e: Vec<f64> = w.iter().map(|x| t * x).collect();
        if fun.energy(&e)? < 0.0 {
            return Ok(e);
        }
        t *= 2.0;
    }
    Err(Error::Degenerate("no negative-energy endpoint along the ray".into()))
}

/// Descent plus polish on a fixed biradial grid, with the path assembled at the end.
pub fn mpa_solve_on_grid(
    fun: &Functional<BiradialGrid>,
    start: &[f64],
    endpoint: &[f64],
    opts: &MpaOptions,
) -> Result<SolutionRecord> {
    let run = nehari_descent(fun, start, opts)?;
    let u_k = BiradialProfile::new(fun.grid.clone(), run.u.clone());
    let nonradiality = radialize(&u_k, fun.a, fun.alpha)?.nonradiality;
    let path = mountain_pass_path(fun, &run.u, endpoint, opts.path_nodes)?;
    let degenerate = !(path.max_energy() > 0.0);
    Ok(SolutionRecord {
        edge_ratio: edge_ratio(&u_k),
        u_k,
        level: run.level,
        residual: run.rel_residual,
        residual_abs: run.residual,
        nonradiality,
        k: fun.grid.k(),
        a: fun.a,
        alpha: fun.alpha,
        converged: run.converged && !degenerate,
        iterations: run.iterations,
        polish_steps: run.polish_steps,
        box_rounds: 0,
        start: None,
        endpoint: endpoint.to_vec(),
        path,
        history: run.history,
        degenerate,
    })
}

fn solve_from_blob(spec: &NonlinearitySpec, cfg: &SolverConfig, blob: Blob) -> Result<SolutionRecord> {
    let mut bbox = blob.bbox();
    let mut prev: Option<BiradialProfile> = None;
    let mut iterations = 0;
    let mut round = 0;
    loop {
        let grid = Arc::new(BiradialGrid::new(cfg.n, cfg.k, bbox, cfg.ns, cfg.nt)?);
        let fun = Functional::new(grid.clone(), spec, cfg.a, cfg.alpha)?;
        let w0 = BiradialProfile::from_fn(grid.clone(), |s, t| blob.value(s, t));
        let endpoint = negative_endpoint(&fun, &w0.values)?;
        let start = match &prev {
            Some(p) => BiradialProfile::from_fn(grid.clone(), |s, t| p.interpolate(s, t)).values,
            None => w0.values.clone(),
        };
        let mut rec = mpa_solve_on_grid(&fun, &start, &endpoint, &cfg.opts)?;
        iterations += rec.iterations;
        rec.iterations = iterations;
        rec.start = Some(blob);
        rec.box_rounds = round;
        if rec.edge_ratio <= cfg.edge_tol || round >= cfg.box_rounds {
            return Ok(rec);
        }
        bbox = expanded(&rec.u_k, cfg.edge_tol);
        prev = Some(rec.u_k);
        round += 1;
    }
}

/// Result of a multistart solve.
#[derive(Debug, Clone)]
pub struct MpaReport {
    pub best: SolutionRecord,
    /// Level of every start (None when that run failed or did not converge).
    pub levels: Vec<Option<f64>>,
    /// (max − min)/min over converged starts.
    pub spread: f64,
    pub spread_flag: bool,
}

/// Full pipeline: trial scan, box fitting, descent from the best distinct blobs,
/// minimum level kept.
pub fn mpa_solve(spec: &NonlinearitySpec, cfg: &SolverConfig) -> Result<MpaReport> {
    cfg.validate()?;
    let scan = trial_scan(spec, cfg.n, cfg.k, cfg.alpha, cfg.a, cfg.scan_cells)?;
    let mut starts: Vec<Blob> = Vec::new();
    for e in &scan {
        let distinct = starts.iter().all(|b| b.axis != e.blob.axis || (b.center / e.blob.center - 1.0).abs() > 1e-9);
        if distinct {
            starts.push(e.blob);
        }
        if starts.len() == cfg.multistart {
            break;
        }
    }
    let runs: Vec<Result<SolutionRecord>> = starts.par_iter().map(|b| solve_from_blob(spec, cfg, *b)).collect();
    let levels: Vec<Option<f64>> =
        runs.iter().map(|r| r.as_ref().ok().filter(|r| r.converged).map(|r| r.level)).collect();
    let ok: Vec<f64> = levels.iter().flatten().copied().collect();
    let spread = if ok.len() > 1 {
        let lo = ok.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / lo
    } else {
        0.0
    };
    let mut best: Option<SolutionRecord> = None;
    let mut first_err = None;
    for r in runs {
        match r {
            Ok(rec) => {
                let better = match &best {
                    None => true,
                    Some(b) => (rec.converged && !b.converged) || (rec.converged == b.converged && rec.level < b.level),
                };
                if better {
                    best = Some(rec);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(first_err.unwrap_or(Error::Degenerate("no start produced a solution".into()))),
    };
    Ok(MpaReport { best, levels, spread, spread_flag: spread > 0.05 })
}

/// Re-solves on the same box with `factor`× the cells per direction.
pub fn refine_solution(rec: &SolutionRecord, spec: &NonlinearitySpec, factor: usize, opts: &MpaOptions) -> Result<SolutionRecord> {
    let grid = Arc::new(rec.u_k.grid.refined(factor)?);
    let fun = Functional::new(grid.clone(), spec, rec.a, rec.alpha)?;
    let old = Profile::new(rec.u_k.grid.clone(), rec.endpoint.clone());
    let endpoint = BiradialProfile::from_fn(grid.clone(), |s, t| old.interpolate(s, t)).values;
    let endpoint = if fun.energy(&endpoint)? < 0.0 { endpoint } else { negative_endpoint(&fun, &endpoint)? };
    let start = BiradialProfile::from_fn(grid, |s, t| rec.u_k.interpolate(s, t)).values;
    let mut out = mpa_solve_on_grid(&fun, &start, &endpoint, opts)?;
    out.start = rec.start;
    out.box_rounds = rec.box_rounds;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n_tests: usize,
    /// max |⟨I′(u), v⟩| / (‖u‖_A‖v‖_A) over the random tests.
    pub weak_form: f64,
    /// |⟨I′(u), u⟩| / ‖u‖²_A.
    pub nehari: f64,
    /// ‖u⁻‖_A / ‖u‖_A.
    pub negative_part: f64,
    /// min u / max u.
    pub min_ratio: f64,
    /// |I(u) recomputed − level| / |level|.
    pub energy_mismatch: f64,
    pub tol: f64,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random smooth test function: tensor bump on a random sub-rectangle of the box.
fn random_test_function(grid: &BiradialGrid, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = grid.bbox();
    let pick = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let w = (hi - lo) * rng.random_range(0.1..0.8);
        let a = lo + (hi - lo - w) * rng.random_range(0.0..1.0);
        (a, a + w)
    };
    let (sa, sb) = pick(rng, b.s_lo, b.s_hi);
    let (ta, tb) = pick(rng, b.t_lo, b.t_hi);
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut v = Vec::with_capacity(grid.len());
    for i in 0..grid.ns() {
        for j in 0..grid.nt() {
            v.push(sign * unit_bump((grid.s(i) - sa) / (sb - sa)) * unit_bump((grid.t(j) - ta) / (tb - ta)));
        }
    }
    v
}

/// Weak-form test with random test functions, Nehari identity, negative part
/// and energy recomputation on a freshly assembled functional.
pub fn verify_solution(rec: &SolutionRecord, spec: &NonlinearitySpec, n_tests: usize, seed: u64, tol: f64) -> Result<VerificationReport> {
    let fun = Functional::new(rec.u_k.grid.clone(), spec, rec.a, rec.alpha)?;
    let u = &rec.u_k.values;
    let g = fun.gradient(u);
    let nu = fun.norm_sq(u).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weak = 0.0f64;
    let mut tested = 0;
    while tested < n_tests {
        let v = random_test_function(&fun.grid, &mut rng);
        let nv = fun.norm_sq(&v).sqrt();
        if nv == 0.0 {
            continue;
        }
        weak = weak.max(dot(&g, &v).abs() / (nu * nv));
        tested += 1;
    }
    let nehari = dot(&g, u).abs() / (nu * nu);
    let neg: Vec<f64> = u.iter().map(|x| (-x).max(0.0)).collect();
    let negative_part = fun.norm_sq(&neg).sqrt() / nu;
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bottom = u.iter().copied().fold(f64::INFINITY, f64::min);
    let energy = fun.energy(u)?;
    let energy_mismatch = (energy - rec.level).abs() / rec.level.abs();
    let mut failures = Vec::new();
    if !(weak <= tol) {
        failures.push(format!("weak-form residual {weak:e} exceeds {tol:e}"));
    }
    if !(nehari <= tol) {
        failures.push(format!("Nehari residual {nehari:e} exceeds {tol:e}"));
    }
    if !(negative_part <= 1e-8) {
        failures.push(format!("negative part {negative_part:e} exceeds 1e-8"));
    }
    if !(energy_mismatch <= 1e-10) {
        failures.push(format!("energy recomputation differs by {energy_mismatch:e}"));
    }
    Ok(VerificationReport {
        n_tests,
        weak_form: weak,
        nehari,
        negative_part,
        min_ratio: bottom / top,
        energy_mismatch,
        tol,
        failures,
    })
}

/// Smallest I(u) over random profiles rescaled to ‖u‖_A = radius.
pub fn sphere_sample_min(fun: &Functional<BiradialGrid>, radius: f64, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..count {
        let v: Vec<f64> = random_test_function(&fun.grid, &mut rng).into_iter().map(f64::abs).collect();
        let nv = fun.norm_sq(&v).sqrt();
        if nv == 0.0 {
            continue;
        }
        let w: Vec<f64> = v.iter().map(|x| radius / nv * x).collect();
        best = best.min(fun.energy(&w)?);
    }
    Ok(best)
}

/// Radial mountain-pass solution.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub u: RadialProfile,
    pub level: f64,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
    pub start: TrialProfile,
}

/// The same Nehari descent restricted to radial profiles, started from the best
/// member of the default trial family.
pub fn mpa_solve_radial(spec: &NonlinearitySpec, n: usize, alpha: f64, a: f64, nodes: usize, opts: &MpaOptions) -> Result<RadialSolution> {
    let est = estimate_ma(&default_trial_family(a, alpha), n, spec, a, alpha, nodes)?;
    let grid = match est.argmin {
        TrialProfile::Gaussian { width } => RadialGrid::log_spaced(n, 1e-6 * width, 16.0 * width, nodes)?,
        TrialProfile::Shell { center, half_width } => {
            let hi = center + 4.0 * half_width;
            let lo = center - 4.0 * half_width;
            if lo > 0.05 * center {
                RadialGrid::uniform_shell(n, lo, hi, nodes)?
            } else {
                RadialGrid::log_spaced(n, 1e-6 * hi, hi, nodes)?
            }
        }
    };
    let grid = Arc::new(grid);
    let member = est.argmin.realize(n, nodes)?;
    let start = RadialProfile::from_fn(grid.clone(), |r| member.grid.interpolate(&member.values, r));
    let fun = Functional::new(grid, spec, a, alpha)?;
    let run = nehari_descent(&fun, &start.values, opts)?;
    Ok(RadialSolution {
        u: RadialProfile::new(fun.grid.clone(), run.u),
        level: run.level,
        residual: run.rel_residual,
        converged: run.converged,
        iterations: run.iterations,
        start: est.argmin,
    })
}

/// A* where the explicit curves c_bound(A) and m_lower(A) cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub k: usize,
    pub a0: f64,
    pub a_star: f64,
    /// True when c_bound < m_lower already at the first admissible A.
    pub at_threshold: bool,
}

pub fn crossover(bump: &BumpSpec, spec: &NonlinearitySpec, n: usize, k: usize, alpha: f64) -> Result<Crossover> {
    let cert = LowerBoundCert::new(n, alpha, spec)?;
    let grid: Vec<f64> = (1..=160).map(|i| 10f64.powf(0.25 * i as f64)).collect();
    let a0 = ratio_and_a0(bump, spec, n, k, alpha, &grid)?.a0;
    let gap = |a: f64| -> Result<f64> { Ok(path_upper_bound(bump, spec, n, k, alpha, a)?.bound.ln() - cert.m_lower(a).ln()) };
    let mut lo = a0 * 1.0001;
    if gap(lo)? < 0.0 {
        return Ok(Crossover { k, a0, a_star: lo, at_threshold: true });
    }
    let mut hi = lo;
    loop {
        hi *= 10f64.sqrt();
        if hi > 1e60 {
            return Err(Error::NoThreshold);
        }
        if gap(hi)? < 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if gap(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-10 {
            break;
        }
    }
    Ok(Crossover { k, a0, a_star: hi, at_threshold: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    pub a: f64,
    pub k: usize,
    pub c_estimate: Option<f64>,
    pub converged: bool,
    pub residual: Option<f64>,
    pub c_bound: f64,
    pub straight_max: f64,
    pub m_lower: f64,
    pub m_upper: f64,
    pub nonradiality: Option<f64>,
    pub spread_flag: bool,
    pub separated: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub crossovers: Vec<Crossover>,
    pub rows: Vec<SeparationRow>,
    /// Converged solutions keyed by (A, K).
    pub solutions: Vec<(f64, usize, SolutionRecord)>,
}

/// For every (A, K): MPA level, explicit upper bound, certified radial floor,
/// trial radial estimate and the verdict c_estimate < m_lower.
pub fn separation_check(
    spec: &NonlinearitySpec,
    base: &SolverConfig,
    k_list: &[usize],
    a_list: &[f64],
    radial_nodes: usize,
) -> Result<SeparationReport> {
    if a_list.is_empty() || a_list.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("A list must be nonempty and strictly increasing");
    }
    let (n, alpha) = (base.n, base.alpha);
    let bump = BumpSpec::default();
    let cert = LowerBoundCert::new(n, alpha, spec)?;
    let crossovers = k_list.iter().map(|&k| crossover(&bump, spec, n, k, alpha)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, usize)> = a_list.iter().flat_map(|&a| k_list.iter().map(move |&k| (a, k))).collect();
    let results: Vec<(SeparationRow, Option<SolutionRecord>)> = jobs
        .par_iter()
        .map(|&(a, k)| {
            let pb = path_upper_bound(&bump, spec, n, k, alpha, a);
            let (c_bound, straight_max) = pb.as_ref().map(|p| (p.bound, p.straight_max)).unwrap_or((f64::NAN, f64::NAN));
            let m_lower = cert.m_lower(a);
            let m_upper = estimate_ma(&default_trial_family(a, alpha), n, spec, a, alpha, radial_nodes)
                .map(|e| e.m_upper)
                .unwrap_or(f64::NAN);
            let cfg = SolverConfig { k, a, ..*base };
            let mut row = SeparationRow {
                a,
                k,
                c_estimate: None,
                converged: false,
                residual: None,
                c_bound,
                straight_max,
                m_lower,
                m_upper,
                nonradiality: None,
                spread_flag: false,
                separated: false,
                error: pb.err().map(|e| e.to_string()),
            };
            match mpa_solve(spec, &cfg) {
                Ok(rep) => {
                    let b = rep.best;
                    row.converged = b.converged;
                    row.residual = Some(b.residual);
                    row.spread_flag = rep.spread_flag;
                    if b.converged {
                        row.c_estimate = Some(b.level);
                        row.nonradiality = Some(b.nonradiality);
                        row.separated = b.level < m_lower;
                        (row, Some(b))
                    } else {
                        (row, None)
                    }
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut solutions = Vec::new();
    for (row, sol) in results {
        if let Some(s) = sol {
            solutions.push((row.a, row.k, s));
        }
        rows.push(row);
    }
    Ok(SeparationReport { crossovers, rows, solutions })
}

/// ‖u₁ − Π u₂‖_A/‖u₁‖_A between solutions for different K at the same A.
pub fn solution_distinctness(u1: &SolutionRecord, u2: &SolutionRecord) -> Result<f64> {
    if (u1.a - u2.a).abs() > 1e-12 * u1.a || (u1.alpha - u2.alpha).abs() > 0.0 {
        return invalid("solutions must share A and alpha");
    }
    distinctness(&u1.u_k, &u2.u_k, u1.a, u1.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> NonlinearitySpec {
        NonlinearitySpec::min_power(2.5, 5.0).unwrap()
    }

    fn small_fun() -> Functional<BiradialGrid> {
        let g = Arc::new(BiradialGrid::square(4, 2, 8.0, 24).unwrap());
        Functional::new(g, &spec(), 1.0, 1.0).unwrap()
    }

    fn blob(fun: &Functional<BiradialGrid>) -> Vec<f64> {
        BiradialProfile::from_fn(fun.grid.clone(), |s, t| (-(s - 3.0).powi(2) - t * t).exp()).values
    }

    #[test]
    fn nehari_scale_is_a_ray_critical_point() {
        let fun = small_fun();
        let u = blob(&fun);
        let t = nehari_scale(&fun, &u).unwrap();
        let q = fun.norm_sq(&u);
        assert!(fun.ray_slope(&u, q, t).abs() < 1e-10 * t * q);
        assert!(nehari_scale(&fun, &vec![0.0; u.len()]).is_err());
    }

    #[test]
    fn descent_converges_and_is_monotone() {
        let fun = small_fun();
        let u = blob(&fun);
        let run = nehari_descent(&fun, &u, &MpaOptions::default()).unwrap();
        assert!(run.converged);
        assert!(run.rel_residual < 1e-10);
        assert!(run.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        assert!(run.level > 0.0);
    }

    #[test]
    fn steepest_and_lbfgs_agree() {
        let fun = small_fun();
        let u = blob(&fun);
        let a = nehari_descent(&fun, &u, &MpaOptions::default()).unwrap();
        let b = nehari_descent(&fun, &u, &MpaOptions { descent: Descent::Steepest, ..MpaOptions::default() }).unwrap();
        assert!((a.level / b.level - 1.0).abs() < 1e-8);
    }

    #[test]
    fn path_has_fixed_endpoints_and_peak_at_solution() {
        let fun = small_fun();
        let u = blob(&fun);
        let run = nehari_descent(&fun, &u, &MpaOptions::default()).unwrap();
        let e = negative_endpoint(&fun, &u).unwrap();
        let p = mountain_pass_path(&fun, &run.u, &e, 33).unwrap();
        assert_eq!(p.nodes.len(), 33);
        assert_eq!(p.energies[0], 0.0);
        assert!(p.energies[32] < 0.0);
        assert_eq!(p.nodes[32], e);
        assert!((p.max_energy() - run.level).abs() <= 1e-12 * run.level);
    }

    #[test]
    fn verification_passes_on_polished_solution() {
        let fun = small_fun();
        let u = blob(&fun);
        let e = negative_endpoint(&fun, &u).unwrap();
        let rec = mpa_solve_on_grid(&fun, &u, &e, &MpaOptions::default()).unwrap();
        let rep = verify_solution(&rec, &spec(), 20, 7, 1e-6).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        assert!(rep.nehari < 1e-9);
    }

    #[test]
    fn options_are_validated() {
        assert!(MpaOptions { path_nodes: 10, ..MpaOptions::default() }.validate().is_err());
        assert!(MpaOptions { tol: 0.0, ..MpaOptions::default() }.validate().is_err());
        assert!("lbfgs".parse::<Descent>().is_ok() && "x".parse::<Descent>().is_err());
    }

    #[test]
    fn blob_boxes_touch_the_axis() {
        let b = Blob { axis: Axis::T, center: 100.0, width: 2.0 };
        let bb = b.bbox();
        assert_eq!(bb.s_lo, 0.0);
        assert!((bb.t_lo - 76.0).abs() < 1e-12 && (bb.t_hi - 124.0).abs() < 1e-12);
    }
}
