//! Critical exponents, existence regions, the multiplicity count ν and the
//! scaling exponents of the radial and biradial energy levels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative band used for comparisons on region boundaries.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Arithmetic identity of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub alpha: f64,
    pub a: f64,
    pub k: Option<usize>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
}

impl ProblemParams {
    pub fn new(n: usize, alpha: f64, a: f64) -> Result<Self> {
        let p = Self { n, alpha, a, k: None, p1: None, p2: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_k(mut self, k: usize) -> Result<Self> {
        self.k = Some(k);
        self.validate()?;
        Ok(self)
    }

    pub fn with_powers(mut self, p1: f64, p2: f64) -> Result<Self> {
        self.p1 = Some(p1);
        self.p2 = Some(p2);
        self.validate()?;
        Ok(self)
    }

    pub fn with_a(mut self, a: f64) -> Result<Self> {
        self.a = a;
        self.validate()?;
        Ok(self)
    }

    pub fn two_star(&self) -> f64 {
        two_star(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return invalid(format!("N = {} must be >= 3", self.n));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return invalid(format!("alpha = {} must be positive", self.alpha));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return invalid(format!("A = {} must be positive", self.a));
        }
        match (self.p1, self.p2) {
            (Some(p1), Some(p2)) => {
                let ts = self.two_star();
                if !(2.0 < p1 && p1 < ts && ts < p2 && p2.is_finite()) {
                    return invalid(format!("need 2 < p1 < 2* = {ts} < p2, got p1 = {p1}, p2 = {p2}"));
                }
            }
            (None, None) => {}
            _ => return invalid("p1 and p2 must be given together"),
        }
        if let Some(k) = self.k {
            if k < 2 || k + 2 > self.n {
                return invalid(format!("K = {k} must satisfy 2 <= K <= N-2 = {}", self.n as i64 - 2));
            }
        }
        Ok(())
    }
}

/// 2* = 2N/(N−2).
pub fn two_star(n: usize) -> f64 {
    2.0 * n as f64 / (n as f64 - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentTable {
    pub two_star: f64,
    /// 2*_α, defined for α < 2N−2.
    pub two_star_alpha: Option<f64>,
    /// 2_α, defined for α < N.
    pub two_alpha: Option<f64>,
    /// Threshold for p1, defined for α < 2.
    pub p1_star: Option<f64>,
    /// Threshold for p2, defined for 2 < α < 2N−2.
    pub p2_star: Option<f64>,
}

pub fn critical_exponents(n: usize, alpha: f64) -> Result<ExponentTable> {
    if n < 3 {
        return invalid(format!("N = {n} must be >= 3"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("alpha = {alpha} must be positive"));
    }
    let nf = n as f64;
    let two_star_alpha = (alpha < 2.0 * nf - 2.0).then(|| 2.0 * (2.0 * nf - 2.0 + alpha) / (2.0 * nf - 2.0 - alpha));
    let two_alpha = (alpha < nf).then(|| 2.0 * nf / (nf - alpha));
    let p1_star = (alpha < 2.0).then(|| {
        let a2 = alpha * alpha * (nf - 1.0);
        2.0 * (a2 - 2.0 * alpha * (nf - 1.0) + 4.0 * nf) / (a2 - 2.0 * alpha * (nf + 1.0) + 4.0 * nf)
    });
    let p2_star =
        (alpha > 2.0 && alpha < 2.0 * nf - 2.0).then(|| 2.0 * (2.0 * nf + 2.0 - alpha) / (2.0 * nf - 2.0 - alpha));
    Ok(ExponentTable { two_star: two_star(n), two_star_alpha, two_alpha, p1_star, p2_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionStatus {
    ExistsRadial,
    NoSolution,
    NoRadialSolution,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub status: RegionStatus,
    pub rule: String,
}

/// Three-way comparison with a relative tolerance band: -1, 0 (equal), +1.
fn cmp_band(x: f64, y: f64) -> i8 {
    if (x - y).abs() <= BOUNDARY_BAND * x.abs().max(y.abs()) {
        0
    } else if x < y {
        -1
    } else {
        1
    }
}

fn verdict(status: RegionStatus, rule: &str) -> RegionVerdict {
    RegionVerdict { status, rule: rule.to_string() }
}

pub fn classify_region(n: usize, alpha: f64, p: f64) -> Result<RegionVerdict> {
    if !(p > 2.0) {
        return invalid(format!("p = {p} must exceed 2"));
    }
    let t = critical_exponents(n, alpha)?;
    let nf = n as f64;
    let ts = t.two_star;
    use RegionStatus::*;
    if cmp_band(alpha, 2.0) == 0 {
        return Ok(if cmp_band(p, ts) == 0 {
            verdict(ExistsRadial, "alpha = 2, p = 2*")
        } else {
            verdict(NoSolution, "alpha = 2, p != 2*")
        });
    }
    if alpha < 2.0 {
        let tsa = t.two_star_alpha.expect("defined for alpha < 2");
        let ta = t.two_alpha.expect("defined for alpha < 2 <= N");
        if cmp_band(p, ta) <= 0 {
            return Ok(verdict(NoSolution, "0 < alpha < 2, p <= 2_alpha"));
        }
        if cmp_band(p, ts) >= 0 {
            return Ok(verdict(NoSolution, "0 < alpha < 2, p >= 2*"));
        }
        if cmp_band(p, tsa) <= 0 {
            return Ok(verdict(NoRadialSolution, "0 < alpha < 2, 2_alpha < p <= 2*_alpha"));
        }
        return Ok(verdict(ExistsRadial, "0 < alpha < 2, 2*_alpha < p < 2*"));
    }
    if cmp_band(p, ts) <= 0 {
        return Ok(verdict(NoSolution, "alpha > 2, p <= 2*"));
    }
    if cmp_band(alpha, 2.0 * nf - 2.0) >= 0 {
        return Ok(verdict(ExistsRadial, "alpha >= 2N-2, p > 2*"));
    }
    let tsa = t.two_star_alpha.expect("defined for alpha < 2N-2");
    if cmp_band(p, tsa) < 0 {
        return Ok(verdict(ExistsRadial, "2 < alpha < 2N-2, 2* < p < 2*_alpha"));
    }
    if cmp_band(alpha, nf) < 0 {
        let ta = t.two_alpha.expect("defined for alpha < N");
        if cmp_band(p, ta) < 0 {
            return Ok(verdict(NoRadialSolution, "2 < alpha < N, 2*_alpha <= p < 2_alpha"));
        }
        return Ok(verdict(NoSolution, "2 < alpha < N, p >= 2_alpha"));
    }
    Ok(verdict(Open, ""))
}

/// Ceiling that snaps values within a relative 1e-12 of an integer onto it.
pub fn snapped_ceil(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= BOUNDARY_BAND * x.abs().max(1.0) {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// Min-formula exponent of the radial level lower bound.
pub fn m_exponent(n: usize, alpha: f64, p1: f64, p2: f64) -> f64 {
    let nf = n as f64;
    let ts = two_star(n);
    let first = (nf - 1.0) / alpha;
    let second = if alpha < 2.0 {
        (nf - 2.0) / (2.0 - alpha) * (ts - p1) / (p1 - 2.0)
    } else {
        (nf - 2.0) / (alpha - 2.0) * (p2 - ts) / (p2 - 2.0)
    };
    first.min(second)
}

/// Exponent of the upper bound on the biradial mountain-pass level.
pub fn c_exponent(n: usize, alpha: f64, k: usize) -> f64 {
    let base = (k as f64 - 1.0) / 2.0;
    if alpha < 2.0 {
        base + n as f64 * (1.0 / alpha - 0.5)
    } else {
        base
    }
}

fn check_theorem_range(n: usize, alpha: f64, p1: f64, p2: f64) -> Result<ExponentTable> {
    if n < 4 {
        return invalid(format!("N = {n} must be >= 4"));
    }
    let nf = n as f64;
    if !(alpha > 2.0 / (nf - 1.0) && alpha < 2.0 * nf - 2.0) || cmp_band(alpha, 2.0) == 0 {
        return invalid(format!("alpha = {alpha} must lie in (2/(N-1), 2N-2) minus {{2}}"));
    }
    let ts = two_star(n);
    if !(2.0 < p1 && p1 < ts && ts < p2) {
        return invalid(format!("need 2 < p1 < 2* = {ts} < p2"));
    }
    let t = critical_exponents(n, alpha)?;
    if alpha < 2.0 {
        let p1s = t.p1_star.expect("alpha < 2");
        if !(p1 < p1s) {
            return invalid(format!("condition p1 < p1* = {p1s} fails for p1 = {p1}"));
        }
    } else {
        let p2s = t.p2_star.expect("2 < alpha < 2N-2");
        if !(p2 > p2s) {
            return invalid(format!("condition p2 > p2* = {p2s} fails for p2 = {p2}"));
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    /// ν as given by the ceiling formula, before clamping K to [2, N−2].
    pub nu: i64,
    /// Admissible splittings {2, …, ν+1} ∩ [2, N−2].
    pub k_list: Vec<usize>,
    /// True when ν+1 > N−2 so that the list was clamped.
    pub clamped: bool,
}

pub fn nu_and_admissible_k(n: usize, alpha: f64, p1: f64, p2: f64) -> Result<Multiplicity> {
    check_theorem_range(n, alpha, p1, p2)?;
    let nf = n as f64;
    let m = m_exponent(n, alpha, p1, p2);
    let x = if alpha < 2.0 { 2.0 * m - 2.0 * nf * (1.0 / alpha - 0.5) } else { 2.0 * m };
    let nu = snapped_ceil(x) - 1;
    let top = (nu + 1).min(n as i64 - 2);
    let k_list: Vec<usize> = (2..=top).map(|k| k as usize).collect();
    Ok(Multiplicity { nu, k_list, clamped: nu + 1 > n as i64 - 2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelExponents {
    pub m_exp: f64,
    pub c_exp: f64,
    pub gap: f64,
}

pub fn level_exponents(n: usize, alpha: f64, p1: f64, p2: f64, k: usize) -> Result<LevelExponents> {
    if cmp_band(alpha, 2.0) == 0 {
        return invalid("level exponents are undefined at alpha = 2");
    }
    if k < 2 || k + 2 > n {
        return invalid(format!("K = {k} must satisfy 2 <= K <= N-2"));
    }
    let m_exp = m_exponent(n, alpha, p1, p2);
    let c_exp = c_exponent(n, alpha, k);
    Ok(LevelExponents { m_exp, c_exp, gap: m_exp - c_exp })
}

/// The exponent p used by the radial lower bound: max{2*_α, p1} for α < 2,
/// min{2*_α, p2} for α > 2.
pub fn p_used(n: usize, alpha: f64, p1: f64, p2: f64) -> Result<f64> {
    let t = critical_exponents(n, alpha)?;
    let tsa = t.two_star_alpha.ok_or_else(|| crate::Error::InvalidParameter("alpha >= 2N-2".into()))?;
    Ok(if alpha < 2.0 { tsa.max(p1) } else { tsa.min(p2) })
}

/// The exponent (N−2)/(α−2)·(p−2*)/(p−2) evaluated at a given p.
pub fn m_exponent_at(n: usize, alpha: f64, p: f64) -> f64 {
    let nf = n as f64;
    (nf - 2.0) / (alpha - 2.0) * (p - two_star(n)) / (p - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn exponent_examples() {
        let t = critical_exponents(4, 2.0).unwrap();
        assert!(close(t.two_star, 4.0) && close(t.two_star_alpha.unwrap(), 4.0) && close(t.two_alpha.unwrap(), 4.0));
        let t = critical_exponents(4, 1.0).unwrap();
        assert!(close(t.two_star_alpha.unwrap(), 2.8));
        assert!(close(t.two_alpha.unwrap(), 8.0 / 3.0));
        assert!(close(t.p1_star.unwrap(), 26.0 / 9.0));
        assert!(t.p2_star.is_none());
        let t = critical_exponents(5, 3.0).unwrap();
        assert!(close(t.two_star, 10.0 / 3.0));
        assert!(close(t.two_star_alpha.unwrap(), 4.4));
        assert!(close(t.two_alpha.unwrap(), 5.0));
        assert!(close(t.p2_star.unwrap(), 3.6));
        assert!(t.p1_star.is_none());
    }

    #[test]
    fn undefined_fields_are_none() {
        let t = critical_exponents(4, 7.0).unwrap();
        assert!(t.two_alpha.is_none() && t.two_star_alpha.is_none() && t.p2_star.is_none());
        assert!(critical_exponents(2, 1.0).is_err());
        assert!(critical_exponents(4, 0.0).is_err());
    }

    #[test]
    fn region_examples() {
        use RegionStatus::*;
        let s = |n, a, p| classify_region(n, a, p).unwrap().status;
        assert_eq!(s(4, 2.0, 4.0), ExistsRadial);
        assert_eq!(s(4, 1.0, 2.7), NoRadialSolution);
        assert_eq!(s(4, 1.0, 2.5), NoSolution);
        assert_eq!(s(4, 5.0, 3.5), NoSolution);
        assert_eq!(s(4, 3.0, 7.0), NoRadialSolution);
        assert_eq!(s(4, 3.0, 5.0), ExistsRadial);
        assert_eq!(s(4, 3.0, 8.0), NoSolution);
        assert_eq!(s(4, 5.0, 20.0), ExistsRadial);
        assert_eq!(s(4, 5.0, 30.0), Open);
        assert_eq!(s(4, 7.0, 5.0), ExistsRadial);
        assert_eq!(s(4, 1.0, 2.8), NoRadialSolution);
        assert_eq!(s(4, 1.0, 4.0), NoSolution);
        assert!(classify_region(4, 1.0, 2.0).is_err());
    }

    #[test]
    fn nu_examples() {
        let m = nu_and_admissible_k(4, 1.0, 2.5, 5.0).unwrap();
        assert_eq!((m.nu, m.k_list.clone()), (1, vec![2]));
        let m = nu_and_admissible_k(6, 1.0, 2.2, 4.0).unwrap();
        assert_eq!((m.nu, m.k_list.clone()), (3, vec![2, 3, 4]));
        let m = nu_and_admissible_k(5, 3.0, 3.0, 6.0).unwrap();
        assert_eq!((m.nu, m.k_list.clone()), (2, vec![2, 3]));
    }

    #[test]
    fn nu_rejects_failed_threshold() {
        let e = nu_and_admissible_k(4, 1.0, 2.95, 5.0).unwrap_err();
        assert!(format!("{e}").contains("p1*"));
        let e = nu_and_admissible_k(5, 3.0, 3.0, 3.5).unwrap_err();
        assert!(format!("{e}").contains("p2*"));
    }

    #[test]
    fn level_exponent_examples() {
        let l = level_exponents(5, 3.0, 3.0, 6.0, 2).unwrap();
        assert!(close(l.m_exp, 4.0 / 3.0) && close(l.c_exp, 0.5) && close(l.gap, 5.0 / 6.0));
        let l = level_exponents(6, 1.0, 2.2, 4.0, 4).unwrap();
        assert!(close(l.m_exp, 5.0) && close(l.c_exp, 4.5) && close(l.gap, 0.5));
        let l2 = level_exponents(6, 1.0, 2.2, 4.0, 2).unwrap();
        assert!(close(l2.gap, 1.5));
        assert!(level_exponents(5, 2.0, 3.0, 6.0, 2).is_err());
    }

    #[test]
    fn closed_form_matches_chain_exponent() {
        for &(n, a, p1, p2) in &[(4usize, 1.0, 2.5, 5.0), (6, 1.0, 2.2, 4.0), (5, 3.0, 3.0, 6.0), (7, 0.7, 2.3, 5.0)] {
            let p = p_used(n, a, p1, p2).unwrap();
            assert!((m_exponent_at(n, a, p) - m_exponent(n, a, p1, p2)).abs() < 1e-12);
        }
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    /// (N, α, p1, p2) satisfying the theorem's hypotheses, from unit draws.
    fn admissible() -> impl Strategy<Value = (usize, f64, f64, f64)> {
        (4usize..=9, any::<bool>(), 0.001f64..0.999, 0.001f64..0.999, 0.001f64..0.999).prop_map(|(n, low, x, y, z)| {
            let nf = n as f64;
            let ts = two_star(n);
            if low {
                let lo = 2.0 / (nf - 1.0);
                let al = lo + (2.0 - lo) * x;
                let top = critical_exponents(n, al).unwrap().p1_star.unwrap().min(ts);
                (n, al, 2.0 + (top - 2.0) * y, ts + 10.0 * z)
            } else {
                let al = 2.0 + (2.0 * nf - 4.0) * x;
                let lo = critical_exponents(n, al).unwrap().p2_star.unwrap().max(ts);
                (n, al, 2.0 + (ts - 2.0) * y, lo + 10.0 * z)
            }
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn nu_is_at_least_one((n, al, p1, p2) in admissible()) {
            let m = nu_and_admissible_k(n, al, p1, p2).unwrap();
            prop_assert!(m.nu >= 1);
            for &k in &m.k_list {
                prop_assert!(level_exponents(n, al, p1, p2, k).unwrap().gap > 0.0);
            }
        }

        #[test]
        fn min_formula_matches_at_p_used((n, al, p1, p2) in admissible()) {
            let p = p_used(n, al, p1, p2).unwrap();
            let m = m_exponent(n, al, p1, p2);
            // (α−2)^{-1} amplifies rounding in p − 2* near α = 2.
            let tol = 1e-12 * m.abs().max(1.0) * (1.0 + 1.0 / (al - 2.0).abs());
            prop_assert!((m_exponent_at(n, al, p) - m).abs() <= tol);
        }

        #[test]
        fn classification_is_total(n in 3usize..=9, al in 0.01f64..20.0, p in 2.001f64..20.0) {
            let v = classify_region(n, al, p).unwrap();
            prop_assert!(v.status == RegionStatus::Open || !v.rule.is_empty());
        }

        #[test]
        fn exponents_coincide_at_two(n in 3usize..=12) {
            let t = critical_exponents(n, 2.0).unwrap();
            prop_assert!((t.two_star_alpha.unwrap() - t.two_star).abs() <= 1e-12 * t.two_star);
            prop_assert!((t.two_alpha.unwrap() - t.two_star).abs() <= 1e-12 * t.two_star);
        }
    }
}
