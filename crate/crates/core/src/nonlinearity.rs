//! Double-power nonlinearities f with primitive F, truncated to zero on
//! s ≤ 0, and sampled checks of the structural assumptions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::integrate_adaptive;

/// Safety factor applied to sampled suprema.
pub const SAFETY: f64 = 1.01;
/// Relative tolerance for the quadrature-based primitive.
const F_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// f(s) = min{s^{p1−1}, s^{p2−1}}.
    MinPower,
    /// f(s) = s^{p2−1}/(1 + s^{p2−p1}).
    RationalQuotient,
    /// f = F′ with F(s) = s^{p2}/(1 + s^{p2−p1}).
    RationalDerivative,
    Custom,
}

impl std::str::FromStr for Family {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min-power" => Ok(Family::MinPower),
            "rational-quotient" => Ok(Family::RationalQuotient),
            "rational-derivative" => Ok(Family::RationalDerivative),
            other => invalid(format!("unknown nonlinearity family `{other}`")),
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct CustomFns {
    f: ScalarFn,
    big_f: Option<ScalarFn>,
    df: Option<ScalarFn>,
}

/// A nonlinearity with its primitive and envelope metadata.
#[derive(Clone)]
pub struct NonlinearitySpec {
    pub family: Family,
    pub p1: f64,
    pub p2: f64,
    /// Ambrosetti–Rabinowitz exponent: θF(s) ≤ f(s)s.
    pub theta: f64,
    /// F(s)/s^μ is non-increasing.
    pub mu: f64,
    /// sup f(s)/min{s^{p1−1}, s^{p2−1}} times the safety factor.
    pub m1: f64,
    /// sup F(s)/min{s^{p1}, s^{p2}} times the safety factor.
    pub m2: f64,
    /// Sampled sup of f(s)s/F(s), the smallest admissible μ.
    pub mu_sampled: f64,
    custom: Option<CustomFns>,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("NonlinearitySpec")
            .field("family", &self.family)
            .field("p1", &self.p1)
            .field("p2", &self.p2)
            .field("theta", &self.theta)
            .field("mu", &self.mu)
            .field("m1", &self.m1)
            .field("m2", &self.m2)
            .finish()
    }
}

/// Serializable summary of a spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub family: Family,
    pub p1: f64,
    pub p2: f64,
    pub theta: f64,
    pub mu: f64,
    pub m1: f64,
    pub m2: f64,
    pub mu_sampled: f64,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n as f64 - 1.0)).exp())
}

fn check_powers(p1: f64, p2: f64) -> Result<()> {
    if !(p1 > 2.0) {
        return invalid(format!("p1 = {p1} must exceed 2"));
    }
    if !(p2 > p1 && p2.is_finite()) {
        return invalid(format!("p2 = {p2} must exceed p1 = {p1}"));
    }
    Ok(())
}

impl NonlinearitySpec {
    /// One of the three built-in families with θ = p1 and μ = p2 + 1 (raised
    /// for the rational quotient when the sampled f(s)s/F(s) demands it).
    pub fn builtin(family: Family, p1: f64, p2: f64) -> Result<Self> {
        check_powers(p1, p2)?;
        if family == Family::Custom {
            return invalid("use NonlinearitySpec::custom for custom nonlinearities");
        }
        let mut spec = Self {
            family,
            p1,
            p2,
            theta: p1,
            mu: p2 + 1.0,
            m1: 1.0,
            m2: 1.0,
            mu_sampled: 0.0,
            custom: None,
        };
        spec.fill_envelopes();
        if family == Family::RationalQuotient {
            spec.mu = spec.mu.max(SAFETY * spec.mu_sampled);
        }
        Ok(spec)
    }

    pub fn min_power(p1: f64, p2: f64) -> Result<Self> {
        Self::builtin(Family::MinPower, p1, p2)
    }

    /// User-supplied f (for s > 0) with optional primitive and derivative.
    pub fn custom(p1: f64, p2: f64, theta: f64, mu: f64, f: ScalarFn, big_f: Option<ScalarFn>, df: Option<ScalarFn>) -> Result<Self> {
        if !(p1 > 2.0 && p2 >= p1) {
            return invalid(format!("need 2 < p1 <= p2, got {p1}, {p2}"));
        }
        let mut spec = Self {
            family: Family::Custom,
            p1,
            p2,
            theta,
            mu,
            m1: 1.0,
            m2: 1.0,
            mu_sampled: 0.0,
            custom: Some(CustomFns { f, big_f, df }),
        };
        spec.fill_envelopes();
        Ok(spec)
    }

    /// Test helper: pure power f(s) = s^{p−1}, F(s) = s^p/p.
    pub fn pure_power(p: f64) -> Result<Self> {
        Self::custom(
            p,
            p,
            p,
            p,
            Arc::new(move |s| s.powf(p - 1.0)),
            Some(Arc::new(move |s| s.powf(p) / p)),
            Some(Arc::new(move |s| (p - 1.0) * s.powf(p - 2.0))),
        )
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn summary(&self) -> SpecSummary {
        SpecSummary {
            family: self.family,
            p1: self.p1,
            p2: self.p2,
            theta: self.theta,
            mu: self.mu,
            m1: self.m1,
            m2: self.m2,
            mu_sampled: self.mu_sampled,
        }
    }

    fn fill_envelopes(&mut self) {
        let (mut s1, mut s2, mut smu) = (0.0f64, 0.0f64, 0.0f64);
        for s in log_grid(1e-6, 1e6, 4001) {
            let (f, big_f) = (self.f(s), self.big_f(s));
            s1 = s1.max(f / s.powf(self.p1 - 1.0).min(s.powf(self.p2 - 1.0)));
            s2 = s2.max(big_f / s.powf(self.p1).min(s.powf(self.p2)));
            if big_f > 0.0 {
                smu = smu.max(f * s / big_f);
            }
        }
        self.m1 = SAFETY * s1;
        self.m2 = SAFETY * s2;
        self.mu_sampled = smu;
    }

    /// f(s), zero for s ≤ 0.
    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (p1, p2) = (self.p1, self.p2);
        match self.family {
            Family::MinPower => {
                if s <= 1.0 {
                    s.powf(p2 - 1.0)
                } else {
                    s.powf(p1 - 1.0)
                }
            }
            Family::RationalQuotient => rq_f(s, p1, p2),
            Family::RationalDerivative => {
                let q = p2 - p1;
                if s <= 1.0 {
                    let sq = s.powf(q);
                    s.powf(p2 - 1.0) * (p2 + p1 * sq) / ((1.0 + sq) * (1.0 + sq))
                } else {
                    let r = s.powf(-q);
                    s.powf(p1 - 1.0) * (p2 * r + p1) / ((1.0 + r) * (1.0 + r))
                }
            }
            Family::Custom => (self.custom.as_ref().expect("custom fns").f)(s),
        }
    }

    /// F(s) = ∫₀^s f, zero for s ≤ 0.
    #[inline]
    pub fn big_f(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (p1, p2) = (self.p1, self.p2);
        match self.family {
            Family::MinPower => {
                if s <= 1.0 {
                    s.powf(p2) / p2
                } else {
                    1.0 / p2 + (s.powf(p1) - 1.0) / p1
                }
            }
            Family::RationalQuotient => rq_primitive(s, p1, p2),
            Family::RationalDerivative => {
                let q = p2 - p1;
                if s <= 1.0 {
                    s.powf(p2) / (1.0 + s.powf(q))
                } else {
                    s.powf(p1) / (1.0 + s.powf(-q))
                }
            }
            Family::Custom => {
                let c = self.custom.as_ref().expect("custom fns");
                match &c.big_f {
                    Some(g) => g(s),
                    None => {
                        let f = &c.f;
                        integrate_adaptive(|t| f(t), 0.0, s, F_REL_TOL, 0.0)
                    }
                }
            }
        }
    }

    /// f′(s), zero for s < 0. One-sided (left) at the kink of MinPower.
    #[inline]
    pub fn df(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (p1, p2) = (self.p1, self.p2);
        match self.family {
            Family::MinPower => {
                if s <= 1.0 {
                    (p2 - 1.0) * s.powf(p2 - 2.0)
                } else {
                    (p1 - 1.0) * s.powf(p1 - 2.0)
                }
            }
            Family::RationalQuotient => {
                let q = p2 - p1;
                let a = p2 - 1.0;
                let sq = s.powf(q);
                let d = 1.0 + sq;
                (a * (1.0 + sq) - q * sq) * s.powf(a - 1.0) / (d * d)
            }
            Family::RationalDerivative => {
                let q = p2 - p1;
                let sq = s.powf(q);
                let d = 1.0 + sq;
                let num = p2 + p1 * sq;
                ((p2 - 1.0) * num / s + p1 * q * sq / s - 2.0 * q * num * sq / (s * d)) * s.powf(p2 - 1.0) / (d * d)
            }
            Family::Custom => {
                let c = self.custom.as_ref().expect("custom fns");
                match &c.df {
                    Some(g) => g(s),
                    None => {
                        let h = 1e-5 * s.max(1e-8);
                        (self.f(s + h) - self.f((s - h).max(0.0))) / (s + h - (s - h).max(0.0))
                    }
                }
            }
        }
    }
}

fn rq_f(s: f64, p1: f64, p2: f64) -> f64 {
    let q = p2 - p1;
    if s <= 1.0 {
        s.powf(p2 - 1.0) / (1.0 + s.powf(q))
    } else {
        s.powf(p1 - 1.0) / (1.0 + s.powf(-q))
    }
}

fn rq_primitive(s: f64, p1: f64, p2: f64) -> f64 {
    let q = p2 - p1;
    // On (0, 1] write t = s·u so the integrand is smooth in u.
    let head = |x: f64| {
        let xq = x.powf(q);
        x.powf(p2) * integrate_adaptive(|u| u.powf(p2 - 1.0) / (1.0 + xq * u.powf(q)), 0.0, 1.0, F_REL_TOL, 0.0)
    };
    if s <= 1.0 {
        return head(s);
    }
    // On [1, s] use t = e^x.
    let tail = integrate_adaptive(
        |x| {
            let t = x.exp();
            t * rq_f(t, p1, p2)
        },
        0.0,
        s.ln(),
        F_REL_TOL,
        0.0,
    );
    head(1.0) + tail
}

/// One assumption's worst sampled margin; failures carry the violating s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub worst_s: f64,
    pub violating_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub spec: SpecSummary,
    pub sample_count: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Threshold on the end-decade log-slope of an envelope ratio.
const GROWTH_THRESHOLD: f64 = 0.05;
const MAX_LISTED: usize = 16;

fn fold_check(name: &str, samples: &[f64], margins: &[f64], pass_if: impl Fn(f64) -> bool) -> AssumptionCheck {
    let mut worst = f64::INFINITY;
    let mut worst_s = f64::NAN;
    let mut violating = Vec::new();
    for (&s, &m) in samples.iter().zip(margins) {
        if m < worst || worst_s.is_nan() {
            worst = m;
            worst_s = s;
        }
        if !pass_if(m) && violating.len() < MAX_LISTED {
            violating.push(s);
        }
    }
    AssumptionCheck { name: name.into(), pass: violating.is_empty(), worst_margin: worst, worst_s, violating_s: violating }
}

/// Growth check of ratio(s) toward both ends of the sample grid. Returns the
/// margin `threshold − growth` and the s where the ratio peaks at the failing end.
fn envelope_check(name: &str, samples: &[f64], ratio: &[f64]) -> AssumptionCheck {
    let n = samples.len();
    let decade = |i: usize, j: usize| (ratio[j].ln() - ratio[i].ln()) / (samples[j].ln() - samples[i].ln());
    let width = samples.iter().take_while(|&&s| s < samples[0] * 10.0).count().clamp(1, n - 1);
    let left_growth = -decade(0, width);
    let right_growth = decade(n - 1 - width, n - 1);
    let finite = ratio.iter().all(|r| r.is_finite());
    let (growth, s_at) = if left_growth >= right_growth { (left_growth, samples[0]) } else { (right_growth, samples[n - 1]) };
    let margin = if finite { GROWTH_THRESHOLD - growth } else { f64::NEG_INFINITY };
    let pass = margin >= 0.0;
    let violating = if pass {
        Vec::new()
    } else {
        // list the samples of the failing end where the ratio exceeds its value one decade inward
        let (range, reference): (Vec<usize>, f64) = if s_at == samples[0] {
            ((0..width).collect(), ratio[width])
        } else {
            ((n - 1 - width..n).rev().collect(), ratio[n - 1 - width])
        };
        range.into_iter().filter(|&i| ratio[i] > reference).take(MAX_LISTED).map(|i| samples[i]).collect()
    };
    AssumptionCheck { name: name.into(), pass, worst_margin: margin, worst_s: s_at, violating_s: violating }
}

/// Sampled falsifier for (f_{p1,p2}) and (f1)–(f4) on a log grid in [1e-6, 1e6].
pub fn check_assumptions(spec: &NonlinearitySpec, sample_count: usize) -> Result<AssumptionReport> {
    if sample_count < 1000 {
        return invalid(format!("sample_count = {sample_count} must be >= 1000"));
    }
    let s: Vec<f64> = log_grid(1e-6, 1e6, sample_count).collect();
    let f: Vec<f64> = s.iter().map(|&x| spec.f(x)).collect();
    let big_f: Vec<f64> = s.iter().map(|&x| spec.big_f(x)).collect();
    let (p1, p2) = (spec.p1, spec.p2);

    let rf: Vec<f64> = s.iter().zip(&f).map(|(&x, &v)| v / x.powf(p1 - 1.0).min(x.powf(p2 - 1.0))).collect();
    let rbf: Vec<f64> = s.iter().zip(&big_f).map(|(&x, &v)| v / x.powf(p1).min(x.powf(p2))).collect();
    let c_f = envelope_check("f_p1p2", &s, &rf);
    let c_bf = envelope_check("f_p1p2", &s, &rbf);
    let mut env = if c_f.worst_margin <= c_bf.worst_margin { c_f } else { c_bf };
    env.pass = env.pass && rf.iter().chain(&rbf).all(|r| r.is_finite());

    let m1: Vec<f64> = (0..s.len())
        .map(|i| {
            let fs = f[i] * s[i];
            if fs > 0.0 {
                (fs - spec.theta * big_f[i]) / fs
            } else {
                -1.0
            }
        })
        .collect();
    let f1 = fold_check("f1", &s, &m1, |m| m >= -1e-10);

    let m2: Vec<f64> = rbf.clone();
    let f2 = fold_check("f2", &s, &m2, |m| m > 0.0);

    let q: Vec<f64> = s.iter().zip(&f).map(|(&x, &v)| v / x).collect();
    let m3: Vec<f64> = (0..s.len() - 1).map(|i| (q[i + 1] - q[i]) / q[i + 1].abs().max(f64::MIN_POSITIVE)).collect();
    let f3 = fold_check("f3", &s[..s.len() - 1], &m3, |m| m > 0.0);

    let r: Vec<f64> = s.iter().zip(&big_f).map(|(&x, &v)| (v.ln() - spec.mu * x.ln()).exp()).collect();
    let m4: Vec<f64> = (0..s.len() - 1).map(|i| (r[i] - r[i + 1]) / r[i].abs().max(f64::MIN_POSITIVE)).collect();
    let f4 = fold_check("f4", &s[..s.len() - 1], &m4, |m| m >= -1e-12);

    Ok(AssumptionReport { spec: spec.summary(), sample_count, checks: vec![env, f1, f2, f3, f4] })
}
