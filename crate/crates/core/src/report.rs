//! Log-log regression, finite-difference gradient checks and sweep tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discretization::{Functional, Lattice};
use crate::error::{invalid, Result};
use crate::quadrature::dot;

/// Least-squares slope of ln y against ln x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub points: usize,
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return invalid("x and y lengths differ");
    }
    if xs.len() < 4 {
        return invalid(format!("slope fit needs at least 4 points (got {})", xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return invalid("slope fit needs positive finite data");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("x values must not all coincide");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, stderr, points: xs.len() })
}

/// Errors of the centered difference (I(u+hv) − I(u−hv))/(2h) against ⟨I′(u), v⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted log-log slope of error against step.
    pub order: f64,
}

/// Steps h₀·2^{−i}, i < count; the error is relative to |⟨I′(u), v⟩|.
pub fn gradient_check<G: Lattice>(fun: &Functional<G>, u: &[f64], v: &[f64], h0: f64, count: usize) -> Result<GradientCheck> {
    let exact = dot(&fun.gradient(u), v);
    let scale = exact.abs().max(f64::MIN_POSITIVE);
    let mut steps = Vec::with_capacity(count);
    let mut errors = Vec::with_capacity(count);
    for i in 0..count {
        let h = h0 * 0.5f64.powi(i as i32);
        let plus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - h * b).collect();
        let fd = (fun.energy(&plus)? - fun.energy(&minus)?) / (2.0 * h);
        steps.push(h);
        errors.push((fd - exact).abs() / scale);
    }
    let order = fit_slope(&steps, &errors)?.slope;
    Ok(GradientCheck { steps, errors, order })
}

/// Named numeric columns with a CSV rendering that carries the configuration
/// as `#` comment lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self, comments: &str) -> String {
        let mut out = String::new();
        for line in comments.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

/// A pass/fail item of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// A fitted exponent with an optional target and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSlope {
    pub name: String,
    pub fit: SlopeFit,
    pub expected: Option<f64>,
    pub tol: Option<f64>,
}

impl NamedSlope {
    pub fn within_tol(&self) -> bool {
        match (self.expected, self.tol) {
            (Some(e), Some(t)) => (self.fit.slope - e).abs() <= t,
            _ => true,
        }
    }
}

/// Per-point records of a sweep with fitted slopes, checks and the exact
/// configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub command: String,
    pub version: String,
    /// Serialized configuration.
    pub config: String,
    pub table: Table,
    pub slopes: Vec<NamedSlope>,
    pub checks: Vec<Check>,
}

impl SweepReport {
    pub fn new(command: &str, config: String, table: Table) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            table,
            slopes: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    /// Fits ln y against ln x; a failed fit is recorded as a failed check.
    pub fn slope(&mut self, name: &str, xs: &[f64], ys: &[f64], expected: Option<f64>, tol: Option<f64>) {
        match fit_slope(xs, ys) {
            Ok(fit) => {
                let s = NamedSlope { name: name.to_string(), fit, expected, tol };
                if expected.is_some() && tol.is_some() {
                    let detail = format!("slope {:.6} ± {:.2e}, expected {}", fit.slope, fit.stderr, expected.unwrap_or(f64::NAN));
                    self.check(&format!("slope {name}"), s.within_tol(), detail);
                }
                self.slopes.push(s);
            }
            Err(e) => self.check(&format!("slope {name}"), false, e.to_string()),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let head = format!("command = {}\nversion = {}\n{}", self.command, self.version, self.config);
        self.table.to_csv(&head)
    }

    /// Human-readable summary: checks and slopes.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.slopes {
            let _ = write!(out, "slope {}: {:.6} (stderr {:.2e}, {} points)", s.name, s.fit.slope, s.fit.stderr, s.fit.points);
            if let Some(e) = s.expected {
                let _ = write!(out, ", expected {e:.6}");
            }
            out.push('\n');
        }
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        out
    }
}

/// Float formatting used in tables: full precision, scientific.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.12e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BiradialGrid, BiradialProfile};
    use crate::nonlinearity::NonlinearitySpec;
    use std::sync::Arc;

    #[test]
    fn recovers_exact_power_law() {
        let xs = [1.0, 10.0, 100.0, 1000.0, 1e4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        let f = fit_slope(&xs, &ys).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(f.stderr < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_slope(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_slope(&[1.0, 2.0, 3.0, 4.0], &[1.0, -2.0, 3.0, 4.0]).is_err());
        assert!(fit_slope(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn csv_carries_comments() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        let s = t.to_csv("n = 4\nk = 2");
        assert_eq!(s, "# n = 4\n# k = 2\na,b\n1,2\n");
    }

    #[test]
    fn gradient_is_second_order_consistent() {
        let g = Arc::new(BiradialGrid::square(4, 2, 6.0, 20).unwrap());
        let fun = Functional::new(g.clone(), &NonlinearitySpec::min_power(2.5, 5.0).unwrap(), 2.0, 1.0).unwrap();
        let u = BiradialProfile::from_fn(g.clone(), |s, t| (-(s - 2.0).powi(2) - t * t).exp()).values;
        let v = BiradialProfile::from_fn(g, |s, t| (s * t).sin() * (-(s * s + t * t) / 4.0).exp()).values;
        let c = gradient_check(&fun, &u, &v, 1e-2, 5).unwrap();
        assert!(c.order > 1.9, "{c:?}");
    }
}

#[cfg(test)]
mod sweep_tests {
    use super::*;

    #[test]
    fn slope_checks_are_recorded() {
        let mut r = SweepReport::new("c-bounds", "n = 4".into(), Table::new(&["a"]));
        let xs = [1.0, 10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 7.0 * x.powf(1.5)).collect();
        r.slope("exact", &xs, &ys, Some(1.5), Some(1e-12));
        assert!(r.passed());
        assert!(r.slopes[0].fit.stderr < 1e-12);
        r.slope("short", &xs[..3], &ys[..3], None, None);
        assert!(!r.passed());
        assert!(r.to_csv().starts_with("# command = c-bounds\n# version = "));
    }
}
