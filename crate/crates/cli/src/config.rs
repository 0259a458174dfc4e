//! Experiment configuration: TOML file, `--set` overrides and validation.

use serde::{Deserialize, Serialize};

use nonradial_core::biradial_solver::{Descent, MpaOptions, SolverConfig};
use nonradial_core::nonlinearity::{Family, NonlinearitySpec};
use nonradial_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub problem: ProblemSection,
    pub nonlinearity: NonlinearitySection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub alpha: f64,
    pub a: f64,
    /// Splitting index; when absent the admissible list is used.
    pub k: Option<usize>,
    /// Single exponent for `classify`.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearitySection {
    pub family: Family,
    pub p1: f64,
    pub p2: f64,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Cells per direction of the biradial solver grid.
    pub cells: usize,
    /// Cells per direction of the trial-blob scan.
    pub scan_cells: usize,
    /// Cells per direction for direct integrals over the bump support.
    pub support_cells: usize,
    pub radial_nodes: usize,
    /// Samples of the nonlinearity assumption check.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub a_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    /// Extra exponents for `classify`.
    pub p_list: Vec<f64>,
    /// Random radial profiles per A in `m-bounds`.
    pub profiles: usize,
    pub identity_tol: f64,
    pub slope_tol: f64,
    /// Multiplier applied to the crossover A* when `a_list` is empty in
    /// `separate` and `theorem-demo`.
    pub a_star_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iter: usize,
    pub descent: Descent,
    pub memory: usize,
    pub path_nodes: usize,
    pub polish_tol: f64,
    pub polish_steps: usize,
    pub multistart: usize,
    pub box_rounds: usize,
    pub edge_tol: f64,
    pub verify_tests: usize,
    pub verify_tol: f64,
    /// Re-solve on the doubled grid and report the level change.
    pub refine: bool,
    pub refine_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Write solution profiles as columnar text.
    pub profiles: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            problem: ProblemSection::default(),
            nonlinearity: NonlinearitySection::default(),
            grid: GridSection::default(),
            sweep: SweepSection::default(),
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { n: 4, alpha: 1.0, a: 100.0, k: None, p: None }
    }
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self { family: Family::MinPower, p1: 2.5, p2: 5.0, theta: None, mu: None }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self { cells: 128, scan_cells: 48, support_cells: 512, radial_nodes: 2000, samples: 20001 }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            a_list: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            eps_list: vec![1.0, 0.5, 0.25, 0.1],
            p_list: Vec::new(),
            profiles: 20,
            identity_tol: 1e-6,
            slope_tol: 0.05,
            a_star_factor: 100.0,
        }
    }
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = MpaOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            descent: o.descent,
            memory: o.memory,
            path_nodes: o.path_nodes,
            polish_tol: o.polish_tol,
            polish_steps: o.polish_steps,
            multistart: 3,
            box_rounds: 3,
            edge_tol: 1e-4,
            verify_tests: 20,
            verify_tol: 1e-6,
            refine: false,
            refine_tol: 0.02,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), profiles: true }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    /// Parses TOML text and applies `key=value` overrides on dotted paths.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut value = match text {
            Some(t) => toml::from_str::<toml::Table>(t).map_err(|e| bad(format!("config: {e}")))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ExperimentConfig =
            toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| bad(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.n < 3 {
            return Err(bad(format!("problem.n = {} must be >= 3", p.n)));
        }
        if !(p.alpha > 0.0 && p.alpha.is_finite()) || !(p.a > 0.0 && p.a.is_finite()) {
            return Err(bad("problem.alpha and problem.a must be positive"));
        }
        if let Some(k) = p.k {
            if k < 2 || k + 2 > p.n {
                return Err(bad(format!("problem.k = {k} must satisfy 2 <= k <= n-2")));
            }
        }
        self.spec()?;
        let g = &self.grid;
        if g.cells < 8 || g.scan_cells < 8 || g.support_cells < 32 || g.radial_nodes < 50 || g.samples < 1000 {
            return Err(bad("grid sizes too small (cells, scan_cells >= 8; support_cells >= 32; radial_nodes >= 50; samples >= 1000)"));
        }
        let s = &self.sweep;
        if s.a_list.iter().any(|a| !(*a > 0.0)) || s.a_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(bad("sweep.a_list must be positive and strictly increasing"));
        }
        if s.eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(bad("sweep.eps_list entries must lie in (0, 1]"));
        }
        if s.p_list.iter().any(|x| !(*x > 2.0)) {
            return Err(bad("sweep.p_list entries must exceed 2"));
        }
        if !(s.identity_tol > 0.0 && s.slope_tol > 0.0 && s.a_star_factor >= 1.0) {
            return Err(bad("sweep tolerances must be positive and a_star_factor >= 1"));
        }
        let v = &self.solver;
        if v.verify_tests == 0 || !(v.verify_tol > 0.0) || !(v.refine_tol > 0.0) {
            return Err(bad("solver.verify_tests, verify_tol and refine_tol must be positive"));
        }
        if v.multistart == 0 || !(v.edge_tol > 0.0) {
            return Err(bad("solver.multistart and solver.edge_tol must be positive"));
        }
        self.mpa_options().validate()
    }

    pub fn spec(&self) -> Result<NonlinearitySpec> {
        let n = &self.nonlinearity;
        if n.family == Family::Custom {
            return Err(bad("custom nonlinearities are available through the library only"));
        }
        let mut spec = NonlinearitySpec::builtin(n.family, n.p1, n.p2)?;
        if let Some(t) = n.theta {
            spec = spec.with_theta(t);
        }
        if let Some(m) = n.mu {
            spec = spec.with_mu(m);
        }
        Ok(spec)
    }

    pub fn mpa_options(&self) -> MpaOptions {
        let v = &self.solver;
        MpaOptions {
            tol: v.tol,
            max_iter: v.max_iter,
            path_nodes: v.path_nodes,
            descent: v.descent,
            memory: v.memory,
            polish_tol: v.polish_tol,
            polish_steps: v.polish_steps,
        }
    }

    pub fn solver_config(&self, k: usize) -> SolverConfig {
        let p = &self.problem;
        SolverConfig {
            n: p.n,
            k,
            alpha: p.alpha,
            a: p.a,
            ns: self.grid.cells,
            nt: self.grid.cells,
            opts: self.mpa_options(),
            multistart: self.solver.multistart,
            box_rounds: self.solver.box_rounds,
            edge_tol: self.solver.edge_tol,
            scan_cells: self.grid.scan_cells,
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `section.key=value` (or a top-level `key=value`) in a TOML table.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| bad(format!("override `{spec}` must be key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad(format!("override `{spec}` has an empty key")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| bad(format!("`{k}` is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_scalar(raw.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::load(Some(&c.to_toml()), &[]).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn overrides_apply_with_types() {
        let c = ExperimentConfig::load(
            None,
            &["problem.n=6".into(), "problem.k=3".into(), "nonlinearity.family=rational-quotient".into(), "sweep.a_list=[1.0, 10.0]".into(), "seed=9".into()],
        )
        .unwrap();
        assert_eq!(c.problem.n, 6);
        assert_eq!(c.problem.k, Some(3));
        assert_eq!(c.nonlinearity.family, Family::RationalQuotient);
        assert_eq!(c.sweep.a_list, vec![1.0, 10.0]);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn invalid_settings_are_rejected() {
        assert!(ExperimentConfig::load(None, &["problem.k=3".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["problem.bogus=1".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["sweep.a_list=[10.0, 1.0]".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["nonlinearity.p2=2.4".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["solver.path_nodes=5".into()]).is_err());
        assert!(ExperimentConfig::load(None, &["noequals".into()]).is_err());
    }
}
