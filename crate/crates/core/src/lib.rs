//! Numerics for −Δu + A|x|^{−α}u = f(u) in ℝ^N: exponent arithmetic, energy
//! discretizations on radial and biradial grids, the bump test-function
//! family, radial level bounds and a mountain-pass solver.

pub mod biradial_solver;
pub mod discretization;
pub mod error;
pub mod exponents;
pub mod minres;
pub mod nonlinearity;
pub mod quadrature;
pub mod radial_solver;
pub mod report;
pub mod special;
pub mod testfunction;

pub use error::{Error, Result};
pub use discretization::{BiradialGrid, BiradialProfile, Functional, Lattice, Profile, RadialGrid, RadialProfile};
pub use exponents::{ExponentTable, ProblemParams, RegionStatus, RegionVerdict};
pub use nonlinearity::{AssumptionReport, Family, NonlinearitySpec};
pub use biradial_solver::{MpaOptions, MpaReport, SeparationReport, SolutionRecord, SolverConfig};
pub use radial_solver::{LowerBoundCert, TrialProfile};
pub use report::{Check, SlopeFit, SweepReport, Table};
pub use testfunction::{BumpSpec, PathBound};
