//! JSON scenario files: system parameters plus numerical and output settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ermakov::{default_solver_options, PinneyCoefficients};
use crate::error::{Error, Result};
use crate::ode::SolverOptions;
use crate::parallel::Exec;
use crate::profiles::{validate_params, SystemParams};
use crate::quantum::{QuantumSystem, MIN_GRID_POINTS};
use crate::reduction::Reduction;

pub const DEFAULT_THETA_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_FIXED_STEP: f64 = 1e-3;
pub const DEFAULT_GRID_POINTS: usize = 256;
pub const DEFAULT_SAMPLES: usize = 201;

fn default_theta_tolerance() -> f64 {
    DEFAULT_THETA_TOLERANCE
}

fn default_fixed_step() -> f64 {
    DEFAULT_FIXED_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub params: SystemParams,
    /// Allowed drift of the decoupling angle (and of `m₁/m₂`) over the interval.
    #[serde(default = "default_theta_tolerance")]
    pub theta_tolerance: f64,
    /// Solver for classical trajectories.
    #[serde(default)]
    pub solver: SolverOptions,
    /// RK4 step used when fixed-step mode is requested.
    #[serde(default = "default_fixed_step")]
    pub fixed_step_size: f64,
    #[serde(default)]
    pub ermakov: ErmakovSettings,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub classical: ClassicalSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

/// Initial data of one auxiliary equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeInitial {
    pub rho0: f64,
    #[serde(default)]
    pub rho_dot0: f64,
}

impl Default for ModeInitial {
    fn default() -> Self {
        ModeInitial { rho0: 1.0, rho_dot0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErmakovSettings {
    pub solver: SolverOptions,
    pub initial: [ModeInitial; 2],
    /// Mesh cells; `None` gives spacing 0.01 (at least 200 cells).
    pub cells: Option<usize>,
}

impl Default for ErmakovSettings {
    fn default() -> Self {
        ErmakovSettings { solver: default_solver_options(), initial: [ModeInitial::default(); 2], cells: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Points per axis.
    pub n: usize,
    /// Half-widths `[X₁, X₂]`; `None` sizes the grid from `ρ`.
    pub extent: Option<[f64; 2]>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { n: DEFAULT_GRID_POINTS, extent: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSettings {
    /// Original-frame initial state `[X₁, X₂, P₁, P₂]` at `t₀`.
    pub state: [f64; 4],
}

impl Default for ClassicalSettings {
    fn default() -> Self {
        ClassicalSettings { state: [1.0, 0.5, 0.0, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Output directory; the command-line `--out` takes precedence.
    pub dir: Option<PathBuf>,
    /// Number of time samples in tabular outputs.
    pub samples: usize,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: None, samples: DEFAULT_SAMPLES }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::InvalidParams(format!("scenario does not parse: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks: everything except the physics of the reduction.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::InvalidParams("scenario name is empty".into()));
        }
        let positive = [
            ("theta_tolerance", self.theta_tolerance),
            ("fixed_step_size", self.fixed_step_size),
            ("solver.rtol", self.solver.rtol),
            ("solver.atol", self.solver.atol),
            ("ermakov.solver.rtol", self.ermakov.solver.rtol),
            ("ermakov.solver.atol", self.ermakov.solver.atol),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{field} must be positive (got {v})")));
            }
        }
        for m in &self.ermakov.initial {
            if !(m.rho0 > 0.0 && m.rho0.is_finite() && m.rho_dot0.is_finite()) {
                return Err(Error::InvalidParams(format!("ermakov initial rho0 must be positive (got {})", m.rho0)));
            }
        }
        if self.ermakov.cells.is_some_and(|c| c < 2) {
            return Err(Error::InvalidParams("ermakov.cells must be at least 2".into()));
        }
        if self.output.samples < 2 {
            return Err(Error::InvalidParams("output.samples must be at least 2".into()));
        }
        if self.grid.n < MIN_GRID_POINTS {
            return Err(Error::InvalidParams(format!(
                "grid.n must be at least {MIN_GRID_POINTS} (got {})",
                self.grid.n
            )));
        }
        if let Some(e) = self.grid.extent {
            if !e.iter().all(|v| *v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("grid.extent must be positive (got {e:?})")));
            }
        }
        validate_params(&self.params).into_result()
    }

    pub fn solver_options(&self, fixed_step: bool) -> SolverOptions {
        let mut o = self.solver;
        if fixed_step {
            o.fixed_step = Some(self.fixed_step_size);
        }
        o
    }

    pub fn ermakov_options(&self, fixed_step: bool) -> SolverOptions {
        let mut o = self.ermakov.solver;
        if fixed_step {
            o.fixed_step = Some(self.fixed_step_size);
        }
        o
    }

    pub fn pinney_coefficients(&self) -> Result<[PinneyCoefficients; 2]> {
        let [a, b] = self.ermakov.initial;
        Ok([
            PinneyCoefficients::from_initial(a.rho0, a.rho_dot0)?,
            PinneyCoefficients::from_initial(b.rho0, b.rho_dot0)?,
        ])
    }

    /// Both Ermakov modes solved with this scenario's initial data, mesh and tolerances.
    pub fn quantum_system(&self, reduction: &Reduction, fixed_step: bool, exec: Exec) -> Result<QuantumSystem> {
        QuantumSystem::new(
            reduction.clone(),
            self.theta_tolerance,
            self.pinney_coefficients()?,
            self.ermakov.cells,
            &self.ermakov_options(fixed_step),
            exec,
        )
    }
}
