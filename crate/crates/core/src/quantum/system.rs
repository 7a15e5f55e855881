use std::sync::Arc;

use serde::Serialize;

use super::{
    chi, invariant_residual, psi_closed_form, psi_compositional, schrodinger_residual, xi, ChainFrame, ClosedForm,
    FieldFrame, Grid2, ModeSnapshot, QuadraticHamiltonian, QuantumNumbers, WaveField,
};
use crate::ermakov::{default_cells, ErmakovSolution, FrequencyFn, PinneyCoefficients};
use crate::error::Result;
use crate::ode::SolverOptions;
use crate::parallel::Exec;
use crate::reduction::{Reduction, CHECK_SAMPLES};

/// How the original-frame wave function is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Compositional,
    ClosedFormVerbatim,
    ClosedFormConsistent,
}

/// Time step of the central difference in the Schrödinger residual: this
/// fraction of the scenario interval, capped at [`RESIDUAL_DT_MAX`].
pub const RESIDUAL_DT_FRACTION: f64 = 1e-4;

/// The difference error grows like `(E·Δt)²` with the level energy `E`, so long
/// intervals must not stretch the step.
pub const RESIDUAL_DT_MAX: f64 = 1e-4;

/// Gaussian widths covered by the default grid.
pub const GRID_WIDTHS: f64 = 8.0;

/// A decoupled scenario with both Ermakov modes solved.
#[derive(Debug, Clone)]
pub struct QuantumSystem {
    reduction: Arc<Reduction>,
    theta: f64,
    modes: [ErmakovSolution; 2],
}

impl QuantumSystem {
    /// Checks that the scenario decouples with positive normal frequencies,
    /// then solves both auxiliary equations (`cells: None` picks the default mesh).
    pub fn new(
        reduction: Reduction,
        theta_tolerance: f64,
        initial: [PinneyCoefficients; 2],
        cells: Option<usize>,
        opts: &SolverOptions,
        exec: Exec,
    ) -> Result<Self> {
        let theta = reduction.require_decoupled(theta_tolerance)?;
        reduction.require_positive_frequencies(theta)?;
        let reduction = Arc::new(reduction);
        let interval = (reduction.params().t0(), reduction.params().t1());
        let cells = cells.unwrap_or_else(|| default_cells(interval));
        let solve_mode = |k: usize| {
            let red = Arc::clone(&reduction);
            let omega_sq = FrequencyFn::new(move |t| {
                let (a, b, _) = red.normal_sq(t, theta)?;
                Ok(if k == 0 { a } else { b })
            });
            ErmakovSolution::solve(omega_sq, interval, initial[k], cells, opts)
        };
        let (m1, m2) = join(exec, || solve_mode(0), || solve_mode(1));
        Ok(QuantumSystem { reduction, theta, modes: [m1?, m2?] })
    }

    pub fn reduction(&self) -> &Reduction {
        &self.reduction
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn hbar(&self) -> f64 {
        self.reduction.hbar()
    }

    pub fn modes(&self) -> &[ErmakovSolution; 2] {
        &self.modes
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.reduction.params().t0(), self.reduction.params().t1())
    }

    pub fn snapshot(&self, t: f64) -> Result<ModeSnapshot> {
        ModeSnapshot::from_modes([&self.modes[0], &self.modes[1]], t)
    }

    pub fn frame(&self, t: f64) -> Result<ChainFrame> {
        ChainFrame::new(&self.reduction, t, self.theta)
    }

    /// `±8` Gaussian widths of the widest `ρ` over the interval, per axis.
    pub fn default_grid(&self, frame: FieldFrame, n: usize) -> Result<Grid2> {
        let sh = self.hbar().sqrt();
        let widths = [self.modes[0].max_rho() * sh, self.modes[1].max_rho() * sh];
        match frame {
            FieldFrame::Transformed => Grid2::centered(GRID_WIDTHS * widths[0], GRID_WIDTHS * widths[1], n),
            FieldFrame::Original => {
                let p = self.reduction.params();
                let (mut min1, mut min2) = (f64::INFINITY, f64::INFINITY);
                for t in p.sample_times(CHECK_SAMPLES) {
                    min1 = min1.min(p.m1.eval(t)?);
                    min2 = min2.min(p.m2.eval(t)?);
                }
                let w = GRID_WIDTHS * widths[0].max(widths[1]);
                Grid2::centered(w / min1.sqrt(), w / min2.sqrt(), n)
            }
        }
    }

    pub fn xi_field(&self, n: QuantumNumbers, t: f64, grid: Grid2, exec: Exec) -> Result<WaveField> {
        let s = self.snapshot(t)?;
        let hbar = self.hbar();
        WaveField::from_fn(grid, t, FieldFrame::Transformed, exec, |x, y| xi(n, x, y, &s, hbar))
    }

    pub fn chi_field(&self, n: QuantumNumbers, t: f64, grid: Grid2, exec: Exec) -> Result<WaveField> {
        let s = self.snapshot(t)?;
        let hbar = self.hbar();
        WaveField::from_fn(grid, t, FieldFrame::Transformed, exec, |x, y| chi(n, x, y, &s, hbar))
    }

    pub fn psi_field(
        &self,
        n: QuantumNumbers,
        t: f64,
        grid: Grid2,
        construction: Construction,
        exec: Exec,
    ) -> Result<WaveField> {
        let s = self.snapshot(t)?;
        let f = self.frame(t)?;
        let hbar = self.hbar();
        WaveField::from_fn(grid, t, FieldFrame::Original, exec, |x, y| match construction {
            Construction::Compositional => psi_compositional(n, x, y, &f, &s, hbar),
            Construction::ClosedFormVerbatim => psi_closed_form(n, x, y, &f, &s, hbar, ClosedForm::Verbatim),
            Construction::ClosedFormConsistent => psi_closed_form(n, x, y, &f, &s, hbar, ClosedForm::Consistent),
        })
    }

    /// Field in the requested frame: `χ` for the decoupled frame, `Ψ` otherwise.
    pub fn field(
        &self,
        n: QuantumNumbers,
        t: f64,
        frame: FieldFrame,
        construction: Construction,
        grid: Grid2,
        exec: Exec,
    ) -> Result<WaveField> {
        match frame {
            FieldFrame::Transformed => self.chi_field(n, t, grid, exec),
            FieldFrame::Original => self.psi_field(n, t, grid, construction, exec),
        }
    }

    pub fn hamiltonian(&self, frame: FieldFrame, t: f64) -> Result<QuadraticHamiltonian> {
        match frame {
            FieldFrame::Transformed => QuadraticHamiltonian::normal(&self.reduction, t, self.theta),
            FieldFrame::Original => QuadraticHamiltonian::original(&self.reduction, t),
        }
    }

    /// Schrödinger residual of `χ` (decoupled frame) or `Ψ` (original frame)
    /// around `t`, which is moved inward if the stencil would leave the interval.
    pub fn schrodinger_check(
        &self,
        n: QuantumNumbers,
        t: f64,
        frame: FieldFrame,
        construction: Construction,
        grid: Grid2,
        exec: Exec,
    ) -> Result<f64> {
        let (t0, t1) = self.interval();
        let dt = (RESIDUAL_DT_FRACTION * (t1 - t0)).min(RESIDUAL_DT_MAX);
        let tc = t.clamp(t0 + dt, t1 - dt);
        let fields = [
            self.field(n, tc - dt, frame, construction, grid, exec)?,
            self.field(n, tc, frame, construction, grid, exec)?,
            self.field(n, tc + dt, frame, construction, grid, exec)?,
        ];
        schrodinger_residual([&fields[0], &fields[1], &fields[2]], &self.hamiltonian(frame, tc)?, self.hbar(), exec)
    }

    pub fn invariant_check(&self, n: QuantumNumbers, t: f64, grid: Grid2, exec: Exec) -> Result<f64> {
        let field = self.xi_field(n, t, grid, exec)?;
        invariant_residual(&field, &self.snapshot(t)?, n, self.hbar(), exec)
    }

    /// Compares the published closed form (and the chain-consistent one)
    /// against the compositional wave function on one grid.
    pub fn discrepancy_report(&self, n: QuantumNumbers, t: f64, grid: Grid2, exec: Exec) -> Result<DiscrepancyReport> {
        let reference = self.psi_field(n, t, grid, Construction::Compositional, exec)?;
        let verbatim = self.psi_field(n, t, grid, Construction::ClosedFormVerbatim, exec)?;
        let consistent = self.psi_field(n, t, grid, Construction::ClosedFormConsistent, exec)?;
        Ok(DiscrepancyReport {
            t,
            n,
            verbatim_max_abs: verbatim.max_abs_diff(&reference)?,
            verbatim_l2: verbatim.l2_diff(&reference, exec)?,
            verbatim_norm_sq: verbatim.norm_sq(exec),
            consistent_max_abs: consistent.max_abs_diff(&reference)?,
            consistent_l2: consistent.l2_diff(&reference, exec)?,
            compositional_norm_sq: reference.norm_sq(exec),
        })
    }
}

/// Closed-form vs compositional wave function on one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub t: f64,
    pub n: QuantumNumbers,
    pub verbatim_max_abs: f64,
    pub verbatim_l2: f64,
    pub verbatim_norm_sq: f64,
    pub consistent_max_abs: f64,
    pub consistent_l2: f64,
    pub compositional_norm_sq: f64,
}

fn join<A, B, RA, RB>(exec: Exec, a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::join(a, b);
    }
    let _ = exec;
    (a(), b())
}
