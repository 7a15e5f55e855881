//! Auxiliary Ermakov equations `ρ̈ + Ω²(t)ρ = ρ⁻³`, solved through the Pinney
//! construction `ρ² = Au² + 2Buv + Cv²` from two solutions of `ü + Ω²u = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{solve, FnSystem, SolverOptions};
use crate::profiles::uniform;

/// `Ω²(t)` as a shareable closure.
#[derive(Clone)]
pub struct FrequencyFn(Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>);

impl FrequencyFn {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        FrequencyFn(Arc::new(f))
    }

    pub fn constant(omega_sq: f64) -> Self {
        FrequencyFn::new(move |_| Ok(omega_sq))
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        (self.0)(t)
    }
}

impl fmt::Debug for FrequencyFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FrequencyFn(..)")
    }
}

/// Default tolerances for the linear pair; tighter than the trajectory
/// default so the Wronskian stays within 1e-9 over long intervals.
pub fn default_solver_options() -> SolverOptions {
    SolverOptions::with_tolerances(1e-12, 1e-14)
}

/// Coefficients of `ρ² = A u² + 2B uv + C v²`, with `AC − B² = 1` for unit Wronskian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinneyCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PinneyCoefficients {
    /// `ρ(t₀) = 1`, `ρ̇(t₀) = 0`.
    pub const UNIT: PinneyCoefficients = PinneyCoefficients { a: 1.0, b: 0.0, c: 1.0 };

    /// Coefficients reproducing the initial data `ρ(t₀) = rho0`, `ρ̇(t₀) = rho_dot0`.
    pub fn from_initial(rho0: f64, rho_dot0: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite() && rho_dot0.is_finite()) {
            return Err(Error::ZeroRho(rho0));
        }
        let a = rho0 * rho0;
        let b = rho0 * rho_dot0;
        Ok(PinneyCoefficients { a, b, c: (1.0 + b * b) / a })
    }

    /// The constant branch `ρ = Ω^{-1/2}` for a constant frequency.
    pub fn equilibrium(omega: f64) -> Result<Self> {
        Self::from_initial(omega.powf(-0.5), 0.0)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

/// Solutions `u`, `v` of `ü + Ω²u = 0` with `u(t₀)=1, u̇(t₀)=0, v(t₀)=0, v̇(t₀)=1`.
#[derive(Debug, Clone)]
pub struct LinearPair {
    pub mesh: Vec<f64>,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub v: Vec<f64>,
    pub v_dot: Vec<f64>,
}

impl LinearPair {
    pub fn wronskian(&self, i: usize) -> f64 {
        self.u[i] * self.v_dot[i] - self.v[i] * self.u_dot[i]
    }
}

// State: [u, u̇, v, v̇, ∫ dt/ρ²].
fn integrate_augmented(
    omega_sq: &FrequencyFn,
    coeffs: PinneyCoefficients,
    t_from: f64,
    y_from: [f64; 5],
    outputs: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<[f64; 5]>> {
    let sys = FnSystem(|t: f64, y: &[f64; 5]| {
        let w = omega_sq.eval(t)?;
        let rho_sq = coeffs.a * y[0] * y[0] + 2.0 * coeffs.b * y[0] * y[2] + coeffs.c * y[2] * y[2];
        Ok([y[1], -w * y[0], y[3], -w * y[2], 1.0 / rho_sq])
    });
    Ok(solve(&sys, t_from, y_from, outputs, opts)?.states)
}

pub fn solve_linear_pair(
    omega_sq: &FrequencyFn,
    interval: (f64, f64),
    cells: usize,
    opts: &SolverOptions,
) -> Result<LinearPair> {
    let mesh = uniform(interval.0, interval.1, cells + 1);
    let states =
        integrate_augmented(omega_sq, PinneyCoefficients::UNIT, interval.0, [1.0, 0.0, 0.0, 1.0, 0.0], &mesh, opts)?;
    Ok(LinearPair {
        u: states.iter().map(|s| s[0]).collect(),
        u_dot: states.iter().map(|s| s[1]).collect(),
        v: states.iter().map(|s| s[2]).collect(),
        v_dot: states.iter().map(|s| s[3]).collect(),
        mesh,
    })
}

/// `(ρ, ρ̇)` from one point of the linear pair.
pub fn compose_point(coeffs: PinneyCoefficients, u: f64, u_dot: f64, v: f64, v_dot: f64) -> Result<(f64, f64)> {
    let rho_sq = coeffs.a * u * u + 2.0 * coeffs.b * u * v + coeffs.c * v * v;
    if !(rho_sq > 0.0) {
        return Err(Error::ZeroRho(rho_sq.max(0.0).sqrt()));
    }
    let rho = rho_sq.sqrt();
    let half_d = coeffs.a * u * u_dot + coeffs.b * (u_dot * v + u * v_dot) + coeffs.c * v * v_dot;
    Ok((rho, half_d / rho))
}

/// `(ρ, ρ̇)` on the whole mesh of a linear pair.
pub fn pinney_compose(pair: &LinearPair, coeffs: PinneyCoefficients) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rho = Vec::with_capacity(pair.mesh.len());
    let mut rho_dot = Vec::with_capacity(pair.mesh.len());
    for i in 0..pair.mesh.len() {
        let (r, rd) = compose_point(coeffs, pair.u[i], pair.u_dot[i], pair.v[i], pair.v_dot[i])?;
        rho.push(r);
        rho_dot.push(rd);
    }
    Ok((rho, rho_dot))
}

/// `ρ`, `ρ̇` and `∫_{t₀}^{t} dt'/ρ²` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoPoint {
    pub rho: f64,
    pub rho_dot: f64,
    pub phase_integral: f64,
}

/// One Ermakov mode on a time mesh, with dense evaluation in between.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub mesh: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub u: Vec<f64>,
    pub u_dot: Vec<f64>,
    pub v: Vec<f64>,
    pub v_dot: Vec<f64>,
    /// `∫_{t₀}^{t} dt'/ρ²` at the mesh points.
    pub phase_integral: Vec<f64>,
    /// Wronskian of the initial data (1).
    pub wronskian: f64,
    pub coeffs: PinneyCoefficients,
    omega_sq: FrequencyFn,
    opts: SolverOptions,
}

/// Default mesh: spacing 0.01, at least 200 cells.
pub fn default_cells(interval: (f64, f64)) -> usize {
    (((interval.1 - interval.0) / 0.01).ceil() as usize).max(200)
}

impl ErmakovSolution {
    pub fn solve(
        omega_sq: FrequencyFn,
        interval: (f64, f64),
        coeffs: PinneyCoefficients,
        cells: usize,
        opts: &SolverOptions,
    ) -> Result<Self> {
        if (coeffs.determinant() - 1.0).abs() > 1e-12 || coeffs.a <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "Pinney coefficients need A > 0 and AC - B^2 = 1 (got {:?})",
                coeffs
            )));
        }
        let mesh = uniform(interval.0, interval.1, cells.max(1) + 1);
        let states = integrate_augmented(&omega_sq, coeffs, interval.0, [1.0, 0.0, 0.0, 1.0, 0.0], &mesh, opts)?;
        let mut sol = ErmakovSolution {
            rho: Vec::with_capacity(mesh.len()),
            rho_dot: Vec::with_capacity(mesh.len()),
            u: states.iter().map(|s| s[0]).collect(),
            u_dot: states.iter().map(|s| s[1]).collect(),
            v: states.iter().map(|s| s[2]).collect(),
            v_dot: states.iter().map(|s| s[3]).collect(),
            phase_integral: states.iter().map(|s| s[4]).collect(),
            mesh,
            wronskian: 1.0,
            coeffs,
            omega_sq,
            opts: *opts,
        };
        for s in &states {
            let (r, rd) = compose_point(coeffs, s[0], s[1], s[2], s[3])?;
            sol.rho.push(r);
            sol.rho_dot.push(rd);
        }
        Ok(sol)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.mesh[0], self.mesh[self.mesh.len() - 1])
    }

    pub fn omega_sq(&self) -> &FrequencyFn {
        &self.omega_sq
    }

    /// `[u, u̇, v, v̇, ∫dt/ρ²]` at `t`, integrated from the nearest mesh node.
    pub fn state_at(&self, t: f64) -> Result<[f64; 5]> {
        let (lo, hi) = self.interval();
        let slack = 1e-9 * (hi - lo).max(1.0);
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let step = (hi - lo) / (self.mesh.len() - 1) as f64;
        let k = (((t - lo) / step).round() as usize).min(self.mesh.len() - 1);
        let y = [self.u[k], self.u_dot[k], self.v[k], self.v_dot[k], self.phase_integral[k]];
        if t == self.mesh[k] {
            return Ok(y);
        }
        Ok(integrate_augmented(&self.omega_sq, self.coeffs, self.mesh[k], y, &[t], &self.opts)?[0])
    }

    /// States at increasing times along one continuous integration, so that
    /// solver error varies smoothly between them.
    pub fn states_along(&self, times: &[f64]) -> Result<Vec<[f64; 5]>> {
        let Some(&first) = times.first() else { return Ok(vec![]) };
        let (lo, hi) = self.interval();
        if first < lo || times[times.len() - 1] > hi {
            return Err(Error::OutOfRange { t: first, lo, hi });
        }
        let mid = times[times.len() / 2];
        let step = (hi - lo) / (self.mesh.len() - 1) as f64;
        let k = (((mid - lo) / step).round() as usize).min(self.mesh.len() - 1);
        let t_k = self.mesh[k];
        let y_k = [self.u[k], self.u_dot[k], self.v[k], self.v_dot[k], self.phase_integral[k]];
        let split = times.partition_point(|&s| s < t_k);
        let backward: Vec<f64> = times[..split].iter().rev().copied().collect();
        let mut out = integrate_augmented(&self.omega_sq, self.coeffs, t_k, y_k, &backward, &self.opts)?;
        out.reverse();
        out.extend(integrate_augmented(&self.omega_sq, self.coeffs, t_k, y_k, &times[split..], &self.opts)?);
        Ok(out)
    }

    pub fn at(&self, t: f64) -> Result<RhoPoint> {
        let s = self.state_at(t)?;
        let (rho, rho_dot) = compose_point(self.coeffs, s[0], s[1], s[2], s[3])?;
        Ok(RhoPoint { rho, rho_dot, phase_integral: s[4] })
    }

    /// `ρ̈` from the linear-pair states and the ODE (`ü = −Ω²u`).
    pub fn rho_ddot(&self, t: f64) -> Result<f64> {
        let [u, ud, v, vd, _] = self.state_at(t)?;
        let w = self.omega_sq.eval(t)?;
        let PinneyCoefficients { a, b, c } = self.coeffs;
        let s = a * u * u + 2.0 * b * u * v + c * v * v;
        let kin = a * ud * ud + 2.0 * b * ud * vd + c * vd * vd;
        let s_ddot = 2.0 * kin - 2.0 * w * s;
        let (rho, rho_dot) = compose_point(self.coeffs, u, ud, v, vd)?;
        Ok((0.5 * s_ddot - rho_dot * rho_dot) / rho)
    }

    /// Largest `|u v̇ − v u̇ − W|` over the mesh.
    pub fn max_wronskian_deviation(&self) -> f64 {
        (0..self.mesh.len())
            .map(|i| (self.u[i] * self.v_dot[i] - self.v[i] * self.u_dot[i] - self.wronskian).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }
}

/// Residual of the Ermakov equation at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErmakovResidual {
    /// `|ρ̈ρ³ + Ω²ρ⁴ − 1|` with `ρ̈` from the ODE states.
    pub residual: f64,
    /// The same expression with `ρ̈` from a finite-difference stencil on `ρ(t)`.
    pub residual_fd: f64,
}

/// Step and width of the finite-difference stencil used for the cross-check.
pub const FD_STEP: f64 = 0.005;
const FD_POINTS: usize = 9;
/// Fixed RK4 substeps between stencil samples.
const FD_SUBSTEPS: usize = 8;

/// Fornberg weights for the `order`-th derivative at 0 from samples at `offsets`.
pub fn fd_weights(offsets: &[f64], order: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            for k in (0..=mn).rev() {
                let prev_i = if k > 0 { c[i - 1][k - 1] } else { 0.0 };
                c[i][k] = c1 * (k as f64 * prev_i - offsets[i - 1] * c[i - 1][k]) / c2;
            }
            for k in (0..=mn).rev() {
                let prev = if k > 0 { c[j][k - 1] } else { 0.0 };
                c[j][k] = (offsets[i] * c[j][k] - k as f64 * prev) / c3;
            }
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// `ρ̈(t)` from a 9-point stencil on `ρ`, shifted inward near the interval ends.
///
/// The first sample comes from the adaptive solver; the rest follow it with
/// fixed RK4 substeps, so integration error is smooth across the stencil
/// instead of jumping with the adaptive step pattern.
pub fn rho_ddot_fd(sol: &ErmakovSolution, t: f64) -> Result<f64> {
    let (lo, hi) = sol.interval();
    let h = FD_STEP.min((hi - lo) / (2 * FD_POINTS) as f64);
    let half = (FD_POINTS / 2) as f64;
    let start = (t - half * h).max(lo).min(hi - 2.0 * half * h);
    let offsets: Vec<f64> = (0..FD_POINTS).map(|k| start + k as f64 * h - t).collect();
    let times: Vec<f64> = offsets.iter().map(|s| (t + s).clamp(lo, hi)).collect();
    let weights = fd_weights(&offsets, 2);
    let mut acc = 0.0;
    let first = sol.state_at(times[0])?;
    let fixed = SolverOptions { fixed_step: Some(h / FD_SUBSTEPS as f64), ..sol.opts };
    let rest = integrate_augmented(&sol.omega_sq, sol.coeffs, times[0], first, &times[1..], &fixed)?;
    for (w, y) in weights.iter().zip(std::iter::once(first).chain(rest)) {
        acc += w * compose_point(sol.coeffs, y[0], y[1], y[2], y[3])?.0;
    }
    Ok(acc)
}

pub fn ermakov_residual(sol: &ErmakovSolution, t: f64) -> Result<ErmakovResidual> {
    let rho = sol.at(t)?.rho;
    let w = sol.omega_sq.eval(t)?;
    let residual = (sol.rho_ddot(t)? * rho.powi(3) + w * rho.powi(4) - 1.0).abs();
    let residual_fd = (rho_ddot_fd(sol, t)? * rho.powi(3) + w * rho.powi(4) - 1.0).abs();
    Ok(ErmakovResidual { residual, residual_fd })
}

/// Supremum of both residuals over the mesh (every `stride`-th node).
pub fn max_residual(sol: &ErmakovSolution, stride: usize) -> Result<ErmakovResidual> {
    let mut worst = ErmakovResidual { residual: 0.0, residual_fd: 0.0 };
    for t in sol.mesh.iter().step_by(stride.max(1)) {
        let r = ermakov_residual(sol, *t)?;
        worst.residual = worst.residual.max(r.residual);
        worst.residual_fd = worst.residual_fd.max(r.residual_fd);
    }
    Ok(worst)
}
