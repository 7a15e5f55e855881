//! Explicit Runge–Kutta integrators for small fixed-size systems.
//!
//! The default is the Dormand–Prince 5(4) embedded pair with PI-free
//! step control; [`SolverOptions::fixed_step`] switches to classical RK4 with
//! a fixed step, which gives bit-reproducible output. In both modes the step
//! is shortened to land exactly on every requested output time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)` of an `N`-dimensional system.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

/// Adapter turning a closure into an [`OdeSystem`].
pub struct FnSystem<F>(pub F);

impl<F, const N: usize> OdeSystem<N> for FnSystem<F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        (self.0)(t, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Fixed RK4 step; `None` selects the adaptive solver.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
    /// Initial step for the adaptive solver; estimated when `None`.
    pub initial_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-10, atol: 1e-12, fixed_step: None, max_steps: 5_000_000, initial_step: None }
    }
}

impl SolverOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        SolverOptions { rtol, atol, ..Default::default() }
    }

    pub fn fixed(step: f64) -> Self {
        SolverOptions { fixed_step: Some(step), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest scaled local error estimate among accepted steps (0 in fixed-step mode).
    pub max_error_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct OdeSolution<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; N]>,
    pub stats: SolverStats,
}

impl<const N: usize> OdeSolution<N> {
    pub fn last(&self) -> (f64, [f64; N]) {
        (*self.times.last().unwrap(), *self.states.last().unwrap())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// 5th-order minus embedded 4th-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[&[f64; N]], coeffs: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(coeffs) {
        if c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

fn rms_norm<const N: usize>(v: &[f64; N], y: &[f64; N], y_new: &[f64; N], opts: &SolverOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
        acc += (v[i] / scale).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn check_finite<const N: usize>(t: f64, y: &[f64; N]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::SolverFailure { t, reason: "state became non-finite".into() })
    }
}

/// Integrate from `(t0, y0)` and record the state at each of `outputs`.
///
/// `outputs` must be monotone in the direction of integration (increasing or
/// decreasing from `t0`); an output equal to `t0` records `y0`.
pub fn solve<S, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &SolverOptions,
) -> Result<OdeSolution<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    let Some(&t_end) = outputs.last() else {
        return Ok(OdeSolution { times: vec![], states: vec![], stats: SolverStats::default() });
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut prev = t0;
    for &t in outputs {
        if !t.is_finite() || (t - prev) * dir < 0.0 {
            return Err(Error::SolverFailure { t, reason: "output times must be monotone from t0".into() });
        }
        prev = t;
    }
    match opts.fixed_step {
        Some(h) => solve_rk4(sys, t0, y0, outputs, h.abs() * dir, opts),
        None => solve_dopri(sys, t0, y0, outputs, dir, opts),
    }
}

fn solve_rk4<S, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    h: f64,
    opts: &SolverOptions,
) -> Result<OdeSolution<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    if h == 0.0 || !h.is_finite() {
        return Err(Error::SolverFailure { t: t0, reason: "fixed step must be non-zero".into() });
    }
    let mut times = Vec::with_capacity(outputs.len());
    let mut states = Vec::with_capacity(outputs.len());
    let mut stats = SolverStats::default();
    let mut t = t0;
    let mut y = y0;
    for &target in outputs {
        // Integer step count keeps the mesh independent of accumulated rounding.
        let span = target - t;
        let n = (span / h).abs().ceil() as usize;
        let step = if n == 0 { 0.0 } else { span / n as f64 };
        for i in 0..n {
            let ti = t + step * i as f64;
            let k1 = sys.rhs(ti, &y)?;
            let k2 = sys.rhs(ti + 0.5 * step, &axpy(&y, step, &[&k1], &[0.5]))?;
            let k3 = sys.rhs(ti + 0.5 * step, &axpy(&y, step, &[&k2], &[0.5]))?;
            let k4 = sys.rhs(ti + step, &axpy(&y, step, &[&k3], &[1.0]))?;
            y = axpy(&y, step, &[&k1, &k2, &k3, &k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
            check_finite(ti + step, &y)?;
            stats.steps += 1;
            if stats.steps > opts.max_steps {
                return Err(Error::SolverFailure { t: ti, reason: "maximum step count exceeded".into() });
            }
        }
        t = target;
        times.push(t);
        states.push(y);
    }
    Ok(OdeSolution { times, states, stats })
}

fn solve_dopri<S, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    dir: f64,
    opts: &SolverOptions,
) -> Result<OdeSolution<N>>
where
    S: OdeSystem<N> + ?Sized,
{
    let mut times = Vec::with_capacity(outputs.len());
    let mut states = Vec::with_capacity(outputs.len());
    let mut stats = SolverStats::default();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y)?;
    let total_span = (outputs[outputs.len() - 1] - t0).abs();
    let mut h = match opts.initial_step {
        Some(h) => h.abs(),
        None => {
            let zero = [0.0; N];
            let d0 = rms_norm(&y, &zero, &y, opts);
            let d1 = rms_norm(&k1, &zero, &y, opts);
            let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            guess.min(total_span.max(f64::MIN_POSITIVE))
        }
    };

    for &target in outputs {
        while (target - t) * dir > 0.0 {
            let remaining = (target - t).abs();
            let truncated = h >= remaining;
            let step = if truncated { remaining } else { h } * dir;
            let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if truncated && remaining < min_step {
                // An output within rounding distance: a single Euler step is exact to working precision.
                y = axpy(&y, step, &[&k1], &[1.0]);
                t = target;
                k1 = sys.rhs(t, &y)?;
                continue;
            }
            if step.abs() < min_step {
                return Err(Error::SolverFailure { t, reason: format!("step size underflow (h = {:e})", step.abs()) });
            }

            let k2 = sys.rhs(t + C[1] * step, &axpy(&y, step, &[&k1], &A2))?;
            let k3 = sys.rhs(t + C[2] * step, &axpy(&y, step, &[&k1, &k2], &A3))?;
            let k4 = sys.rhs(t + C[3] * step, &axpy(&y, step, &[&k1, &k2, &k3], &A4))?;
            let k5 = sys.rhs(t + C[4] * step, &axpy(&y, step, &[&k1, &k2, &k3, &k4], &A5))?;
            let k6 = sys.rhs(t + C[5] * step, &axpy(&y, step, &[&k1, &k2, &k3, &k4, &k5], &A6))?;
            let y_new = axpy(&y, step, &[&k1, &k2, &k3, &k4, &k5, &k6], &B);
            let t_new = if truncated { target } else { t + step };
            let k7 = sys.rhs(t_new, &y_new)?;

            let mut err = [0.0; N];
            for i in 0..N {
                err[i] =
                    step * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i]);
            }
            let err_norm = rms_norm(&err, &y, &y_new, opts);
            if !err_norm.is_finite() {
                return Err(Error::SolverFailure { t, reason: "non-finite error estimate".into() });
            }

            let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            if err_norm <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                stats.steps += 1;
                stats.max_error_estimate = stats.max_error_estimate.max(err_norm);
                // A step truncated to hit an output keeps the natural step size.
                let base = if truncated { h.max(step.abs()) } else { step.abs() };
                h = base * factor.min(if truncated { 1.0 } else { 5.0 });
                check_finite(t, &y)?;
            } else {
                stats.rejected += 1;
                h = step.abs() * factor.min(1.0);
            }
            if stats.steps + stats.rejected > opts.max_steps {
                return Err(Error::SolverFailure { t, reason: "maximum step count exceeded".into() });
            }
        }
        times.push(t);
        states.push(y);
    }
    Ok(OdeSolution { times, states, stats })
}
