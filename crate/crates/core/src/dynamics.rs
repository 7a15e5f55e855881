//! Classical propagation in the original and normal frames.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{solve, OdeSystem, SolverOptions, SolverStats};
use crate::reduction::{cyclotron, stiffness, Frame, PhaseSpaceState, Reduction};

/// Hamilton's equations of the original-frame Hamiltonian, including the
/// `P₂X₁` and `P₁X₂` terms from the symmetric-gauge vector potential.
pub struct OriginalFrameSystem<'a> {
    pub reduction: &'a Reduction,
}

impl OdeSystem<4> for OriginalFrameSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        let p = self.reduction.params();
        let (m1, m2) = (p.m1.eval(t)?, p.m2.eval(t)?);
        let cy = cyclotron(p, t)?;
        let [c1, c2, c3] = stiffness(p, t)?;
        let [x1, x2, p1, p2] = *y;
        Ok([
            p1 / m1 - 0.5 * cy.omega1c * x2,
            p2 / m2 + 0.5 * cy.omega2c * x1,
            -c1 * x1 - 0.5 * c3 * x2 - 0.5 * cy.omega2c * p2,
            -c2 * x2 - 0.5 * c3 * x1 + 0.5 * cy.omega1c * p1,
        ])
    }
}

/// Two independent unit-mass oscillators with frequencies `Ω₁(t)`, `Ω₂(t)`.
pub struct NormalFrameSystem<'a> {
    pub reduction: &'a Reduction,
    pub theta: f64,
}

impl OdeSystem<4> for NormalFrameSystem<'_> {
    fn rhs(&self, t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        let (w1, w2, _) = self.reduction.normal_sq(t, self.theta)?;
        Ok([y[2], y[3], -w1 * y[0], -w2 * y[1]])
    }
}

/// Energy in the original frame or the decoupled normal frame.
pub fn hamiltonian_value(state: &PhaseSpaceState, reduction: &Reduction, theta: f64) -> Result<f64> {
    let t = state.t;
    let [a, b] = state.q;
    let [pa, pb] = state.p;
    match state.frame {
        Frame::Original => {
            let p = reduction.params();
            let (m1, m2) = (p.m1.eval(t)?, p.m2.eval(t)?);
            let cy = cyclotron(p, t)?;
            let [c1, c2, c3] = stiffness(p, t)?;
            Ok(pa * pa / (2.0 * m1)
                + pb * pb / (2.0 * m2)
                + 0.5 * (c1 * a * a + c2 * b * b + c3 * a * b)
                + 0.5 * (cy.omega2c * pb * a - cy.omega1c * pa * b))
        }
        Frame::Normal => {
            let (w1, w2, _) = reduction.normal_sq(t, theta)?;
            Ok(0.5 * (pa * pa + pb * pb) + 0.5 * w1 * a * a + 0.5 * w2 * b * b)
        }
        other => Err(Error::FrameMismatch(format!("no Hamiltonian is defined in the {other:?} frame"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub samples: Vec<PhaseSpaceState>,
    pub stats: SolverStats,
}

/// Integrate from `state0` and record the state at each output time.
///
/// Outputs must lie in the scenario interval and be monotone away from
/// `state0.t`; backward integration is allowed.
pub fn propagate(
    reduction: &Reduction,
    state0: &PhaseSpaceState,
    outputs: &[f64],
    theta: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    reduction.params().check_time(state0.t)?;
    for &t in outputs {
        reduction.params().check_time(t)?;
    }
    let sol = match state0.frame {
        Frame::Original => solve(&OriginalFrameSystem { reduction }, state0.t, state0.to_array(), outputs, opts)?,
        Frame::Normal => solve(&NormalFrameSystem { reduction, theta }, state0.t, state0.to_array(), outputs, opts)?,
        other => return Err(Error::FrameMismatch(format!("cannot propagate in the {other:?} frame"))),
    };
    let samples =
        sol.times.iter().zip(&sol.states).map(|(&t, &y)| PhaseSpaceState::from_array(state0.frame, y, t)).collect();
    Ok(Trajectory { frame: state0.frame, samples, stats: sol.stats })
}

/// `n` evenly spaced outputs from `state0.t` (exclusive) to `t1` (inclusive).
pub fn propagate_to(
    reduction: &Reduction,
    state0: &PhaseSpaceState,
    t1: f64,
    n: usize,
    theta: f64,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    let n = n.max(1);
    let outputs: Vec<f64> =
        (1..=n).map(|i| if i == n { t1 } else { state0.t + (t1 - state0.t) * i as f64 / n as f64 }).collect();
    propagate(reduction, state0, &outputs, theta, opts)
}

/// Largest coordinate deviation between direct original-frame propagation
/// and propagation in the normal frame mapped back to the original frame.
pub fn consistency_check(
    reduction: &Reduction,
    state0: &PhaseSpaceState,
    outputs: &[f64],
    theta: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let start = reduction.map_state(state0, Frame::Original, theta)?;
    let direct = propagate(reduction, &start, outputs, theta, opts)?;
    let normal0 = reduction.map_state(&start, Frame::Normal, theta)?;
    let via_normal = propagate(reduction, &normal0, outputs, theta, opts)?;
    let mut worst: f64 = 0.0;
    for (a, b) in direct.samples.iter().zip(&via_normal.samples) {
        let back = reduction.map_state(b, Frame::Original, theta)?;
        worst = worst.max(a.max_abs_diff(&back));
    }
    Ok(worst)
}

/// Classical counterpart of the quadratic invariant for the normal frame,
/// with the unit-mass reading `Q̇ᵢ = Pᵢ`.
///
/// `rho = (ρ₁, ρ̇₁, ρ₂, ρ̇₂)`.
pub fn classical_invariant(state: &PhaseSpaceState, rho: [f64; 4]) -> Result<f64> {
    if state.frame != Frame::Normal {
        return Err(Error::FrameMismatch(format!("invariant needs the Normal frame, got {:?}", state.frame)));
    }
    let mut total = 0.0;
    for mode in 0..2 {
        let (r, rd) = (rho[2 * mode], rho[2 * mode + 1]);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::ZeroRho(r));
        }
        let (q, p) = (state.q[mode], state.p[mode]);
        total += 0.5 * ((q / r).powi(2) + (r * p - rd * q).powi(2));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{ParameterProfile as P, SystemParams};
    use std::f64::consts::PI;

    fn params(m: [f64; 2], c: [f64; 3], b: P, t1: f64) -> SystemParams {
        SystemParams {
            m1: P::constant(m[0]),
            m2: P::constant(m[1]),
            c1: P::constant(c[0]),
            c2: P::constant(c[1]),
            c3: P::constant(c[2]),
            b,
            e: 1.0,
            hbar: 1.0,
            interval: (0.0, t1),
        }
    }

    #[test]
    fn hamiltonian_examples() {
        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.0], P::constant(0.0), 1.0)).unwrap();
        let zero = PhaseSpaceState::new(Frame::Original, [0.0; 2], [0.0; 2], 0.0);
        assert_eq!(hamiltonian_value(&zero, &red, 0.0).unwrap(), 0.0);
        let s = PhaseSpaceState::new(Frame::Original, [1.0, 0.0], [0.0, 1.0], 0.0);
        assert_eq!(hamiltonian_value(&s, &red, 0.0).unwrap(), 1.0);
        let n = PhaseSpaceState::new(Frame::Normal, [1.0, 1.0], [0.0, 0.0], 0.0);
        assert_eq!(hamiltonian_value(&n, &red, 0.0).unwrap(), 1.0);
        let bad = PhaseSpaceState::new(Frame::Rotated, [1.0, 1.0], [0.0, 0.0], 0.0);
        assert!(matches!(hamiltonian_value(&bad, &red, 0.0), Err(Error::FrameMismatch(_))));
    }

    #[test]
    fn simple_oscillator_half_period() {
        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.0], P::constant(0.0), 4.0)).unwrap();
        let s = PhaseSpaceState::new(Frame::Original, [1.0, 0.0], [0.0, 0.0], 0.0);
        let traj = propagate(&red, &s, &[PI], 0.0, &SolverOptions::default()).unwrap();
        assert!((traj.samples[0].q[0] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn energy_conserved_for_constant_parameters() {
        let red = Reduction::new(params([1.3, 0.7], [1.0, 2.0, 0.6], P::constant(0.8), 60.0)).unwrap();
        let s = PhaseSpaceState::new(Frame::Original, [0.5, -0.3], [0.2, 0.9], 0.0);
        let h0 = hamiltonian_value(&s, &red, 0.0).unwrap();
        let traj = propagate_to(&red, &s, 60.0, 200, 0.0, &SolverOptions::default()).unwrap();
        for st in &traj.samples {
            let h = hamiltonian_value(st, &red, 0.0).unwrap();
            assert!(((h - h0) / h0).abs() < 1e-8);
        }
    }

    #[test]
    fn step_halving_oracle_for_modulated_field() {
        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.0], P::sinusoidal(0.1, 1.0, 0.0, 1.0), 10.0)).unwrap();
        let s = PhaseSpaceState::new(Frame::Original, [1.0, 0.2], [0.0, -0.4], 0.0);
        let adaptive = propagate_to(&red, &s, 10.0, 20, 0.0, &SolverOptions::default()).unwrap();
        let coarse = propagate_to(&red, &s, 10.0, 20, 0.0, &SolverOptions::fixed(2e-3)).unwrap();
        let fine = propagate_to(&red, &s, 10.0, 20, 0.0, &SolverOptions::fixed(1e-3)).unwrap();
        for ((a, c), f) in adaptive.samples.iter().zip(&coarse.samples).zip(&fine.samples) {
            assert!(c.max_abs_diff(f) < 1e-8);
            assert!(a.max_abs_diff(f) < 1e-8);
        }
    }

    #[test]
    fn time_reversal() {
        let red = Reduction::new(params([2.0, 1.0], [1.0, 1.5, 0.3], P::sinusoidal(0.3, 0.7, 0.0, 1.0), 15.0)).unwrap();
        let s = PhaseSpaceState::new(Frame::Original, [0.4, 1.0], [-0.3, 0.1], 0.0);
        let fwd = propagate(&red, &s, &[15.0], 0.0, &SolverOptions::default()).unwrap();
        let back = propagate(&red, &fwd.samples[0], &[0.0], 0.0, &SolverOptions::default()).unwrap();
        assert!(back.samples[0].max_abs_diff(&s) < 1e-8);
    }

    #[test]
    fn consistency_identity_and_scaling_only() {
        let opts = SolverOptions::default();
        let outputs: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.0], P::constant(0.0), 50.0)).unwrap();
        let s = PhaseSpaceState::new(Frame::Original, [1.0, -0.5], [0.3, 0.2], 0.0);
        assert!(consistency_check(&red, &s, &outputs, 0.0, &opts).unwrap() < 1e-10);

        let red = Reduction::new(params([2.0, 0.5], [1.0, 3.0, 0.0], P::constant(0.0), 50.0)).unwrap();
        let theta = red.require_decoupled(1e-8).unwrap();
        assert!(consistency_check(&red, &s, &outputs, theta, &opts).unwrap() < 1e-8);
    }

    #[test]
    fn consistency_with_coupling_and_with_field() {
        let opts = SolverOptions::default();
        let outputs: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let s = PhaseSpaceState::new(Frame::Original, [1.0, -0.5], [0.3, 0.2], 0.0);
        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.5], P::constant(0.0), 40.0)).unwrap();
        let theta = red.require_decoupled(1e-8).unwrap();
        assert!(consistency_check(&red, &s, &outputs, theta, &opts).unwrap() < 1e-6);

        let red = Reduction::new(params([1.0, 1.0], [1.0, 1.0, 0.0], P::sinusoidal(0.4, 0.8, 0.0, 1.0), 40.0)).unwrap();
        let theta = red.require_decoupled(1e-8).unwrap();
        assert!(consistency_check(&red, &s, &outputs, theta, &opts).unwrap() < 1e-6);
    }

    #[test]
    fn invariant_examples() {
        let n = PhaseSpaceState::new(Frame::Normal, [1.0, 0.0], [0.0, 0.0], 0.0);
        assert_eq!(classical_invariant(&n, [1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
        let z = PhaseSpaceState::new(Frame::Normal, [0.0; 2], [0.0; 2], 0.0);
        assert_eq!(classical_invariant(&z, [1.0, 0.3, 2.0, 0.1]).unwrap(), 0.0);
        assert!(matches!(classical_invariant(&n, [0.0, 0.0, 1.0, 0.0]), Err(Error::ZeroRho(_))));
        let o = PhaseSpaceState::new(Frame::Original, [1.0, 0.0], [0.0, 0.0], 0.0);
        assert!(classical_invariant(&o, [1.0, 0.0, 1.0, 0.0]).is_err());
    }
}
