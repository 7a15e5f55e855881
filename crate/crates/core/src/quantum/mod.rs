//! Invariant eigenfunctions, transformed-frame solutions and full wave
//! functions, with grid quadrature and residual diagnostics.
//!
//! Coordinates: `(X₁, X₂)` are original-frame positions; `(Q₁, Q₂)` are the
//! decoupled coordinates in which the Hamiltonian is two unit-mass oscillators.

mod chain;
mod field;
mod residual;
mod system;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};

pub use chain::{phase_coefficients, psi_closed_form, psi_compositional, ChainFrame, ClosedForm, PhaseCoefficients};
pub use field::{grid_overlap, FieldFrame, Grid2, WaveField, MIN_GRID_POINTS};
pub use residual::{invariant_residual, schrodinger_residual, QuadraticHamiltonian, RESIDUAL_MARGIN};
pub use system::{Construction, DiscrepancyReport, QuantumSystem};

/// Default cap on each quantum number.
pub const MAX_QUANTUM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantumNumbers {
    pub n1: usize,
    pub n2: usize,
}

impl QuantumNumbers {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        Self::with_max(n1, n2, MAX_QUANTUM)
    }

    pub fn with_max(n1: usize, n2: usize, max: usize) -> Result<Self> {
        for n in [n1, n2] {
            if n > max {
                return Err(Error::Overflow { n, max });
            }
        }
        Ok(QuantumNumbers { n1, n2 })
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }

    /// All pairs with `n₁ + n₂ ≤ total`, ordered by total then `n₁` descending.
    pub fn up_to_total(total: usize) -> Vec<QuantumNumbers> {
        let mut out = Vec::new();
        for s in 0..=total.min(MAX_QUANTUM) {
            for n1 in (0..=s).rev() {
                out.push(QuantumNumbers { n1, n2: s - n1 });
            }
        }
        out
    }
}

/// Physicists' Hermite polynomial `Hₙ(x)`.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    if n > MAX_QUANTUM {
        return Err(Error::Overflow { n, max: MAX_QUANTUM });
    }
    Ok(hermite_unchecked(n, x))
}

fn hermite_unchecked(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ħ(n₁ + n₂ + 1)`.
pub fn eigenvalue(n: QuantumNumbers, hbar: f64) -> f64 {
    hbar * (n.total() as f64 + 1.0)
}

/// Both Ermakov modes sampled at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSnapshot {
    pub t: f64,
    pub rho: [f64; 2],
    pub rho_dot: [f64; 2],
    /// `∫_{t₀}^{t} dt'/ρᵢ²`.
    pub phase_integral: [f64; 2],
}

impl ModeSnapshot {
    pub fn from_modes(modes: [&ErmakovSolution; 2], t: f64) -> Result<Self> {
        let a = modes[0].at(t)?;
        let b = modes[1].at(t)?;
        Ok(ModeSnapshot {
            t,
            rho: [a.rho, b.rho],
            rho_dot: [a.rho_dot, b.rho_dot],
            phase_integral: [a.phase_integral, b.phase_integral],
        })
    }

    /// `ρ = 1`, `ρ̇ = 0` in both modes.
    pub fn unit(t: f64) -> Self {
        ModeSnapshot { t, rho: [1.0, 1.0], rho_dot: [0.0, 0.0], phase_integral: [0.0, 0.0] }
    }

    fn check(&self) -> Result<()> {
        for r in self.rho {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::ZeroRho(r));
            }
        }
        Ok(())
    }
}

/// Normalisation constant `[1/(πħ n₁! n₂! 2^{n₁+n₂} ρ₁ρ₂)]^{1/2}`, in log space.
fn ln_prefactor(n: QuantumNumbers, rho: [f64; 2], hbar: f64) -> f64 {
    -0.5 * ((std::f64::consts::PI * hbar).ln()
        + ln_factorial(n.n1)
        + ln_factorial(n.n2)
        + n.total() as f64 * std::f64::consts::LN_2
        + rho[0].ln()
        + rho[1].ln())
}

/// Eigenfunction of the invariant at decoupled coordinates `(q1, q2)`.
pub fn xi(n: QuantumNumbers, q1: f64, q2: f64, s: &ModeSnapshot, hbar: f64) -> Result<Complex64> {
    s.check()?;
    let sh = hbar.sqrt();
    let h = hermite(n.n1, q1 / (sh * s.rho[0]))? * hermite(n.n2, q2 / (sh * s.rho[1]))?;
    let exponent = gaussian_exponent(s, 0, hbar) * q1 * q1 + gaussian_exponent(s, 1, hbar) * q2 * q2;
    Ok((exponent + ln_prefactor(n, s.rho, hbar)).exp() * h)
}

/// `(i/2ħ)(ρ̇/ρ + i/ρ²)` for one mode.
fn gaussian_exponent(s: &ModeSnapshot, mode: usize, hbar: f64) -> Complex64 {
    let r = s.rho[mode];
    Complex64::i() / (2.0 * hbar) * Complex64::new(s.rho_dot[mode] / r, 1.0 / (r * r))
}

/// `α = −(n₁+½)∫dt/ρ₁² − (n₂+½)∫dt/ρ₂²`, zero at `t₀`.
pub fn alpha_phase(n: QuantumNumbers, s: &ModeSnapshot) -> f64 {
    -(n.n1 as f64 + 0.5) * s.phase_integral[0] - (n.n2 as f64 + 0.5) * s.phase_integral[1]
}

/// Transformed-frame solution `e^{iα} ξ`.
pub fn chi(n: QuantumNumbers, q1: f64, q2: f64, s: &ModeSnapshot, hbar: f64) -> Result<Complex64> {
    Ok(Complex64::from_polar(1.0, alpha_phase(n, s)) * xi(n, q1, q2, s, hbar)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 17.5).unwrap(), 1.0);
        assert_eq!(hermite(1, 3.0).unwrap(), 6.0);
        assert_eq!(hermite(3, 2.0).unwrap(), 40.0);
        assert!(matches!(hermite(13, 0.0), Err(Error::Overflow { n: 13, max: 12 })));
        assert!(QuantumNumbers::new(3, 13).is_err());
        // H₁₂(x) leading terms at x = 0: 12!/6! · (−1)⁶.
        assert_eq!(hermite(12, 0.0).unwrap(), 665280.0);
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        for &x in &[-2.3, -0.4, 0.0, 0.9, 3.1] {
            let x: f64 = x;
            assert_relative_eq!(hermite(2, x).unwrap(), 4.0 * x * x - 2.0, epsilon = 1e-12);
            assert_relative_eq!(hermite(4, x).unwrap(), 16.0 * x.powi(4) - 48.0 * x * x + 12.0, epsilon = 1e-11);
            assert_relative_eq!(
                hermite(5, x).unwrap(),
                32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x,
                epsilon = 1e-10,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(eigenvalue(QuantumNumbers::new(0, 0).unwrap(), 1.0), 1.0);
        assert_eq!(eigenvalue(QuantumNumbers::new(2, 3).unwrap(), 1.0), 6.0);
        assert_eq!(eigenvalue(QuantumNumbers::new(0, 0).unwrap(), 2.0), 2.0);
    }

    #[test]
    fn xi_examples() {
        let s = ModeSnapshot::unit(0.0);
        let n = QuantumNumbers::new(0, 0).unwrap();
        let v = xi(n, 0.0, 0.0, &s, 1.0).unwrap();
        assert_relative_eq!(v.re, 1.0 / PI.sqrt(), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
        let v = xi(n, 1.0, 0.0, &s, 1.0).unwrap();
        assert_relative_eq!(v.re, (-0.5f64).exp() / PI.sqrt(), epsilon = 1e-15);
        let bad = ModeSnapshot { rho: [0.0, 1.0], ..s };
        assert!(matches!(xi(n, 0.0, 0.0, &bad, 1.0), Err(Error::ZeroRho(_))));
    }

    #[test]
    fn log_prefactor_survives_large_quantum_numbers() {
        let s = ModeSnapshot::unit(0.0);
        let n = QuantumNumbers::new(12, 12).unwrap();
        let v = xi(n, 0.3, -0.2, &s, 1.0).unwrap();
        assert!(v.norm().is_finite() && v.norm() > 0.0);
        // Direct evaluation for a small case.
        let n = QuantumNumbers::new(2, 1).unwrap();
        let direct = (1.0 / (PI * 2.0 * 8.0)).sqrt()
            * hermite(2, 0.3).unwrap()
            * hermite(1, -0.2).unwrap()
            * (-(0.09 + 0.04) / 2.0f64).exp();
        assert_relative_eq!(xi(n, 0.3, -0.2, &s, 1.0).unwrap().re, direct, epsilon = 1e-15);
    }

    #[test]
    fn alpha_examples() {
        let n = QuantumNumbers::new(0, 0).unwrap();
        let s = ModeSnapshot { phase_integral: [2.5, 2.5], ..ModeSnapshot::unit(2.5) };
        assert_relative_eq!(alpha_phase(n, &s), -2.5, epsilon = 1e-15);
        assert_eq!(alpha_phase(QuantumNumbers::new(3, 1).unwrap(), &ModeSnapshot::unit(0.0)), 0.0);
    }

    #[test]
    fn chi_at_start_is_xi() {
        let s = ModeSnapshot { rho: [0.8, 1.3], rho_dot: [0.2, -0.1], ..ModeSnapshot::unit(0.0) };
        let n = QuantumNumbers::new(2, 1).unwrap();
        assert_eq!(chi(n, 0.4, -0.7, &s, 1.0).unwrap(), xi(n, 0.4, -0.7, &s, 1.0).unwrap());
    }

    proptest! {
        #[test]
        fn chi_has_modulus_of_xi(
            q1 in -4.0f64..4.0, q2 in -4.0f64..4.0,
            r1 in 0.3f64..3.0, r2 in 0.3f64..3.0,
            rd1 in -2.0f64..2.0, rd2 in -2.0f64..2.0,
            p1 in -50.0f64..50.0, p2 in -50.0f64..50.0,
            n1 in 0usize..=12, n2 in 0usize..=12,
        ) {
            let s = ModeSnapshot { t: 1.0, rho: [r1, r2], rho_dot: [rd1, rd2], phase_integral: [p1, p2] };
            let n = QuantumNumbers::new(n1, n2).unwrap();
            let a = chi(n, q1, q2, &s, 0.7).unwrap().norm();
            let b = xi(n, q1, q2, &s, 0.7).unwrap().norm();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
        }
    }
}
