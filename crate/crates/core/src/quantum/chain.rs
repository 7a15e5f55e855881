use num_complex::Complex64;
use serde::Serialize;

use super::{alpha_phase, chi, hermite, ln_prefactor, ModeSnapshot, QuantumNumbers};
use crate::error::Result;
use crate::reduction::{mass_jet, Reduction};

/// Time-dependent parameters of the map from original to decoupled coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainFrame {
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    /// `√(m₁m₂)` and its time derivative.
    pub m: f64,
    pub m_dot: f64,
    pub phi: f64,
    pub theta: f64,
}

impl ChainFrame {
    pub fn new(reduction: &Reduction, t: f64, theta: f64) -> Result<Self> {
        let p = reduction.params();
        let [m, m_dot, _] = mass_jet(p, t)?;
        Ok(ChainFrame { t, m1: p.m1.eval(t)?, m2: p.m2.eval(t)?, m, m_dot, phi: reduction.phi(t)?, theta })
    }

    /// Unit masses, no rotation.
    pub fn identity(t: f64) -> Self {
        ChainFrame { t, m1: 1.0, m2: 1.0, m: 1.0, m_dot: 0.0, phi: 0.0, theta: 0.0 }
    }

    /// Total rotation `φ + θ/2`.
    pub fn angle(&self) -> f64 {
        self.phi + 0.5 * self.theta
    }

    /// Decoupled coordinates of an original-frame point.
    pub fn to_transformed(&self, x1: f64, x2: f64) -> (f64, f64) {
        let (s, c) = self.angle().sin_cos();
        let (a, b) = (self.m1.sqrt() * x1, self.m2.sqrt() * x2);
        (c * a - s * b, s * a + c * b)
    }
}

// Coordinates seen through R(a) = [[cos a, sin a], [−sin a, cos a]]: returns Rᵀ y.
fn rotate_back(a: f64, y1: f64, y2: f64) -> (f64, f64) {
    let (s, c) = a.sin_cos();
    (c * y1 - s * y2, s * y1 + c * y2)
}

/// `Ψ` at an original-frame point, by applying the unitary chain to `χ`:
/// reciprocal dilations by `(m₁/m₂)^{±1/4}`, rotation by `φ`, isotropic
/// dilation by `√m` (amplitude `m^{1/2}`), rotation by `θ/2`, then the chirp
/// `exp(−i(ṁ/m)|Q|²/4ħ)` in the decoupled coordinates.
pub fn psi_compositional(
    n: QuantumNumbers,
    x1: f64,
    x2: f64,
    frame: &ChainFrame,
    s: &ModeSnapshot,
    hbar: f64,
) -> Result<Complex64> {
    // Û₁: amplitudes (m₁/m₂)^{1/8} and (m₂/m₁)^{1/8} cancel.
    let r = (frame.m1 / frame.m2).powf(0.25);
    let (y1, y2) = (r * x1, x2 / r);
    // Û₂
    let (y1, y2) = rotate_back(frame.phi, y1, y2);
    // V̂₁
    let sm = frame.m.sqrt();
    let (y1, y2) = (sm * y1, sm * y2);
    // V̂₂
    let (q1, q2) = rotate_back(0.5 * frame.theta, y1, y2);
    // V̂₃
    let chirp = Complex64::from_polar(1.0, -(frame.m_dot / frame.m) * (q1 * q1 + q2 * q2) / (4.0 * hbar));
    Ok(sm * chirp * chi(n, q1, q2, s, hbar)?)
}

/// Which closed-form expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedForm {
    /// The published expression: mass term `½ d√(m₁m₂)/dt` in `γ`, `β`, sine on
    /// the diagonal quadratic terms and cosine on the mixed term.
    Verbatim,
    /// The expansion of the unitary chain: mass term `½ṁ/m`, cosine on the
    /// diagonal and sine on the mixed term.
    Consistent,
}

/// Gaussian coefficients `γ`, `β` and the dynamical phase `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCoefficients {
    pub gamma: Complex64,
    pub beta: Complex64,
    pub alpha: f64,
}

pub fn phase_coefficients(
    n: QuantumNumbers,
    frame: &ChainFrame,
    s: &ModeSnapshot,
    form: ClosedForm,
) -> PhaseCoefficients {
    let mass_term = match form {
        ClosedForm::Verbatim => 0.5 * frame.m_dot,
        ClosedForm::Consistent => 0.5 * frame.m_dot / frame.m,
    };
    let coeff = |k: usize| Complex64::new(s.rho_dot[k] / s.rho[k] - mass_term, 1.0 / (s.rho[k] * s.rho[k]));
    PhaseCoefficients { gamma: coeff(0), beta: coeff(1), alpha: alpha_phase(n, s) }
}

/// `Ψ` at an original-frame point from the closed-form expression.
pub fn psi_closed_form(
    n: QuantumNumbers,
    x1: f64,
    x2: f64,
    frame: &ChainFrame,
    s: &ModeSnapshot,
    hbar: f64,
    form: ClosedForm,
) -> Result<Complex64> {
    s.check()?;
    let PhaseCoefficients { gamma, beta, alpha } = phase_coefficients(n, frame, s, form);
    let (q1, q2) = frame.to_transformed(x1, x2);
    let sh = hbar.sqrt();
    let herm = hermite(n.n1, q1 / (sh * s.rho[0]))? * hermite(n.n2, q2 / (sh * s.rho[1]))?;

    let two_a = frame.theta + 2.0 * frame.phi;
    let mean = 0.5 * (gamma + beta);
    let (diag, mixed) = match form {
        ClosedForm::Verbatim => (0.5 * (beta - gamma) * two_a.sin(), (beta - gamma) * two_a.cos()),
        ClosedForm::Consistent => (0.5 * (gamma - beta) * two_a.cos(), (beta - gamma) * two_a.sin()),
    };
    let i2h = Complex64::i() / (2.0 * hbar);
    let exponent = i2h
        * (frame.m1 * (mean + diag) * x1 * x1
            + frame.m2 * (mean - diag) * x2 * x2
            + (frame.m1 * frame.m2).sqrt() * mixed * x1 * x2)
        + Complex64::new(ln_prefactor(n, s.rho, hbar) + 0.5 * frame.m.ln(), alpha);
    Ok(exponent.exp() * herm)
}
