//! Derived coefficients of the transformation chain and the classical
//! phase-space maps between its four frames.
//!
//! ```text
//! Original (X, P) --scale by (m1/m2)^(±1/4)--> Scaled (x, p)
//!                 --rotate by φ(t)-----------> Rotated (q, p)
//!                 --rotate by θ/2, remove m--> Normal (Q, P)
//! ```
//!
//! In the normal frame the Hamiltonian is `½(P₁²+P₂²) + ½Ω₁²Q₁² + ½Ω₂²Q₂² + δQ₁Q₂`,
//! and `δ` vanishes when `θ` is the decoupling angle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::{validate_params, SystemParams};
use crate::quadrature::{integrate, CumulativeIntegral, QuadOptions};

/// Number of uniformly spaced samples used for interval-wide checks.
pub const CHECK_SAMPLES: usize = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Frame {
    Original,
    Scaled,
    Rotated,
    Normal,
}

impl Frame {
    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Frame {
        [Frame::Original, Frame::Scaled, Frame::Rotated, Frame::Normal][i]
    }
}

/// A point in phase space at time `t`, tagged with its frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpaceState {
    pub frame: Frame,
    pub q: [f64; 2],
    pub p: [f64; 2],
    pub t: f64,
}

impl PhaseSpaceState {
    pub fn new(frame: Frame, q: [f64; 2], p: [f64; 2], t: f64) -> Self {
        PhaseSpaceState { frame, q, p, t }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.q[0], self.q[1], self.p[0], self.p[1]]
    }

    pub fn from_array(frame: Frame, y: [f64; 4], t: f64) -> Self {
        PhaseSpaceState { frame, q: [y[0], y[1]], p: [y[2], y[3]], t }
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &PhaseSpaceState) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cyclotron {
    pub omega1c: f64,
    pub omega2c: f64,
    pub omega_c: f64,
    /// Geometric-mean mass `√(m₁m₂)`.
    pub m: f64,
}

pub fn cyclotron(params: &SystemParams, t: f64) -> Result<Cyclotron> {
    let m1 = params.m1.eval(t)?;
    let m2 = params.m2.eval(t)?;
    let eb = params.e * params.b.eval(t)?;
    let m = (m1 * m2).sqrt();
    Ok(Cyclotron { omega1c: eb / m1, omega2c: eb / m2, omega_c: eb / m, m })
}

/// `(c₁, c₂, c₃)`: the stiffnesses after absorbing the diamagnetic terms.
pub fn stiffness(params: &SystemParams, t: f64) -> Result<[f64; 3]> {
    let cy = cyclotron(params, t)?;
    let m1 = params.m1.eval(t)?;
    let m2 = params.m2.eval(t)?;
    Ok([
        params.c1.eval(t)? + m2 * cy.omega2c * cy.omega2c / 4.0,
        params.c2.eval(t)? + m1 * cy.omega1c * cy.omega1c / 4.0,
        params.c3.eval(t)?,
    ])
}

/// `(d₁, d₂, d₃)`: stiffnesses in the equal-mass (scaled) frame.
pub fn scaled_stiffness(params: &SystemParams, t: f64) -> Result<[f64; 3]> {
    let [c1, c2, c3] = stiffness(params, t)?;
    let ratio = (params.m2.eval(t)? / params.m1.eval(t)?).sqrt();
    Ok([c1 * ratio, c2 / ratio, c3])
}

/// `φ(t) = −½∫_{t₀}^{t} ω_c`, by adaptive quadrature to absolute tolerance 1e-10.
pub fn rotation_phase(params: &SystemParams, t: f64) -> Result<f64> {
    params.check_time(t)?;
    let w = integrate(|s| Ok(cyclotron(params, s)?.omega_c), params.t0(), t, QuadOptions::default())?;
    Ok(-0.5 * w)
}

/// Potential coefficients after rotating the scaled frame by `phi`.
pub fn rotate_stiffness(d: [f64; 3], phi: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    let [d1, d2, d3] = d;
    [
        d1 * c * c + d2 * s * s - d3 * s * c,
        d2 * c * c + d1 * s * s + d3 * s * c,
        2.0 * (d1 - d2) * s * c + d3 * (c * c - s * s),
    ]
}

/// `m`, `ṁ`, `m̈` for the geometric-mean mass.
pub fn mass_jet(params: &SystemParams, t: f64) -> Result<[f64; 3]> {
    let [a, da, dda] = params.m1.jet(t)?;
    let [b, db, ddb] = params.m2.jet(t)?;
    let m = (a * b).sqrt();
    let prod1 = da * b + a * db;
    let prod2 = dda * b + 2.0 * da * db + a * ddb;
    let m_dot = prod1 / (2.0 * m);
    let m_ddot = (prod2 - 2.0 * m_dot * m_dot) / (2.0 * m);
    Ok([m, m_dot, m_ddot])
}

/// `ω̃ᵢ² = λᵢ/m + ¼(ṁ²/m² − 2m̈/m)`; may be negative.
pub fn effective_from_rotated(lambda: [f64; 3], mass: [f64; 3]) -> (f64, f64) {
    let [m, md, mdd] = mass;
    let shift = 0.25 * (md * md / (m * m) - 2.0 * mdd / m);
    (lambda[0] / m + shift, lambda[1] / m + shift)
}

/// Angle that removes the `Q₁Q₂` term, in `(−π, π]`.
///
/// Returns `None` when both `λ₃` and `m(ω̃₂²−ω̃₁²)` vanish relative to the
/// coefficient scale, where every angle decouples.
pub fn decoupling_angle_at(lambda3: f64, m: f64, w1_sq: f64, w2_sq: f64) -> Option<f64> {
    let y = lambda3;
    let x = m * (w2_sq - w1_sq);
    let scale = lambda3.abs().max(m * w1_sq.abs()).max(m * w2_sq.abs()).max(f64::MIN_POSITIVE);
    if y.abs() <= 1e-13 * scale && x.abs() <= 1e-13 * scale {
        None
    } else {
        Some(y.atan2(x))
    }
}

/// `(Ω₁², Ω₂², δ)` for a rotation of the rotated frame by `θ/2`.
pub fn normal_from_effective(w1_sq: f64, w2_sq: f64, lambda3: f64, m: f64, theta: f64) -> (f64, f64, f64) {
    let (sh, ch) = (0.5 * theta).sin_cos();
    let (st, ct) = theta.sin_cos();
    let coupling = lambda3 / (2.0 * m);
    (
        w1_sq * ch * ch + w2_sq * sh * sh - coupling * st,
        w1_sq * sh * sh + w2_sq * ch * ch + coupling * st,
        0.5 * (w1_sq - w2_sq) * st + coupling * ct,
    )
}

/// Result of the decoupling-angle search over the whole interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecouplingAngle {
    pub theta: f64,
    /// `sup_t |θ(t) − θ|`, measured modulo π.
    pub max_deviation: f64,
    pub valid: bool,
}

/// Time-evaluated coefficients of the chain for a given `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedCoefficients {
    pub t: f64,
    pub omega1c: f64,
    pub omega2c: f64,
    pub omega_c: f64,
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub phi: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub omega_tilde1_sq: f64,
    pub omega_tilde2_sq: f64,
    pub theta: f64,
    pub omega1_normal_sq: f64,
    pub omega2_normal_sq: f64,
    pub delta: f64,
}

impl ReducedCoefficients {
    /// `(Ω₁, Ω₂)`; NaN for a non-positive square.
    pub fn normal_frequencies(&self) -> (f64, f64) {
        let root = |x: f64| if x > 0.0 { x.sqrt() } else { f64::NAN };
        (root(self.omega1_normal_sq), root(self.omega2_normal_sq))
    }

    pub const CSV_HEADER: &'static str = "t,omega1c,omega2c,omega_c,m,c1,c2,c3,d1,d2,d3,phi,lambda1,lambda2,lambda3,\
omega_tilde1_sq,omega_tilde2_sq,theta,Omega1,Omega2,delta";

    pub fn csv_values(&self) -> [f64; 21] {
        let (o1, o2) = self.normal_frequencies();
        [
            self.t,
            self.omega1c,
            self.omega2c,
            self.omega_c,
            self.m,
            self.c1,
            self.c2,
            self.c3,
            self.d1,
            self.d2,
            self.d3,
            self.phi,
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.omega_tilde1_sq,
            self.omega_tilde2_sq,
            self.theta,
            o1,
            o2,
            self.delta,
        ]
    }
}

/// A validated scenario with the rotation phase cached on a node table.
#[derive(Debug, Clone)]
pub struct Reduction {
    params: SystemParams,
    phase: CumulativeIntegral,
}

impl Reduction {
    pub fn new(params: SystemParams) -> Result<Self> {
        validate_params(&params).into_result()?;
        let span = params.t1() - params.t0();
        let cells = ((span / 0.05).ceil() as usize).clamp(64, 200_000);
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 0.0, max_panels: 4000 };
        let phase =
            CumulativeIntegral::build(|s| Ok(cyclotron(&params, s)?.omega_c), params.t0(), params.t1(), cells, opts)?;
        Ok(Reduction { params, phase })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn hbar(&self) -> f64 {
        self.params.hbar
    }

    /// Cached `φ(t)`; agrees with [`rotation_phase`] to quadrature tolerance.
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.params.check_time(t)?;
        Ok(-0.5 * self.phase.at(|s| Ok(cyclotron(&self.params, s)?.omega_c), t)?)
    }

    pub fn rotated_coefficients(&self, t: f64) -> Result<[f64; 3]> {
        Ok(rotate_stiffness(scaled_stiffness(&self.params, t)?, self.phi(t)?))
    }

    pub fn effective_frequencies(&self, t: f64) -> Result<(f64, f64)> {
        Ok(effective_from_rotated(self.rotated_coefficients(t)?, mass_jet(&self.params, t)?))
    }

    fn theta_at(&self, t: f64) -> Result<Option<f64>> {
        let lambda = self.rotated_coefficients(t)?;
        let mass = mass_jet(&self.params, t)?;
        let (w1, w2) = effective_from_rotated(lambda, mass);
        Ok(decoupling_angle_at(lambda[2], mass[0], w1, w2))
    }

    /// Decoupling angle at `t₀` and its drift over [`CHECK_SAMPLES`] points.
    pub fn decoupling_angle(&self, tol: f64) -> Result<DecouplingAngle> {
        let times = self.params.sample_times(CHECK_SAMPLES);
        let theta = self.theta_at(times[0])?.unwrap_or(0.0);
        let mut max_deviation: f64 = 0.0;
        for &t in &times {
            if let Some(th) = self.theta_at(t)? {
                let d = (th - theta).rem_euclid(std::f64::consts::PI);
                max_deviation = max_deviation.max(d.min(std::f64::consts::PI - d));
            }
        }
        Ok(DecouplingAngle { theta, max_deviation, valid: max_deviation < tol })
    }

    /// `sup_t |(m₁/m₂)(t) / (m₁/m₂)(t₀) − 1|`.
    pub fn mass_ratio_drift(&self) -> Result<f64> {
        let ratio = |t: f64| -> Result<f64> { Ok(self.params.m1.eval(t)? / self.params.m2.eval(t)?) };
        let r0 = ratio(self.params.t0())?;
        let mut drift: f64 = 0.0;
        for t in self.params.sample_times(CHECK_SAMPLES) {
            drift = drift.max((ratio(t)? / r0 - 1.0).abs());
        }
        Ok(drift)
    }

    /// The decoupling angle, or an error when the scenario lies outside the
    /// class where the normal-frame Hamiltonian is exact (drifting θ or
    /// drifting mass ratio).
    pub fn require_decoupled(&self, tol: f64) -> Result<f64> {
        let angle = self.decoupling_angle(tol)?;
        if !angle.valid {
            return Err(Error::InvalidScenario {
                check: "decoupling_angle",
                message: format!(
                    "the angle that cancels the Q1*Q2 coupling drifts by {:.3e} rad over the interval \
                     (tolerance {:.1e}); no constant rotation decouples this scenario",
                    angle.max_deviation, tol
                ),
            });
        }
        let drift = self.mass_ratio_drift()?;
        if drift >= tol {
            return Err(Error::InvalidScenario {
                check: "mass_ratio",
                message: format!(
                    "m1/m2 drifts by a relative {drift:.3e} (tolerance {tol:.1e}); the scaling map adds \
                     terms the reduced Hamiltonian does not carry"
                ),
            });
        }
        Ok(angle.theta)
    }

    /// `(Ω₁², Ω₂², δ)` at `t`, without sign checks.
    pub fn normal_sq(&self, t: f64, theta: f64) -> Result<(f64, f64, f64)> {
        let lambda = self.rotated_coefficients(t)?;
        let mass = mass_jet(&self.params, t)?;
        let (w1, w2) = effective_from_rotated(lambda, mass);
        Ok(normal_from_effective(w1, w2, lambda[2], mass[0], theta))
    }

    /// `(Ω₁, Ω₂, δ)`; errors if either squared frequency is not positive.
    pub fn normal_frequencies(&self, t: f64, theta: f64) -> Result<(f64, f64, f64)> {
        let (a, b, delta) = self.normal_sq(t, theta)?;
        for (mode, v) in [(1, a), (2, b)] {
            if !(v > 0.0) {
                return Err(Error::InvalidFrequency { mode, t, value: v });
            }
        }
        Ok((a.sqrt(), b.sqrt(), delta))
    }

    /// Checks `Ω₁², Ω₂² > 0` on [`CHECK_SAMPLES`] points.
    pub fn require_positive_frequencies(&self, theta: f64) -> Result<()> {
        for t in self.params.sample_times(CHECK_SAMPLES) {
            self.normal_frequencies(t, theta)?;
        }
        Ok(())
    }

    pub fn coefficients(&self, t: f64, theta: f64) -> Result<ReducedCoefficients> {
        let cy = cyclotron(&self.params, t)?;
        let c = stiffness(&self.params, t)?;
        let d = scaled_stiffness(&self.params, t)?;
        let phi = self.phi(t)?;
        let lambda = rotate_stiffness(d, phi);
        let mass = mass_jet(&self.params, t)?;
        let (w1, w2) = effective_from_rotated(lambda, mass);
        let (o1, o2, delta) = normal_from_effective(w1, w2, lambda[2], mass[0], theta);
        Ok(ReducedCoefficients {
            t,
            omega1c: cy.omega1c,
            omega2c: cy.omega2c,
            omega_c: cy.omega_c,
            m: cy.m,
            c1: c[0],
            c2: c[1],
            c3: c[2],
            d1: d[0],
            d2: d[1],
            d3: d[2],
            phi,
            lambda1: lambda[0],
            lambda2: lambda[1],
            lambda3: lambda[2],
            omega_tilde1_sq: w1,
            omega_tilde2_sq: w2,
            theta,
            omega1_normal_sq: o1,
            omega2_normal_sq: o2,
            delta,
        })
    }

    /// Apply one stage of the chain, forward (`from` → `from + 1`) or back.
    fn stage(&self, y: [f64; 4], t: f64, from: Frame, forward: bool, theta: f64) -> Result<[f64; 4]> {
        let [a, b, pa, pb] = y;
        match (from, forward) {
            (Frame::Original, true) | (Frame::Scaled, false) => {
                let r = (self.params.m1.eval(t)? / self.params.m2.eval(t)?).powf(0.25);
                Ok(if forward { [r * a, b / r, pa / r, r * pb] } else { [a / r, r * b, r * pa, pb / r] })
            }
            (Frame::Scaled, true) | (Frame::Rotated, false) => {
                let (s, c) = self.phi(t)?.sin_cos();
                Ok(if forward {
                    [c * a - s * b, s * a + c * b, c * pa - s * pb, s * pa + c * pb]
                } else {
                    [c * a + s * b, -s * a + c * b, c * pa + s * pb, -s * pa + c * pb]
                })
            }
            (Frame::Rotated, true) | (Frame::Normal, false) => {
                let [m, m_dot, _] = mass_jet(&self.params, t)?;
                let sqm = m.sqrt();
                let (s, c) = (0.5 * theta).sin_cos();
                if forward {
                    let (qa, qb) = (a, b);
                    let (ka, kb) = (pa + 0.5 * m_dot * qa, pb + 0.5 * m_dot * qb);
                    Ok([
                        sqm * (c * qa - s * qb),
                        sqm * (s * qa + c * qb),
                        (c * ka - s * kb) / sqm,
                        (s * ka + c * kb) / sqm,
                    ])
                } else {
                    let qa = (c * a + s * b) / sqm;
                    let qb = (-s * a + c * b) / sqm;
                    Ok([
                        qa,
                        qb,
                        sqm * (c * pa + s * pb) - 0.5 * m_dot * qa,
                        sqm * (-s * pa + c * pb) - 0.5 * m_dot * qb,
                    ])
                }
            }
            _ => Err(Error::FrameMismatch(format!("no stage leaves {from:?} in that direction"))),
        }
    }

    /// Carry `state` to `target` through the intermediate stages, at fixed `t`.
    pub fn map_state(&self, state: &PhaseSpaceState, target: Frame, theta: f64) -> Result<PhaseSpaceState> {
        self.params.check_time(state.t)?;
        let mut y = state.to_array();
        let mut frame = state.frame.index();
        let goal = target.index();
        while frame != goal {
            let forward = goal > frame;
            y = self.stage(y, state.t, Frame::from_index(frame), forward, theta)?;
            frame = if forward { frame + 1 } else { frame - 1 };
        }
        Ok(PhaseSpaceState::from_array(target, y, state.t))
    }
}

/// Standard symplectic form for the ordering `(q₁, q₂, p₁, p₂)`.
pub const SYMPLECTIC_FORM: [[f64; 4]; 4] =
    [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [-1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]];

/// Central finite-difference Jacobian of `f` at `y`.
pub fn fd_jacobian<F>(f: F, y: [f64; 4], h: f64) -> Result<[[f64; 4]; 4]>
where
    F: Fn([f64; 4]) -> Result<[f64; 4]>,
{
    let mut jac = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut plus = y;
        let mut minus = y;
        plus[col] += h;
        minus[col] -= h;
        let (fp, fm) = (f(plus)?, f(minus)?);
        for row in 0..4 {
            jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// `‖JᵀSJ − S‖∞` (maximum absolute row sum).
pub fn symplectic_defect(jac: &[[f64; 4]; 4]) -> f64 {
    let s = SYMPLECTIC_FORM;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let mut row = 0.0;
        for j in 0..4 {
            let mut v = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    v += jac[k][i] * s[k][l] * jac[l][j];
                }
            }
            row += (v - s[i][j]).abs();
        }
        worst = worst.max(row);
    }
    worst
}

/// Symplectic defect of the single stage leaving `from` (forward) at `state`.
pub fn stage_symplectic_defect(reduction: &Reduction, from: Frame, state: [f64; 4], t: f64, theta: f64) -> Result<f64> {
    let to = match from {
        Frame::Original => Frame::Scaled,
        Frame::Scaled => Frame::Rotated,
        Frame::Rotated => Frame::Normal,
        Frame::Normal => return Err(Error::FrameMismatch("the normal frame is the end of the chain".into())),
    };
    let jac = fd_jacobian(
        |y| Ok(reduction.map_state(&PhaseSpaceState::from_array(from, y, t), to, theta)?.to_array()),
        state,
        1e-5,
    )?;
    Ok(symplectic_defect(&jac))
}
