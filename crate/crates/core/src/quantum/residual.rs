use num_complex::Complex64;
use serde::Serialize;

use super::{eigenvalue, FieldFrame, ModeSnapshot, QuantumNumbers, WaveField};
use crate::error::{Error, Result};
use crate::parallel::{map_range, Exec};
use crate::reduction::{cyclotron, stiffness, Reduction};

/// Grid cells excluded at each edge, the half-width of the 4th-order stencils.
pub const RESIDUAL_MARGIN: usize = 2;

/// `H = k₁P₁² + k₂P₂² + v₁X₁² + v₂X₂² + v₃X₁X₂ + g₁X₁P₂ + g₂X₂P₁` with `P = −iħ∂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticHamiltonian {
    pub kinetic: [f64; 2],
    pub potential: [f64; 3],
    pub cross: [f64; 2],
}

impl QuadraticHamiltonian {
    /// Two unit-mass oscillators.
    pub fn decoupled(omega1_sq: f64, omega2_sq: f64) -> Self {
        QuadraticHamiltonian {
            kinetic: [0.5, 0.5],
            potential: [0.5 * omega1_sq, 0.5 * omega2_sq, 0.0],
            cross: [0.0; 2],
        }
    }

    /// Decoupled-frame Hamiltonian of a reduction at `t`.
    pub fn normal(reduction: &Reduction, t: f64, theta: f64) -> Result<Self> {
        let (w1, w2, _) = reduction.normal_sq(t, theta)?;
        Ok(Self::decoupled(w1, w2))
    }

    /// Original-frame Hamiltonian with the magnetic `P₂X₁ − P₁X₂` terms.
    pub fn original(reduction: &Reduction, t: f64) -> Result<Self> {
        let p = reduction.params();
        let [c1, c2, c3] = stiffness(p, t)?;
        let cy = cyclotron(p, t)?;
        Ok(QuadraticHamiltonian {
            kinetic: [0.5 / p.m1.eval(t)?, 0.5 / p.m2.eval(t)?],
            potential: [0.5 * c1, 0.5 * c2, 0.5 * c3],
            cross: [0.5 * cy.omega2c, -0.5 * cy.omega1c],
        })
    }

    fn apply(&self, f: &WaveField, i: usize, j: usize, hbar: f64) -> Complex64 {
        let g = f.grid();
        let (x, y) = (g.x(i), g.y(j));
        let d = Derivatives::at(f, i, j);
        let v = self.potential[0] * x * x + self.potential[1] * y * y + self.potential[2] * x * y;
        let mi = Complex64::new(0.0, -hbar);
        -hbar * hbar * (self.kinetic[0] * d.xx + self.kinetic[1] * d.yy)
            + v * d.value
            + mi * (self.cross[0] * x * d.y + self.cross[1] * y * d.x)
    }
}

struct Derivatives {
    value: Complex64,
    x: Complex64,
    y: Complex64,
    xx: Complex64,
    yy: Complex64,
}

impl Derivatives {
    // 4th-order central stencils.
    fn at(f: &WaveField, i: usize, j: usize) -> Self {
        let g = f.grid();
        let (hx, hy) = (g.hx(), g.hy());
        let sx = [f.at(i - 2, j), f.at(i - 1, j), f.at(i, j), f.at(i + 1, j), f.at(i + 2, j)];
        let sy = [f.at(i, j - 2), f.at(i, j - 1), f.at(i, j), f.at(i, j + 1), f.at(i, j + 2)];
        let first = |s: &[Complex64; 5], h: f64| (s[0] - 8.0 * s[1] + 8.0 * s[3] - s[4]) / (12.0 * h);
        let second =
            |s: &[Complex64; 5], h: f64| (-s[0] + 16.0 * s[1] - 30.0 * s[2] + 16.0 * s[3] - s[4]) / (12.0 * h * h);
        Derivatives { value: sx[2], x: first(&sx, hx), y: first(&sy, hy), xx: second(&sx, hx), yy: second(&sy, hy) }
    }
}

/// `‖a‖/‖b‖` over interior rows computed by `row(i) -> (Σ|a|², Σ|b|²)`.
fn relative_norm<F>(exec: Exec, nx: usize, row: F) -> f64
where
    F: Fn(usize) -> (f64, f64) + Sync + Send,
{
    let rows = map_range(exec, nx - 2 * RESIDUAL_MARGIN, |k| row(k + RESIDUAL_MARGIN));
    let (num, den) = rows.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (num / den).sqrt()
}

/// Relative L² residual `‖iħ∂ₜψ − Hψ‖ / ‖Hψ‖` at the middle of three
/// equally spaced fields, with `∂ₜ` by central difference.
pub fn schrodinger_residual(
    fields: [&WaveField; 3],
    hamiltonian: &QuadraticHamiltonian,
    hbar: f64,
    exec: Exec,
) -> Result<f64> {
    let [prev, cur, next] = fields;
    let g = *cur.grid();
    for f in [prev, next] {
        if *f.grid() != g || f.frame() != cur.frame() {
            return Err(Error::GridMismatch("residual fields must share grid and frame".into()));
        }
    }
    let (d0, d1) = (cur.t() - prev.t(), next.t() - cur.t());
    if !(d0 > 0.0) || (d1 - d0).abs() > 1e-9 * d0.max(f64::MIN_POSITIVE) {
        return Err(Error::GridMismatch(format!(
            "residual fields must be equally spaced in time (got {}, {}, {})",
            prev.t(),
            cur.t(),
            next.t()
        )));
    }
    let dt = 0.5 * (next.t() - prev.t());
    let ih = Complex64::new(0.0, hbar);
    Ok(relative_norm(exec, g.nx, |i| {
        let mut acc = (0.0, 0.0);
        for j in RESIDUAL_MARGIN..g.ny - RESIDUAL_MARGIN {
            let h = hamiltonian.apply(cur, i, j, hbar);
            let dt_term = ih * (next.at(i, j) - prev.at(i, j)) / (2.0 * dt);
            acc.0 += (dt_term - h).norm_sqr();
            acc.1 += h.norm_sqr();
        }
        acc
    }))
}

/// Relative L² residual `‖Îψ − λψ‖ / ‖λψ‖` of the invariant eigenvalue
/// equation for a field in decoupled coordinates.
pub fn invariant_residual(
    field: &WaveField,
    s: &ModeSnapshot,
    n: QuantumNumbers,
    hbar: f64,
    exec: Exec,
) -> Result<f64> {
    if field.frame() != FieldFrame::Transformed {
        return Err(Error::FrameMismatch("the invariant acts on decoupled coordinates".into()));
    }
    let g = *field.grid();
    let lambda = eigenvalue(n, hbar);
    let ih = Complex64::new(0.0, hbar);
    let mode = |x: f64, r: f64, rd: f64, v: Complex64, d1: Complex64, d2: Complex64| {
        0.5 * ((x * x / (r * r) + rd * rd * x * x) * v - hbar * hbar * r * r * d2 + ih * r * rd * (2.0 * x * d1 + v))
    };
    Ok(relative_norm(exec, g.nx, |i| {
        let mut acc = (0.0, 0.0);
        for j in RESIDUAL_MARGIN..g.ny - RESIDUAL_MARGIN {
            let d = Derivatives::at(field, i, j);
            let inv = mode(g.x(i), s.rho[0], s.rho_dot[0], d.value, d.x, d.xx)
                + mode(g.y(j), s.rho[1], s.rho_dot[1], d.value, d.y, d.yy);
            acc.0 += (inv - lambda * d.value).norm_sqr();
            acc.1 += (lambda * d.value).norm_sqr();
        }
        acc
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{chi, xi, Grid2};

    #[test]
    fn stationary_state_has_small_residual() {
        // Constant Ω: ρ = Ω^{-1/2}, χ = e^{-iE t/ħ} ξ.
        let omega: f64 = 2.0;
        let rho = omega.powf(-0.5);
        let grid = Grid2::centered(8.0 * rho, 8.0 * rho, 256).unwrap();
        let n = QuantumNumbers::new(1, 0).unwrap();
        let field = |t: f64| {
            let s = ModeSnapshot { t, rho: [rho; 2], rho_dot: [0.0; 2], phase_integral: [t / (rho * rho); 2] };
            WaveField::from_fn(grid, t, FieldFrame::Transformed, Exec::Parallel, |x, y| chi(n, x, y, &s, 1.0)).unwrap()
        };
        let dt = 1e-3;
        let fs = [field(1.0 - dt), field(1.0), field(1.0 + dt)];
        let h = QuadraticHamiltonian::decoupled(omega * omega, omega * omega);
        let r = schrodinger_residual([&fs[0], &fs[1], &fs[2]], &h, 1.0, Exec::Parallel).unwrap();
        assert!(r < 1e-5, "{r}");
        // A wrong frequency is detected.
        let wrong = QuadraticHamiltonian::decoupled(1.1 * omega * omega, omega * omega);
        assert!(schrodinger_residual([&fs[0], &fs[1], &fs[2]], &wrong, 1.0, Exec::Parallel).unwrap() > 1e-2);
        assert!(schrodinger_residual([&fs[0], &fs[2], &fs[1]], &h, 1.0, Exec::Parallel).is_err());
    }

    #[test]
    fn invariant_eigenvalue_on_grid() {
        let s = ModeSnapshot { t: 0.0, rho: [0.8, 1.3], rho_dot: [0.4, -0.25], phase_integral: [0.0; 2] };
        let grid = Grid2::centered(8.0 * 0.8, 8.0 * 1.3, 256).unwrap();
        for n in QuantumNumbers::up_to_total(3) {
            let f = WaveField::from_fn(grid, 0.0, FieldFrame::Transformed, Exec::Parallel, |x, y| xi(n, x, y, &s, 1.0))
                .unwrap();
            let r = invariant_residual(&f, &s, n, 1.0, Exec::Parallel).unwrap();
            assert!(r < 1e-3, "{n:?}: {r}");
            let wrong = QuantumNumbers::new(n.n1 + 1, n.n2).unwrap();
            assert!(invariant_residual(&f, &s, wrong, 1.0, Exec::Parallel).unwrap() > 0.1);
        }
    }
}
