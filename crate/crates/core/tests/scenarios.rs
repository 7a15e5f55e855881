use std::path::Path;

use tdosc::quantum::{alpha_phase, FieldFrame, QuantumNumbers};
use tdosc::scenario::Scenario;
use tdosc::validate::{validate_scenario, ValidateOptions};
use tdosc::{Exec, Reduction};

const VALID: [&str; 8] = [
    "identity",
    "symmetric",
    "unequal_masses",
    "magnetic_isotropic",
    "magnetic_anisotropic_mass",
    "time_dependent",
    "stiff_isotropic",
    "modulated_frequency",
];

fn load(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn check_all(fixed_step: bool) {
    for name in VALID {
        let opts = ValidateOptions { fixed_step, ..Default::default() };
        let out = validate_scenario(&load(name), &opts).unwrap();
        let failed: Vec<_> =
            out.failed().map(|c| format!("{} = {:e} (< {:e})", c.name, c.measured, c.tolerance)).collect();
        assert!(out.all_passed && out.physics_error.is_none(), "{name} fixed={fixed_step}: {failed:?}");
        assert!(out.discrepancy.is_some());
        for mode in ["mode1", "mode2"] {
            let c = out.checks.iter().find(|c| c.name == format!("ermakov_residual_{mode}")).unwrap();
            assert!(c.measured < 1e-8);
        }
    }
}

#[test]
fn shipped_scenarios_pass_every_check_adaptive() {
    check_all(false);
}

#[test]
fn shipped_scenarios_pass_every_check_fixed_step() {
    check_all(true);
}

#[test]
fn drifting_angle_is_reported_not_raised() {
    let out = validate_scenario(&load("drifting_theta"), &ValidateOptions::default()).unwrap();
    assert!(!out.all_passed);
    assert!(out.physics_error.as_deref().unwrap().starts_with("decoupling_angle"));
    let angle = out.checks.iter().find(|c| c.name == "decoupling_angle").unwrap();
    assert!(!angle.passed);
    // Classical checks still run in the original frame.
    assert!(out.checks.iter().any(|c| c.name == "time_reversal" && c.passed));
    assert!(!out.checks.iter().any(|c| c.name.starts_with("schrodinger")));
}

/// `α` for `Ω² = 4` against a trapezoid rule with the Euler–Maclaurin end
/// correction, and against the closed-form phase `atan(tan(2t)/2)` unwrapped.
#[test]
fn alpha_matches_independent_quadrature() {
    let s = load("stiff_isotropic");
    let red = Reduction::new(s.params.clone()).unwrap();
    let qs = s.quantum_system(&red, false, Exec::Sequential).unwrap();
    let mode = &qs.modes()[0];
    let f = |t: f64| mode.at(t).unwrap().rho.powi(-2);
    let df = |t: f64| {
        let p = mode.at(t).unwrap();
        -2.0 * p.rho_dot / p.rho.powi(3)
    };
    let n = QuantumNumbers::new(2, 1).unwrap();
    for t in [0.3, 1.0, 2.7, 5.0] {
        let steps = (t / 2e-3f64).ceil() as usize;
        let h = t / steps as f64;
        let mut trap = 0.5 * (f(0.0) + f(t));
        for k in 1..steps {
            trap += f(k as f64 * h);
        }
        let integral = trap * h - h * h / 12.0 * (df(t) - df(0.0));
        let alpha = alpha_phase(n, &qs.snapshot(t).unwrap());
        let oracle = -(2.5 + 1.5) * integral;
        assert!((alpha - oracle).abs() < 1e-8, "t={t}: {alpha} vs {oracle}");

        let turns = (2.0 * t / std::f64::consts::PI + 0.5).floor();
        let exact = ((2.0 * t).tan() / 2.0).atan() + turns * std::f64::consts::PI;
        assert!((alpha + 4.0 * exact).abs() < 1e-8, "t={t}: {alpha} vs {}", -4.0 * exact);
    }
}

#[test]
fn symmetric_discrepancy_report() {
    let s = load("symmetric");
    let red = Reduction::new(s.params.clone()).unwrap();
    let qs = s.quantum_system(&red, false, Exec::Parallel).unwrap();
    let grid = qs.default_grid(FieldFrame::Original, 128).unwrap();
    for t in [0.0, 4.0, 20.0] {
        let r = qs.discrepancy_report(QuantumNumbers::new(0, 0).unwrap(), t, grid, Exec::Parallel).unwrap();
        assert!(r.consistent_max_abs < 1e-8, "{r:?}");
        assert!((r.compositional_norm_sq - 1.0).abs() < 1e-6);
        assert!(r.verbatim_max_abs.is_finite() && r.verbatim_l2.is_finite());
    }
}
