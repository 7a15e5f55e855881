//! Time-dependent scenario parameters.
//!
//! A [`ParameterProfile`] is a scalar function of time with analytic first and
//! second derivatives. [`SystemParams`] bundles the six profiles and the two
//! constants (charge, reduced Planck constant) that define a scenario.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wire form of a profile, as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `sum_k coefficients[k] * t^k`
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `amplitude * sin(frequency * t + phase) + offset`
    Sinusoidal {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `amplitude * exp(rate * t) + offset`
    Exponential {
        amplitude: f64,
        rate: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Natural cubic spline through `(t[i], y[i])`.
    Tabulated {
        t: Vec<f64>,
        y: Vec<f64>,
    },
}

/// A scalar function of time with continuous first and second derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileSpec", into = "ProfileSpec")]
pub enum ParameterProfile {
    Constant(f64),
    Polynomial(Vec<f64>),
    Sinusoidal { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
    Exponential { amplitude: f64, rate: f64, offset: f64 },
    Tabulated(CubicSpline),
}

impl TryFrom<ProfileSpec> for ParameterProfile {
    type Error = Error;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        let check = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidProfile(format!("{name} must be finite")))
            }
        };
        Ok(match spec {
            ProfileSpec::Constant { value } => {
                check("value", value)?;
                ParameterProfile::Constant(value)
            }
            ProfileSpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::InvalidProfile("polynomial needs at least one coefficient".into()));
                }
                for c in &coefficients {
                    check("coefficient", *c)?;
                }
                ParameterProfile::Polynomial(coefficients)
            }
            ProfileSpec::Sinusoidal { amplitude, frequency, phase, offset } => {
                for (n, v) in [("amplitude", amplitude), ("frequency", frequency), ("phase", phase), ("offset", offset)]
                {
                    check(n, v)?;
                }
                ParameterProfile::Sinusoidal { amplitude, frequency, phase, offset }
            }
            ProfileSpec::Exponential { amplitude, rate, offset } => {
                for (n, v) in [("amplitude", amplitude), ("rate", rate), ("offset", offset)] {
                    check(n, v)?;
                }
                ParameterProfile::Exponential { amplitude, rate, offset }
            }
            ProfileSpec::Tabulated { t, y } => ParameterProfile::Tabulated(CubicSpline::natural(t, y)?),
        })
    }
}

impl From<ParameterProfile> for ProfileSpec {
    fn from(p: ParameterProfile) -> Self {
        match p {
            ParameterProfile::Constant(value) => ProfileSpec::Constant { value },
            ParameterProfile::Polynomial(coefficients) => ProfileSpec::Polynomial { coefficients },
            ParameterProfile::Sinusoidal { amplitude, frequency, phase, offset } => {
                ProfileSpec::Sinusoidal { amplitude, frequency, phase, offset }
            }
            ParameterProfile::Exponential { amplitude, rate, offset } => {
                ProfileSpec::Exponential { amplitude, rate, offset }
            }
            ParameterProfile::Tabulated(s) => ProfileSpec::Tabulated { t: s.knots, y: s.values },
        }
    }
}

impl ParameterProfile {
    pub fn constant(value: f64) -> Self {
        ParameterProfile::Constant(value)
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        ParameterProfile::Polynomial(coefficients)
    }

    pub fn sinusoidal(amplitude: f64, frequency: f64, phase: f64, offset: f64) -> Self {
        ParameterProfile::Sinusoidal { amplitude, frequency, phase, offset }
    }

    pub fn exponential(amplitude: f64, rate: f64, offset: f64) -> Self {
        ParameterProfile::Exponential { amplitude, rate, offset }
    }

    pub fn tabulated(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Ok(ParameterProfile::Tabulated(CubicSpline::natural(t, y)?))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ParameterProfile::Constant(_) => true,
            ParameterProfile::Polynomial(c) => c.iter().skip(1).all(|&x| x == 0.0),
            ParameterProfile::Sinusoidal { amplitude, frequency, .. } => *amplitude == 0.0 || *frequency == 0.0,
            ParameterProfile::Exponential { amplitude, rate, .. } => *amplitude == 0.0 || *rate == 0.0,
            ParameterProfile::Tabulated(s) => s.values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.eval_derivative(t, 0)
    }

    /// Value (`order = 0`) or the first/second time derivative.
    pub fn eval_derivative(&self, t: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidProfile(format!("derivative order {order} not supported")));
        }
        Ok(match self {
            ParameterProfile::Constant(v) => {
                if order == 0 {
                    *v
                } else {
                    0.0
                }
            }
            ParameterProfile::Polynomial(c) => poly_derivative(c, t, order),
            ParameterProfile::Sinusoidal { amplitude, frequency, phase, offset } => {
                let arg = frequency * t + phase;
                match order {
                    0 => amplitude * arg.sin() + offset,
                    1 => amplitude * frequency * arg.cos(),
                    _ => -amplitude * frequency * frequency * arg.sin(),
                }
            }
            ParameterProfile::Exponential { amplitude, rate, offset } => {
                let e = amplitude * (rate * t).exp();
                match order {
                    0 => e + offset,
                    1 => rate * e,
                    _ => rate * rate * e,
                }
            }
            ParameterProfile::Tabulated(s) => s.eval(t, order)?,
        })
    }

    /// Value, first and second derivative in one call.
    pub fn jet(&self, t: f64) -> Result<[f64; 3]> {
        Ok([self.eval_derivative(t, 0)?, self.eval_derivative(t, 1)?, self.eval_derivative(t, 2)?])
    }
}

fn poly_derivative(c: &[f64], t: f64, order: u8) -> f64 {
    // Horner on the differentiated coefficients.
    let order = order as usize;
    let mut acc = 0.0;
    for k in (order..c.len()).rev() {
        let factor: f64 = (0..order).map(|j| (k - j) as f64).product();
        acc = acc * t + factor * c[k];
    }
    acc
}

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(Error::InvalidProfile(format!(
                "tabulated profile needs >= 2 knots and matching values (got {} t, {} y)",
                n,
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("tabulated data must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("tabulated knots must be strictly increasing".into()));
        }

        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let mut second = vec![0.0; n];
        if n > 2 {
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Ok(CubicSpline { knots, values, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn eval(&self, t: f64, order: u8) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&t) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let i = match self.knots.partition_point(|&k| k <= t) {
            0 => 0,
            p => (p - 1).min(self.knots.len() - 2),
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        Ok(match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1,
            _ => a * m0 + b * m1,
        })
    }
}

fn default_one() -> f64 {
    1.0
}

/// The full parameter set of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub m1: ParameterProfile,
    pub m2: ParameterProfile,
    #[serde(rename = "C1")]
    pub c1: ParameterProfile,
    #[serde(rename = "C2")]
    pub c2: ParameterProfile,
    #[serde(rename = "C3")]
    pub c3: ParameterProfile,
    #[serde(rename = "B")]
    pub b: ParameterProfile,
    #[serde(default = "default_one")]
    pub e: f64,
    #[serde(default = "default_one")]
    pub hbar: f64,
    pub interval: (f64, f64),
}

/// Number of interior points used by [`validate_params`] for the mass check.
pub const MASS_SAMPLES: usize = 1000;

impl SystemParams {
    pub fn t0(&self) -> f64 {
        self.interval.0
    }

    pub fn t1(&self) -> f64 {
        self.interval.1
    }

    pub fn contains(&self, t: f64) -> bool {
        let span = self.t1() - self.t0();
        let slack = 1e-12 * span.abs().max(1.0);
        t >= self.t0() - slack && t <= self.t1() + slack
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfRange { t, lo: self.t0(), hi: self.t1() })
        }
    }

    /// True when every profile is time-independent.
    pub fn is_autonomous(&self) -> bool {
        [&self.m1, &self.m2, &self.c1, &self.c2, &self.c3, &self.b].iter().all(|p| p.is_constant())
    }

    /// Uniform sample of the interval including both endpoints.
    pub fn sample_times(&self, n: usize) -> Vec<f64> {
        uniform(self.t0(), self.t1(), n)
    }
}

/// `n >= 2` evenly spaced points from `a` to `b` inclusive.
pub fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    /// First offending time, if the check is time-dependent.
    pub t: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msg = self.violations.iter().map(|v| v.message.clone()).collect::<Vec<_>>().join("; ");
        Err(Error::InvalidParams(msg))
    }
}

/// Check charge, Planck constant, interval and mass positivity.
///
/// Masses are checked on [`MASS_SAMPLES`] uniform interior points plus both
/// endpoints; every profile must be evaluable there.
pub fn validate_params(params: &SystemParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |check: &str, t: Option<f64>, message: String| {
        report.violations.push(Violation { check: check.to_string(), t, message });
    };
    if !(params.e > 0.0 && params.e.is_finite()) {
        push("charge", None, format!("charge e must be positive, got {}", params.e));
    }
    if !(params.hbar > 0.0 && params.hbar.is_finite()) {
        push("hbar", None, format!("hbar must be positive, got {}", params.hbar));
    }
    let (t0, t1) = params.interval;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        push("interval", None, format!("interval must satisfy t0 < t1, got [{t0}, {t1}]"));
        return report;
    }
    let times = uniform(t0, t1, MASS_SAMPLES + 2);
    let profiles = [
        ("m1", &params.m1),
        ("m2", &params.m2),
        ("C1", &params.c1),
        ("C2", &params.c2),
        ("C3", &params.c3),
        ("B", &params.b),
    ];
    for (name, profile) in profiles {
        let mut bad: Option<(f64, String)> = None;
        let mut count = 0usize;
        for &t in &times {
            let issue = match profile.jet(t) {
                Err(e) => Some(e.to_string()),
                Ok(j) if j.iter().any(|v| !v.is_finite()) => Some("non-finite value".to_string()),
                Ok(j) if name.starts_with('m') && j[0] <= 0.0 => {
                    Some(format!("mass {name} = {} is not positive", j[0]))
                }
                Ok(_) => None,
            };
            if let Some(msg) = issue {
                count += 1;
                bad.get_or_insert((t, msg));
            }
        }
        if let Some((t, msg)) = bad {
            let check = if name.starts_with('m') { "mass_positivity" } else { "profile" };
            push(check, Some(t), format!("{name}: {msg} at t = {t} ({count} of {} samples)", times.len()));
        }
    }
    report
}
