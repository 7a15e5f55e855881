use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tdosc::dynamics::{classical_invariant, hamiltonian_value, propagate, propagate_to};
use tdosc::ermakov::ermakov_residual;
use tdosc::quantum::{Construction, FieldFrame, Grid2, QuantumNumbers, QuantumSystem};
use tdosc::reduction::ReducedCoefficients;
use tdosc::scenario::Scenario;
use tdosc::validate::{validate_scenario, ValidateOptions};
use tdosc::{Error, Exec, Frame, PhaseSpaceState, Reduction};

use crate::output::{format_value, write_json, CsvWriter};
use crate::{ClassicalArgs, ClassicalFrame, WaveArgs, WaveConstruction, WaveFormat, WaveFrame};

/// A message plus the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn runtime(message: String) -> Self {
        Failure { code: 1, message }
    }

    pub fn usage(message: String) -> Self {
        Failure { code: 2, message }
    }

    fn scenario(path: &Path, err: Error) -> Self {
        Failure { code: 2, message: format!("bad scenario file {}: {err}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = if err.is_physics() { 3 } else { 1 };
        Failure { code, message: err.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::runtime(format!("I/O error: {err}"))
    }
}

pub struct Context {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub fixed_step: bool,
    pub exec: Exec,
}

impl Context {
    pub fn load(path: &Path, out: Option<PathBuf>, fixed_step: bool) -> Result<Self, Failure> {
        let scenario = Scenario::load(path).map_err(|e| Failure::scenario(path, e))?;
        let out = out.or_else(|| scenario.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out)
            .map_err(|e| Failure::runtime(format!("cannot create output directory {}: {e}", out.display())))?;
        Ok(Context { scenario, out, fixed_step, exec: Exec::Parallel })
    }

    fn file(&self, suffix: &str) -> PathBuf {
        self.out.join(format!("{}_{suffix}", self.scenario.name))
    }

    fn reduction(&self) -> Result<Reduction, Failure> {
        Ok(Reduction::new(self.scenario.params.clone())?)
    }

    fn quantum(&self, red: &Reduction) -> Result<QuantumSystem, Failure> {
        Ok(self.scenario.quantum_system(red, self.fixed_step, self.exec)?)
    }

    fn samples(&self, requested: Option<usize>) -> Result<usize, Failure> {
        let n = requested.unwrap_or(self.scenario.output.samples);
        if n < 2 {
            return Err(Failure::usage(format!("--samples must be at least 2 (got {n})")));
        }
        Ok(n)
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn reduce(ctx: &Context, samples: Option<usize>) -> Result<(), Failure> {
    let red = ctx.reduction()?;
    let theta = red.require_decoupled(ctx.scenario.theta_tolerance)?;
    red.require_positive_frequencies(theta)?;
    let mut csv = CsvWriter::create(ctx.file("reduce.csv"), ReducedCoefficients::CSV_HEADER)?;
    for t in red.params().sample_times(ctx.samples(samples)?) {
        csv.row(&red.coefficients(t, theta)?.csv_values())?;
    }
    announce(&csv.finish()?);
    Ok(())
}

#[derive(Serialize)]
struct RoundTrip {
    frame: Frame,
    start: [f64; 4],
    end: [f64; 4],
    returned: [f64; 4],
    max_abs_deviation: f64,
}

pub fn classical(ctx: &Context, args: &ClassicalArgs) -> Result<(), Failure> {
    let red = ctx.reduction()?;
    let tol = ctx.scenario.theta_tolerance;
    let opts = ctx.scenario.solver_options(ctx.fixed_step);
    let y = match &args.state {
        Some(v) => <[f64; 4]>::try_from(v.as_slice())
            .map_err(|_| Failure::usage(format!("--state needs 4 values x1,x2,p1,p2 (got {})", v.len())))?,
        None => ctx.scenario.classical.state,
    };
    let (t0, t1) = (red.params().t0(), red.params().t1());
    let start = PhaseSpaceState::from_array(Frame::Original, y, t0);

    // The invariant column needs the normal frame and both ρ; without them it is nan.
    let decoupled = red.require_decoupled(tol);
    let (theta, frame) = match args.frame {
        ClassicalFrame::Normal => (decoupled.clone()?, Frame::Normal),
        ClassicalFrame::Original => (decoupled.clone().unwrap_or(0.0), Frame::Original),
    };
    let quantum = match decoupled {
        Ok(_) => match ctx.scenario.quantum_system(&red, ctx.fixed_step, ctx.exec) {
            Ok(qs) => Some(qs),
            Err(e) if e.is_physics() && args.frame == ClassicalFrame::Original => None,
            Err(e) => return Err(e.into()),
        },
        Err(_) => None,
    };
    let invariant = |s: &PhaseSpaceState| -> Result<f64, Failure> {
        let Some(qs) = &quantum else { return Ok(f64::NAN) };
        let normal = red.map_state(s, Frame::Normal, theta)?;
        let (a, b) = (qs.modes()[0].at(s.t)?, qs.modes()[1].at(s.t)?);
        Ok(classical_invariant(&normal, [a.rho, a.rho_dot, b.rho, b.rho_dot])?)
    };

    let s0 = red.map_state(&start, frame, theta)?;
    let n = ctx.samples(args.samples)?;
    let traj = propagate_to(&red, &s0, t1, n - 1, theta, &opts)?;
    let tag = match args.frame {
        ClassicalFrame::Original => "original",
        ClassicalFrame::Normal => "normal",
    };
    let mut csv = CsvWriter::create(ctx.file(&format!("classical_{tag}.csv")), "t,q1,q2,p1,p2,H,I")?;
    for s in std::iter::once(&s0).chain(&traj.samples) {
        let h = hamiltonian_value(s, &red, theta)?;
        csv.row(&[s.t, s.q[0], s.q[1], s.p[0], s.p[1], h, invariant(s)?])?;
    }
    announce(&csv.finish()?);

    if args.round_trip {
        let end = *traj.samples.last().expect("at least one output");
        let back = propagate(&red, &end, &[t0], theta, &opts)?.samples[0];
        let report = RoundTrip {
            frame,
            start: s0.to_array(),
            end: end.to_array(),
            returned: back.to_array(),
            max_abs_deviation: back.max_abs_diff(&s0),
        };
        let path = ctx.file(&format!("classical_{tag}_roundtrip.json"));
        write_json(&path, &report)?;
        println!("round_trip_deviation {}", format_value(report.max_abs_deviation));
        announce(&path);
    }
    Ok(())
}

pub fn ermakov(ctx: &Context, samples: Option<usize>, times: Option<Vec<f64>>) -> Result<(), Failure> {
    let red = ctx.reduction()?;
    let qs = ctx.quantum(&red)?;
    let times = match times {
        Some(t) if t.is_empty() => return Err(Failure::usage("--times needs at least one value".into())),
        Some(t) => t,
        None => red.params().sample_times(ctx.samples(samples)?),
    };
    let mut csv = CsvWriter::create(ctx.file("ermakov.csv"), "t,rho1,rho1_dot,rho2,rho2_dot,residual1,residual2")?;
    for t in times {
        let [m1, m2] = qs.modes();
        let (a, b) = (m1.at(t)?, m2.at(t)?);
        let (r1, r2) = (ermakov_residual(m1, t)?, ermakov_residual(m2, t)?);
        csv.row(&[t, a.rho, a.rho_dot, b.rho, b.rho_dot, r1.residual, r2.residual])?;
    }
    announce(&csv.finish()?);
    Ok(())
}

#[derive(Serialize)]
struct WaveEntry {
    t: f64,
    file: String,
    norm_sq: f64,
}

#[derive(Serialize)]
struct WaveIndex {
    n: QuantumNumbers,
    frame: FieldFrame,
    construction: Construction,
    grid: Grid2,
    fields: Vec<WaveEntry>,
}

pub fn wavefunction(ctx: &Context, args: &WaveArgs) -> Result<(), Failure> {
    let red = ctx.reduction()?;
    let n = QuantumNumbers::new(args.n1, args.n2)?;
    let qs = ctx.quantum(&red)?;
    let frame = match args.frame {
        WaveFrame::Original => FieldFrame::Original,
        WaveFrame::Transformed => FieldFrame::Transformed,
    };
    let construction = match args.construction {
        WaveConstruction::Compositional => Construction::Compositional,
        WaveConstruction::Verbatim => Construction::ClosedFormVerbatim,
        WaveConstruction::Consistent => Construction::ClosedFormConsistent,
    };
    let points = args.grid.unwrap_or(ctx.scenario.grid.n);
    let grid = match ctx.scenario.grid.extent {
        Some([ex, ey]) => Grid2::centered(ex, ey, points),
        None => qs.default_grid(frame, points),
    }
    .map_err(|e| Failure::usage(e.to_string()))?;
    let times = args.times.clone().unwrap_or_else(|| vec![red.params().t0()]);

    let mut fields = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let field = qs.field(n, t, frame, construction, grid, ctx.exec)?;
        let stem = format!("psi_{}_{}_{k}", n.n1, n.n2);
        let path = match args.format {
            WaveFormat::Csv => {
                let mut csv = CsvWriter::create(ctx.file(&format!("{stem}.csv")), "x,y,re,im,abs2")?;
                for i in 0..grid.nx {
                    for j in 0..grid.ny {
                        let v = field.at(i, j);
                        csv.row(&[grid.x(i), grid.y(j), v.re, v.im, v.norm_sqr()])?;
                    }
                }
                csv.finish()?
            }
            WaveFormat::Binary => {
                let path = ctx.file(&format!("{stem}.bin"));
                let file = fs::File::create(&path)?;
                field.write_binary(std::io::BufWriter::new(file))?;
                path
            }
        };
        let norm_sq = field.norm_sq(ctx.exec);
        println!("t {} norm_sq {}", format_value(t), format_value(norm_sq));
        announce(&path);
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        fields.push(WaveEntry { t, file, norm_sq });
    }
    let index = ctx.file(&format!("psi_{}_{}.json", n.n1, n.n2));
    write_json(&index, &WaveIndex { n, frame, construction, grid, fields })?;
    announce(&index);
    Ok(())
}

pub fn validate(ctx: &Context) -> Result<(), Failure> {
    let opts = ValidateOptions { fixed_step: ctx.fixed_step, exec: ctx.exec, ..Default::default() };
    let outcome = validate_scenario(&ctx.scenario, &opts)?;
    let path = ctx.file("validate.json");
    write_json(&path, &outcome)?;
    for c in &outcome.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {} measured {} tolerance {}", c.name, format_value(c.measured), format_value(c.tolerance));
    }
    announce(&path);
    if let Some(msg) = &outcome.physics_error {
        return Err(Failure { code: 3, message: msg.clone() });
    }
    if !outcome.all_passed {
        let names: Vec<&str> = outcome.failed().map(|c| c.name.as_str()).collect();
        return Err(Failure::runtime(format!("failed checks: {}", names.join(", "))));
    }
    Ok(())
}
