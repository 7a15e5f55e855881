//! `tdosc`: scenario-driven front end for the reduction, classical,
//! Ermakov and wave-function pipelines.
//!
//! Exit codes: 0 success, 1 runtime failure or failed checks, 2 unreadable or
//! malformed scenario (or bad arguments), 3 physics outside the decoupled class.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Context, Failure};

#[derive(Debug, Parser)]
#[command(name = "tdosc", version, about = "Charged oscillator in a time-varying magnetic field")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    scenario: Option<PathBuf>,

    /// Output directory; overrides the scenario's `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Use the fixed-step integrator with the scenario's `fixed_step_size`.
    #[arg(long, global = true)]
    fixed_step: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduced coefficients sampled over the scenario interval.
    Reduce {
        /// Number of time samples (default: `output.samples`).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Classical trajectory with energy and invariant columns.
    Classical(ClassicalArgs),
    /// Auxiliary amplitudes of both normal modes with their residuals.
    Ermakov {
        #[arg(long)]
        samples: Option<usize>,
        /// Explicit output times, comma separated; overrides `--samples`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        times: Option<Vec<f64>>,
    },
    /// Wave function on a 2D grid at one or more times.
    Wavefunction(WaveArgs),
    /// Run every invariant check and write a JSON report.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassicalFrame {
    Original,
    Normal,
}

#[derive(Debug, Args)]
struct ClassicalArgs {
    #[arg(long, value_enum, default_value_t = ClassicalFrame::Original)]
    frame: ClassicalFrame,
    /// Original-frame initial state `x1,x2,p1,p2` at t0 (default: `classical.state`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    state: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Also integrate back to t0 and report the deviation from the start state.
    #[arg(long)]
    round_trip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WaveFrame {
    Original,
    Transformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WaveConstruction {
    Compositional,
    Verbatim,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WaveFormat {
    Csv,
    Binary,
}

#[derive(Debug, Args)]
struct WaveArgs {
    #[arg(long, default_value_t = 0)]
    n1: usize,
    #[arg(long, default_value_t = 0)]
    n2: usize,
    /// Evaluation times, comma separated (default: t0).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
    /// Points per axis (default: `grid.n`).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = WaveFormat::Csv)]
    format: WaveFormat,
    #[arg(long, value_enum, default_value_t = WaveFrame::Original)]
    frame: WaveFrame,
    #[arg(long, value_enum, default_value_t = WaveConstruction::Compositional)]
    construction: WaveConstruction,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("TDOSC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("TDOSC_THREADS must be a positive integer (got {raw:?})")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::runtime(format!("cannot configure the thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let path = cli.scenario.ok_or_else(|| Failure::usage("--scenario <PATH> is required".into()))?;
    let ctx = Context::load(&path, cli.out, cli.fixed_step)?;
    match cli.command {
        Command::Reduce { samples } => commands::reduce(&ctx, samples),
        Command::Classical(a) => commands::classical(&ctx, &a),
        Command::Ermakov { samples, times } => commands::ermakov(&ctx, samples, times),
        Command::Wavefunction(a) => commands::wavefunction(&ctx, &a),
        Command::Validate => commands::validate(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tdosc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
