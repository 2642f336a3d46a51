use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use rhochart::builder::{build_commutant, build_density, validate_density, CommutantSpec, DensityChart};
use rhochart::charts::EigenChart;
use rhochart::decompose::decompose;
use rhochart::degeneracy::DegeneracyPattern;
use rhochart::numerics::{random_unitary, ComplexMatrix};
use rhochart::words::{normalize, Word, WordForm};
use rhochart::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_UNREACHABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "rhochart", version, about = "Minimal charts for degenerate density matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Input file (defaults to stdin)
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file (defaults to stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter counts for a degeneracy pattern
    Count {
        #[arg(long)]
        pattern: DegeneracyPattern,
        /// Dimension; must match the pattern when given
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        io: Io,
    },
    /// Density matrix from a chart file, flat parameters or a seed
    Build {
        #[arg(long)]
        pattern: Option<DegeneracyPattern>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, alias = "random")]
        seed: Option<u64>,
        /// Comma-separated eigenvalue angles
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eigen_angles: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Normalize a word into another form
    Rewrite {
        #[arg(long, value_enum)]
        to: Target,
        #[command(flatten)]
        io: Io,
    },
    /// Factor a unitary into the one phase–one rotation chart
    Decompose {
        /// Maximum accepted reconstruction error
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Check that a matrix is a density matrix
    Verify {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Random commutant of a degeneracy pattern
    Commutant {
        #[arg(long)]
        pattern: DegeneracyPattern,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, alias = "random")]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
    /// Random unitary matrix
    Unitary {
        #[arg(long)]
        n: usize,
        #[arg(long, alias = "random")]
        seed: u64,
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Opor,
    Km,
    PhaseAdjoint,
    General,
}

impl From<Target> for WordForm {
    fn from(t: Target) -> Self {
        match t {
            Target::Opor => WordForm::OnePhaseOneRotation,
            Target::Km => WordForm::Km,
            Target::PhaseAdjoint => WordForm::PhaseAdjoint,
            Target::General => WordForm::General,
        }
    }
}

/// Error with the process exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    fn validation(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            error: error.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::usage(error)
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::Unreachable(_) => EXIT_UNREACHABLE,
            Error::NotUnitary { .. } | Error::NotInterior(_) => EXIT_VALIDATION,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            error: error.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_json(io: &Io) -> anyhow::Result<Value> {
    let text = match &io.input {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    serde_json::from_str(&text).context("parsing JSON input")
}

fn write_json<T: Serialize>(io: &Io, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match &io.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

/// Accepts a bare matrix or an object holding one under `rho` or `matrix`.
fn parse_matrix(value: Value) -> anyhow::Result<ComplexMatrix> {
    let inner = match value.get("rho").or_else(|| value.get("matrix")) {
        Some(m) => m.clone(),
        None => value,
    };
    serde_json::from_value(inner).context("expected a matrix {\"dim\", \"entries\"}")
}

fn check_dimension(pattern: &DegeneracyPattern, n: Option<usize>) -> Result<(), Failure> {
    match n {
        Some(n) if n != pattern.n() => Err(Failure::usage(anyhow!(
            "pattern {pattern} has dimension {}, not {n}",
            pattern.n()
        ))),
        _ => Ok(()),
    }
}

fn cmd_count(pattern: DegeneracyPattern, n: Option<usize>, io: &Io) -> CmdResult {
    check_dimension(&pattern, n)?;
    let report = json!({
        "n": pattern.n(),
        "pattern": pattern.multiplicities(),
        "degrees_of_degeneracy": pattern.degrees_of_degeneracy(),
        "redundant_params": pattern.redundant_params(),
        "internal_params": pattern.internal_params(),
        "orbit_dim": pattern.orbit_dim(),
        "chart_param_count": pattern.orbit_dim() + pattern.num_classes() - 1,
    });
    Ok(write_json(io, &report)?)
}

struct BuildArgs {
    pattern: Option<DegeneracyPattern>,
    n: Option<usize>,
    seed: Option<u64>,
    eigen_angles: Option<Vec<f64>>,
    tol: f64,
}

fn chart_for_build(args: &BuildArgs, io: &Io) -> Result<DensityChart, Failure> {
    if let Some(seed) = args.seed {
        let pattern = args
            .pattern
            .clone()
            .ok_or_else(|| Failure::usage(anyhow!("--seed needs --pattern")))?;
        check_dimension(&pattern, args.n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chart = DensityChart::random(pattern.clone(), &mut rng);
        return match &args.eigen_angles {
            Some(angles) => Ok(DensityChart::new(
                EigenChart::new(pattern, angles.clone())?,
                chart.unitary_params().to_vec(),
            )?),
            None => Ok(chart),
        };
    }
    let value = read_json(io)?;
    if value.is_object() {
        let chart: DensityChart = serde_json::from_value(value).map_err(|e| Failure::usage(anyhow!(e)))?;
        if let Some(p) = &args.pattern {
            if p != chart.pattern() {
                return Err(Failure::usage(anyhow!("chart pattern differs from --pattern")));
            }
        }
        check_dimension(chart.pattern(), args.n)?;
        return Ok(chart);
    }
    // flat unitary parameters [δ1, θ1, δ2, θ2, …]
    let flat: Vec<f64> = serde_json::from_value(value).context("expected a chart object or a list of numbers")?;
    let pattern = args
        .pattern
        .clone()
        .ok_or_else(|| Failure::usage(anyhow!("a parameter list needs --pattern")))?;
    check_dimension(&pattern, args.n)?;
    let angles = args
        .eigen_angles
        .clone()
        .ok_or_else(|| Failure::usage(anyhow!("a parameter list needs --eigen-angles")))?;
    Ok(DensityChart::from_flat(EigenChart::new(pattern, angles)?, &flat)?)
}

fn cmd_build(args: BuildArgs, io: &Io) -> CmdResult {
    let chart = chart_for_build(&args, io)?;
    let rho = build_density(&chart);
    let report = validate_density(&rho, args.tol);
    write_json(io, &json!({ "chart": chart, "rho": rho, "report": report }))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::validation(anyhow!(report.failures.join("; "))))
    }
}

fn cmd_rewrite(to: Target, io: &Io) -> CmdResult {
    let word: Word = serde_json::from_value(read_json(io)?).context("expected a word {\"n\", \"atoms\"}")?;
    let out = if word.atoms().is_empty() {
        word.clone()
    } else {
        normalize(&word, to.into())?
    };
    let diff = word.evaluate().max_abs_diff(&out.evaluate()).map_err(Failure::from)?;
    let phases = out.count_phases().ok();
    write_json(
        io,
        &json!({ "word": out, "form": out.classify(), "phases": phases, "max_abs_diff": diff }),
    )?;
    Ok(())
}

fn cmd_decompose(tol: f64, io: &Io) -> CmdResult {
    let u = parse_matrix(read_json(io)?)?;
    let result = decompose(&u)?;
    write_json(
        io,
        &json!({ "word": result.word, "params": result.params(), "residual": result.residual }),
    )?;
    if result.residual <= tol {
        Ok(())
    } else {
        Err(Failure::validation(anyhow!("residual {:.3e} exceeds {tol:.3e}", result.residual)))
    }
}

fn cmd_verify(tol: f64, io: &Io) -> CmdResult {
    let m = parse_matrix(read_json(io)?)?;
    let report = validate_density(&m, tol);
    write_json(io, &report)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::validation(anyhow!(report.failures.join("; "))))
    }
}

fn cmd_commutant(pattern: DegeneracyPattern, n: Option<usize>, seed: u64, io: &Io) -> CmdResult {
    check_dimension(&pattern, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = CommutantSpec::random(pattern, &mut rng);
    let matrix = build_commutant(&spec);
    Ok(write_json(io, &json!({ "spec": spec, "matrix": matrix }))?)
}

fn cmd_unitary(n: usize, seed: u64, io: &Io) -> CmdResult {
    if n == 0 {
        return Err(Failure::usage(anyhow!("--n must be at least 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(write_json(io, &random_unitary(n, &mut rng))?)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Count { pattern, n, io } => cmd_count(pattern, n, &io),
        Command::Build {
            pattern,
            n,
            seed,
            eigen_angles,
            tol,
            io,
        } => cmd_build(
            BuildArgs {
                pattern,
                n,
                seed,
                eigen_angles,
                tol,
            },
            &io,
        ),
        Command::Rewrite { to, io } => cmd_rewrite(to, &io),
        Command::Decompose { tol, io } => cmd_decompose(tol, &io),
        Command::Verify { tol, io } => cmd_verify(tol, &io),
        Command::Commutant { pattern, n, seed, io } => cmd_commutant(pattern, n, seed, &io),
        Command::Unitary { n, seed, io } => cmd_unitary(n, seed, &io),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
