//! Command-line experiment runner.
//!
//! Every command writes either CSV or JSON; floating-point values are
//! printed with 17 significant digits so they round-trip exactly.
//!
//! | command    | CSV columns                                                                      |
//! |------------|----------------------------------------------------------------------------------|
//! | `volume`   | `n,d_min,d,closed_form,quadrature,monte_carlo,monte_carlo_std_error,samples`     |
//! | `expect`   | `n,d_min,d,closed_form,quadrature,monte_carlo,monte_carlo_std_error,samples`     |
//! | `rate`     | `n,analytic,finite_difference,empirical,empirical_std_error,trials,steps`        |
//! | `simulate` | `iter,diameter,sample_x1,...,sample_xn` (sample fields empty on row 0)           |
//! | `sample`   | `x1,...,xn`                                                                      |
//! | `verify`   | `check,error,tolerance,passed`                                                   |

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::coords::PhsShape;
use crate::measures::{convergence_rate, expected_diameter, phs_volume};
use crate::sampling::{sample_uniform_phs, RandomStream};
use crate::sequence::{
    estimate_convergence_rate, estimate_expected_diameter, simulate_sequence, MonteCarloEstimate,
};
use crate::verify::{
    closure_points, expectation_slope_at_fixed_point, mc_volume, quadrature_expected_diameter,
    quadrature_phs_volume, run_oracle_suite, QuadratureSpec, MAX_QUADRATURE_DIMENSION,
};
use crate::{Error, MAX_DIMENSION};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Steps per trial used by `rate`.
pub const RATE_STEPS: usize = 10;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Volume,
    Expect,
    Rate,
    Simulate,
    Verify,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "prolate", version, about = "Prolate hyperspheroid sequence experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Interfocal distance.
    #[arg(long = "d-min", default_value_t = 1.0)]
    pub d_min: f64,
    /// Transverse diameter (initial diameter for `simulate`).
    #[arg(long = "d", visible_alias = "d0", default_value_t = 2.0)]
    pub d: f64,
    #[arg(long, default_value_t = 4)]
    pub iterations: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1_000)]
    pub trials: u64,
    /// Random seed; falls back to `PHS_SEED`, then 0.
    #[arg(long, env = "PHS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub d_min: f64,
    pub d: f64,
    pub iterations: usize,
    pub samples: u64,
    pub trials: u64,
    pub seed: u64,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, Error> {
        let config = RunConfig {
            command: cli.command,
            n: cli.n,
            d_min: cli.d_min,
            d: cli.d,
            iterations: cli.iterations,
            samples: cli.samples,
            trials: cli.trials,
            seed: cli.seed.unwrap_or(0),
            format: cli.format,
            out: cli.out,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.command == Command::Verify {
            return Ok(());
        }
        if !(2..=MAX_DIMENSION).contains(&self.n) {
            return Err(Error::invalid(
                "n",
                format!("dimension must be in 2..={MAX_DIMENSION}, got {}", self.n),
            ));
        }
        if self.command == Command::Rate {
            if !(self.d_min.is_finite() && self.d_min > 0.0) {
                return Err(Error::invalid("d-min", format!("must be finite and positive, got {}", self.d_min)));
            }
            if self.trials < 10 {
                return Err(Error::invalid("trials", format!("need at least 10, got {}", self.trials)));
            }
            return Ok(());
        }
        let shape = PhsShape::new(self.n, self.d_min, self.d)?;
        let needs_volume = matches!(self.command, Command::Volume | Command::Expect | Command::Sample);
        if needs_volume && shape.is_degenerate() {
            return Err(Error::invalid("d", "must exceed d-min: the shape has zero volume"));
        }
        if matches!(self.command, Command::Volume | Command::Expect) && self.samples < 2 {
            return Err(Error::invalid("samples", format!("need at least 2, got {}", self.samples)));
        }
        Ok(())
    }

    fn shape(&self) -> PhsShape {
        PhsShape::new(self.n, self.d_min, self.d).expect("validated config")
    }
}

/// Formats a float with 17 significant digits, in plain notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, x)
    } else {
        sci
    }
}

/// A float serialized into JSON with [`format_number`]; non-finite values become `null`.
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(format_number(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

#[derive(Serialize)]
struct EstimateJson {
    mean: Num,
    std_error: Num,
    n_samples: u64,
}

impl From<MonteCarloEstimate> for EstimateJson {
    fn from(e: MonteCarloEstimate) -> Self {
        EstimateJson {
            mean: Num(e.mean),
            std_error: Num(e.std_error),
            n_samples: e.n_samples,
        }
    }
}

#[derive(Serialize)]
struct ComparisonJson {
    command: &'static str,
    n: usize,
    d_min: Num,
    d: Num,
    closed_form: Num,
    quadrature: Option<Num>,
    monte_carlo: EstimateJson,
}

#[derive(Serialize)]
struct RateJson {
    command: &'static str,
    n: usize,
    analytic: Num,
    finite_difference: Num,
    empirical: EstimateJson,
    trials: u64,
    steps: usize,
}

#[derive(Serialize)]
struct Metadata {
    n: usize,
    d_min: Num,
    seed: u64,
    version: &'static str,
}

#[derive(Serialize)]
struct StepJson {
    iter: usize,
    diameter: Num,
    sample: Option<Vec<Num>>,
}

#[derive(Serialize)]
struct TraceJson {
    metadata: Metadata,
    steps: Vec<StepJson>,
}

#[derive(Serialize)]
struct SamplesJson {
    metadata: Metadata,
    d: Num,
    samples: Vec<Vec<Num>>,
}

#[derive(Serialize)]
struct CheckJson {
    check: String,
    error: Num,
    tolerance: Num,
    passed: bool,
}

#[derive(Serialize)]
struct VerifyJson {
    passed: bool,
    checks: Vec<CheckJson>,
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

fn csv_row(out: &mut dyn Write, fields: &[String]) -> io::Result<()> {
    writeln!(out, "{}", fields.join(","))
}

/// Runs a validated config, writing results to `out`. Returns the exit code.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Box<dyn std::error::Error>> {
    match config.command {
        Command::Volume => run_volume(config, out)?,
        Command::Expect => run_expect(config, out)?,
        Command::Rate => run_rate(config, out)?,
        Command::Simulate => run_simulate(config, out)?,
        Command::Sample => run_sample(config, out)?,
        Command::Verify => return run_verify(config, out),
    }
    Ok(EXIT_SUCCESS)
}

fn comparison(
    config: &RunConfig,
    out: &mut dyn Write,
    command: &'static str,
    closed_form: f64,
    quadrature: Option<f64>,
    mc: MonteCarloEstimate,
) -> io::Result<()> {
    match config.format {
        OutputFormat::Csv => {
            csv_row(
                out,
                &[
                    "n", "d_min", "d", "closed_form", "quadrature", "monte_carlo",
                    "monte_carlo_std_error", "samples",
                ]
                .map(String::from),
            )?;
            csv_row(
                out,
                &[
                    config.n.to_string(),
                    format_number(config.d_min),
                    format_number(config.d),
                    format_number(closed_form),
                    quadrature.map(format_number).unwrap_or_default(),
                    format_number(mc.mean),
                    format_number(mc.std_error),
                    mc.n_samples.to_string(),
                ],
            )
        }
        OutputFormat::Json => write_json(
            out,
            &ComparisonJson {
                command,
                n: config.n,
                d_min: Num(config.d_min),
                d: Num(config.d),
                closed_form: Num(closed_form),
                quadrature: quadrature.map(Num),
                monte_carlo: mc.into(),
            },
        ),
    }
}

fn run_volume(config: &RunConfig, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    let shape = config.shape();
    let quadrature = if shape.n() <= MAX_QUADRATURE_DIMENSION {
        let spec = QuadratureSpec::gauss_legendre(closure_points(shape.n()))?;
        Some(quadrature_phs_volume(&shape, &spec)?)
    } else {
        None
    };
    let mut rng = RandomStream::new(config.seed, 0);
    let mc = mc_volume(&shape, config.samples, &mut rng)?;
    comparison(config, out, "volume", phs_volume(&shape), quadrature, mc)?;
    Ok(())
}

fn run_expect(config: &RunConfig, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    let shape = config.shape();
    let closed = expected_diameter(config.d, config.d_min, config.n)?;
    let quadrature = quadrature_expected_diameter(&shape, &QuadratureSpec::default())?;
    let mut rng = RandomStream::new(config.seed, 0);
    let mc = estimate_expected_diameter(&shape, config.samples, &mut rng)?;
    comparison(config, out, "expect", closed, Some(quadrature), mc)?;
    Ok(())
}

fn run_rate(config: &RunConfig, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    let analytic = convergence_rate(config.n)?;
    let fd = expectation_slope_at_fixed_point(config.n, config.d_min)?;
    let rng = RandomStream::new(config.seed, 0);
    let est = estimate_convergence_rate(config.d_min, config.n, config.trials, RATE_STEPS, &rng)?;
    match config.format {
        OutputFormat::Csv => {
            csv_row(
                out,
                &["n", "analytic", "finite_difference", "empirical", "empirical_std_error", "trials", "steps"]
                    .map(String::from),
            )?;
            csv_row(
                out,
                &[
                    config.n.to_string(),
                    format_number(analytic),
                    format_number(fd),
                    format_number(est.mean),
                    format_number(est.std_error),
                    config.trials.to_string(),
                    RATE_STEPS.to_string(),
                ],
            )?;
        }
        OutputFormat::Json => write_json(
            out,
            &RateJson {
                command: "rate",
                n: config.n,
                analytic: Num(analytic),
                finite_difference: Num(fd),
                empirical: est.into(),
                trials: config.trials,
                steps: RATE_STEPS,
            },
        )?,
    }
    Ok(())
}

fn metadata(config: &RunConfig) -> Metadata {
    Metadata {
        n: config.n,
        d_min: Num(config.d_min),
        seed: config.seed,
        version: VERSION,
    }
}

fn run_simulate(config: &RunConfig, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RandomStream::new(config.seed, 0);
    let trace = simulate_sequence(config.d, config.d_min, config.n, config.iterations, &mut rng)?;
    match config.format {
        OutputFormat::Csv => {
            let mut header = vec!["iter".to_string(), "diameter".to_string()];
            header.extend((1..=config.n).map(|i| format!("sample_x{i}")));
            csv_row(out, &header)?;
            for step in &trace.steps {
                let mut row = vec![step.index.to_string(), format_number(step.diameter)];
                match &step.sample {
                    Some(x) => row.extend(x.as_slice().iter().map(|&v| format_number(v))),
                    None => row.extend(std::iter::repeat_n(String::new(), config.n)),
                }
                csv_row(out, &row)?;
            }
        }
        OutputFormat::Json => write_json(
            out,
            &TraceJson {
                metadata: metadata(config),
                steps: trace
                    .steps
                    .iter()
                    .map(|s| StepJson {
                        iter: s.index,
                        diameter: Num(s.diameter),
                        sample: s
                            .sample
                            .as_ref()
                            .map(|x| x.as_slice().iter().map(|&v| Num(v)).collect()),
                    })
                    .collect(),
            },
        )?,
    }
    Ok(())
}

fn run_sample(config: &RunConfig, out: &mut dyn Write) -> Result<(), Box<dyn std::error::Error>> {
    let shape = config.shape();
    let mut rng = RandomStream::new(config.seed, 0);
    match config.format {
        OutputFormat::Csv => {
            let header: Vec<String> = (1..=config.n).map(|i| format!("x{i}")).collect();
            csv_row(out, &header)?;
            for _ in 0..config.samples {
                let x = sample_uniform_phs(&shape, &mut rng)?;
                csv_row(out, &x.as_slice().iter().map(|&v| format_number(v)).collect::<Vec<_>>())?;
            }
        }
        OutputFormat::Json => {
            let samples = (0..config.samples)
                .map(|_| {
                    sample_uniform_phs(&shape, &mut rng)
                        .map(|x| x.as_slice().iter().map(|&v| Num(v)).collect())
                })
                .collect::<Result<Vec<Vec<Num>>, _>>()?;
            write_json(
                out,
                &SamplesJson {
                    metadata: metadata(config),
                    d: Num(config.d),
                    samples,
                },
            )?;
        }
    }
    Ok(())
}

fn run_verify(config: &RunConfig, out: &mut dyn Write) -> Result<i32, Box<dyn std::error::Error>> {
    let checks = run_oracle_suite(config.seed)?;
    let passed = checks.iter().all(|c| c.passed);
    match config.format {
        OutputFormat::Csv => {
            csv_row(out, &["check", "error", "tolerance", "passed"].map(String::from))?;
            for c in &checks {
                csv_row(
                    out,
                    &[
                        c.name.clone(),
                        format_number(c.error),
                        format_number(c.tolerance),
                        c.passed.to_string(),
                    ],
                )?;
            }
        }
        OutputFormat::Json => write_json(
            out,
            &VerifyJson {
                passed,
                checks: checks
                    .into_iter()
                    .map(|c| CheckJson {
                        check: c.name,
                        error: Num(c.error),
                        tolerance: Num(c.tolerance),
                        passed: c.passed,
                    })
                    .collect(),
            },
        )?,
    }
    Ok(if passed { EXIT_SUCCESS } else { EXIT_VERIFICATION_FAILED })
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to `err`; results go to `out` unless `--out` is given.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SUCCESS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match &config.out {
        Some(path) => match File::create(path) {
            Ok(f) => {
                let mut w = BufWriter::new(f);
                run(&config, &mut w).and_then(|code| {
                    w.flush()?;
                    Ok(code)
                })
            }
            Err(e) => {
                let _ = writeln!(err, "error: cannot create {}: {e}", path.display());
                return EXIT_USAGE;
            }
        },
        None => run(&config, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
