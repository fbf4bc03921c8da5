//! The random sequence of shrinking confocal hyperspheroids.
//!
//! Each step draws a uniform sample from the current hyperspheroid and
//! replaces the transverse diameter by the focal-distance sum of that sample.

use serde::{Deserialize, Serialize};

use crate::coords::{CartesianPoint, PhsShape};
use crate::sampling::{focal_sum, sample_uniform_phs, RandomStream, StreamDescriptor};
use crate::stats::RunningStats;
use crate::{Error, Result};

/// A trace is considered converged once `d_i - d_min` drops below this
/// fraction of `d_min`.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-13;

/// Relative offset of the starting diameter above `d_min` used when
/// estimating the convergence rate.
pub const RATE_START_OFFSET: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

impl MonteCarloEstimate {
    pub fn from_stats(stats: &RunningStats) -> Self {
        MonteCarloEstimate {
            mean: stats.mean(),
            std_error: stats.std_error(),
            n_samples: stats.count(),
        }
    }

    /// Distance from `reference` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.mean - reference).abs();
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// Whether `reference` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        self.z_score(reference) <= k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    pub diameter: f64,
    /// The sample that generated this diameter; `None` for the initial one.
    pub sample: Option<CartesianPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrace {
    pub d_min: f64,
    pub n: usize,
    pub seed: StreamDescriptor,
    pub steps: Vec<TraceStep>,
}

impl SequenceTrace {
    pub fn diameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.diameter)
    }

    pub fn final_diameter(&self) -> f64 {
        self.steps.last().map(|s| s.diameter).unwrap_or(f64::NAN)
    }
}

/// One step of the sequence: a uniform sample of `shape` and the diameter of
/// the confocal hyperspheroid through it, clamped into `[d_min, d]`.
pub fn step(shape: &PhsShape, rng: &mut RandomStream) -> Result<(CartesianPoint, f64)> {
    let x = sample_uniform_phs(shape, rng)?;
    let d = focal_sum(shape.a(), x.as_slice()).clamp(shape.d_min(), shape.d());
    Ok((x, d))
}

pub fn simulate_sequence(
    d_0: f64,
    d_min: f64,
    n: usize,
    iterations: usize,
    rng: &mut RandomStream,
) -> Result<SequenceTrace> {
    let mut shape = PhsShape::new(n, d_min, d_0)?;
    let mut steps = Vec::with_capacity(iterations + 1);
    steps.push(TraceStep {
        index: 0,
        diameter: d_0,
        sample: None,
    });
    for i in 1..=iterations {
        if shape.d() - d_min < CONVERGENCE_TOLERANCE * d_min {
            break;
        }
        let (x, d) = step(&shape, rng)?;
        steps.push(TraceStep {
            index: i,
            diameter: d,
            sample: Some(x),
        });
        shape = shape.with_diameter(d)?;
    }
    Ok(SequenceTrace {
        d_min,
        n,
        seed: rng.descriptor(),
        steps,
    })
}

/// Sample mean and standard error of the next diameter over `n_samples`
/// independent steps from `shape`.
pub fn estimate_expected_diameter(
    shape: &PhsShape,
    n_samples: u64,
    rng: &mut RandomStream,
) -> Result<MonteCarloEstimate> {
    if shape.is_degenerate() {
        return Err(Error::DegenerateShape);
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", format!("need at least 2, got {n_samples}")));
    }
    let mut stats = RunningStats::new();
    for _ in 0..n_samples {
        stats.push(step(shape, rng)?.1);
    }
    Ok(MonteCarloEstimate::from_stats(&stats))
}

/// Per-step contraction ratios `(d_{i+1} - d_min) / (d_i - d_min)` paired
/// with the relative gap `(d_i - d_min) / d_min` they were observed at.
fn contraction_ratios(
    d_min: f64,
    n: usize,
    n_trials: u64,
    n_steps: usize,
    rng: &RandomStream,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(n_trials as usize * n_steps);
    for trial in 0..n_trials {
        let mut stream = rng.substream(trial);
        let mut shape = PhsShape::new(n, d_min, d_min * (1.0 + RATE_START_OFFSET))?;
        for _ in 0..n_steps {
            let gap = shape.d() - d_min;
            if gap < CONVERGENCE_TOLERANCE * d_min {
                break;
            }
            let (_, d) = step(&shape, &mut stream)?;
            out.push((gap / d_min, (d - d_min) / gap));
            shape = shape.with_diameter(d)?;
        }
    }
    Ok(out)
}

/// Plain average of the per-step contraction ratios over all trials and steps.
pub fn mean_contraction_ratio(
    d_min: f64,
    n: usize,
    n_trials: u64,
    n_steps: usize,
    rng: &RandomStream,
) -> Result<MonteCarloEstimate> {
    validate_rate_args(d_min, n, n_trials, n_steps)?;
    let ratios = contraction_ratios(d_min, n, n_trials, n_steps, rng)?;
    let stats: RunningStats = ratios.iter().map(|&(_, r)| r).collect();
    Ok(MonteCarloEstimate::from_stats(&stats))
}

fn validate_rate_args(d_min: f64, n: usize, n_trials: u64, n_steps: usize) -> Result<()> {
    if !(d_min.is_finite() && d_min > 0.0) {
        return Err(Error::invalid("d_min", format!("must be finite and positive, got {d_min}")));
    }
    if !(2..=crate::MAX_DIMENSION).contains(&n) {
        return Err(Error::invalid("n", format!("dimension must be in 2..={}, got {n}", crate::MAX_DIMENSION)));
    }
    if n_trials < 10 {
        return Err(Error::invalid("n_trials", format!("need at least 10, got {n_trials}")));
    }
    if n_steps < 2 {
        return Err(Error::invalid("n_steps", format!("need at least 2, got {n_steps}")));
    }
    Ok(())
}

/// Empirical convergence rate.
///
/// Runs `n_trials` independent sequences (trial `t` uses substream `t`) of
/// `n_steps` steps from `d_0 = d_min (1 + RATE_START_OFFSET)` and records each
/// contraction ratio `(d_{i+1} - d_min) / (d_i - d_min)` together with the
/// gap `d_i - d_min` it was taken at. The rate is the derivative of the
/// expected next diameter at `d_min`, so the ratios are fitted by least
/// squares as `eta + slope * gap` and the intercept at zero gap is returned,
/// with its ordinary least-squares standard error.
pub fn estimate_convergence_rate(
    d_min: f64,
    n: usize,
    n_trials: u64,
    n_steps: usize,
    rng: &RandomStream,
) -> Result<MonteCarloEstimate> {
    validate_rate_args(d_min, n, n_trials, n_steps)?;
    let ratios = contraction_ratios(d_min, n, n_trials, n_steps, rng)?;
    let count = ratios.len();
    if count < 3 {
        return Err(Error::invalid("n_steps", "too few non-converged steps to fit a rate"));
    }
    let gaps: RunningStats = ratios.iter().map(|&(g, _)| g).collect();
    let ratio_stats: RunningStats = ratios.iter().map(|&(_, r)| r).collect();
    let (gbar, rbar) = (gaps.mean(), ratio_stats.mean());
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(g, r) in &ratios {
        sxx += (g - gbar) * (g - gbar);
        sxy += (g - gbar) * (r - rbar);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = rbar - slope * gbar;
    let rss: f64 = ratios
        .iter()
        .map(|&(g, r)| (r - intercept - slope * g).powi(2))
        .sum();
    let sigma2 = rss / (count - 2) as f64;
    let leverage = if sxx > 0.0 { gbar * gbar / sxx } else { 0.0 };
    Ok(MonteCarloEstimate {
        mean: intercept,
        std_error: (sigma2 * (1.0 / count as f64 + leverage)).sqrt(),
        n_samples: count as u64,
    })
}
