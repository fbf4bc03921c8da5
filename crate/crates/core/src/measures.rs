//! Closed-form measures of prolate hyperspheroids and the special functions
//! behind them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coords::PhsShape;
use crate::{Error, Result, MAX_DIMENSION};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A special-function result that also carries its natural logarithm when
/// the value itself may not be representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialFunctionValue {
    pub value: f64,
    pub log_scale: Option<f64>,
}

impl SpecialFunctionValue {
    pub fn from_log(log: f64) -> Self {
        SpecialFunctionValue {
            value: log.exp(),
            log_scale: Some(log),
        }
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::invalid(name, format!("must be finite and positive, got {x}")));
    }
    Ok(())
}

fn check_dimension(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_DIMENSION {
        return Err(Error::invalid(
            "n",
            format!("dimension must be in {min}..={MAX_DIMENSION}, got {n}"),
        ));
    }
    Ok(())
}

/// `ln Γ(x)` for `x > 0`, by the Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_positive("x", x)?;
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x) Γ(1 - x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (x + 0.5) * t.ln() - t + series.ln()
}

pub fn gamma_fn(x: f64) -> Result<f64> {
    Ok(ln_gamma(x)?.exp())
}

pub fn ln_beta(m: f64, n: f64) -> Result<f64> {
    check_positive("m", m)?;
    check_positive("n", n)?;
    Ok(ln_gamma_unchecked(m) + ln_gamma_unchecked(n) - ln_gamma_unchecked(m + n))
}

/// `B(m, n) = Γ(m) Γ(n) / Γ(m + n)`, evaluated in log space.
pub fn beta_fn(m: f64, n: f64) -> Result<f64> {
    Ok(ln_beta(m, n)?.exp())
}

pub fn beta_value(m: f64, n: f64) -> Result<SpecialFunctionValue> {
    Ok(SpecialFunctionValue::from_log(ln_beta(m, n)?))
}

pub fn ln_unit_ball_volume(n: usize) -> Result<f64> {
    check_dimension(n, 1)?;
    let half = n as f64 / 2.0;
    Ok(half * PI.ln() - ln_gamma_unchecked(half + 1.0))
}

/// Volume of the unit `n`-ball, `ζ_n = Γ(1/2)^n / Γ(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> Result<f64> {
    Ok(ln_unit_ball_volume(n)?.exp())
}

pub fn unit_ball_value(n: usize) -> Result<SpecialFunctionValue> {
    Ok(SpecialFunctionValue::from_log(ln_unit_ball_volume(n)?))
}

/// `V = ζ_n d (d² - d_min²)^((n-1)/2) / 2^n`; zero for the degenerate shape.
pub fn phs_volume(shape: &PhsShape) -> f64 {
    let n = shape.n();
    let (d, d_min) = (shape.d(), shape.d_min());
    let zeta = ln_unit_ball_volume(n).expect("shape dimension is validated").exp();
    let gap = (d - d_min) * (d + d_min);
    zeta * d * gap.powf((n as f64 - 1.0) / 2.0) / 2f64.powi(n as i32)
}

/// Surface coordinate `μ' = arcosh(d / d_min)`.
///
/// Evaluated as `asinh(sqrt(d² - d_min²) / d_min)`, which keeps full
/// relative precision for nearly degenerate shapes.
pub fn mu_prime(shape: &PhsShape) -> f64 {
    let (d, d_min) = (shape.d(), shape.d_min());
    (((d - d_min) * (d + d_min)).max(0.0).sqrt() / d_min).asinh()
}

/// Expected transverse diameter of the next hyperspheroid, when it passes
/// through a uniform sample of the current one:
/// `(n d_i² + d_min²) / ((n + 1) d_i)`.
pub fn expected_diameter(d_i: f64, d_min: f64, n: usize) -> Result<f64> {
    check_positive("d_min", d_min)?;
    if !d_i.is_finite() || d_i < d_min {
        return Err(Error::invalid(
            "d_i",
            format!("must be finite and at least d_min = {d_min}, got {d_i}"),
        ));
    }
    check_dimension(n, 2)?;
    let nf = n as f64;
    let e = (nf * d_i * d_i + d_min * d_min) / ((nf + 1.0) * d_i);
    Ok(e.clamp(d_min, d_i))
}

/// Linear convergence factor `η = (n - 1) / (n + 1)` of the expected diameter
/// at the fixed point `d_min`.
pub fn convergence_rate(n: usize) -> Result<f64> {
    check_dimension(n, 2)?;
    let nf = n as f64;
    Ok((nf - 1.0) / (nf + 1.0))
}
