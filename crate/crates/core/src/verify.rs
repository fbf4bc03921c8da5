//! Independent numerical oracles for the closed forms.
//!
//! Volumes and expectations are recovered by integrating the coordinate
//! volume density with tensor-product quadrature, scale factors by central
//! differences of the coordinate map, and volumes again by bounding-box
//! Monte Carlo. Two quadrature rules are available so they can check each
//! other.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coords::{forward_map, scale_factors, PhsCoords, PhsShape, ScaleFactors};
use crate::measures::{
    beta_fn, convergence_rate, expected_diameter, mu_prime, phs_volume, unit_ball_volume,
};
use crate::sampling::{propose_in_box, RandomStream};
use crate::sequence::MonteCarloEstimate;
use crate::{Error, Result};

/// Largest dimension accepted by [`quadrature_phs_volume`].
pub const MAX_QUADRATURE_DIMENSION: usize = 6;
pub const MAX_POINTS_PER_AXIS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre,
    /// Composite Simpson; an even point count is rounded up to the next odd one.
    CompositeSimpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    points_per_axis: usize,
    rule: QuadratureRule,
}

impl QuadratureSpec {
    pub fn new(points_per_axis: usize, rule: QuadratureRule) -> Result<Self> {
        if !(2..=MAX_POINTS_PER_AXIS).contains(&points_per_axis) {
            return Err(Error::invalid(
                "points_per_axis",
                format!("must be in 2..={MAX_POINTS_PER_AXIS}, got {points_per_axis}"),
            ));
        }
        Ok(QuadratureSpec {
            points_per_axis,
            rule,
        })
    }

    pub fn gauss_legendre(points_per_axis: usize) -> Result<Self> {
        Self::new(points_per_axis, QuadratureRule::GaussLegendre)
    }

    pub fn simpson(points_per_axis: usize) -> Result<Self> {
        Self::new(points_per_axis, QuadratureRule::CompositeSimpson)
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    /// Nodes and weights on `[lo, hi]`.
    pub fn nodes(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            QuadratureRule::GaussLegendre => {
                let (x, w) = gauss_legendre_unit(self.points_per_axis);
                let half = (hi - lo) / 2.0;
                let mid = (hi + lo) / 2.0;
                (
                    x.iter().map(|t| mid + half * t).collect(),
                    w.iter().map(|v| v * half).collect(),
                )
            }
            QuadratureRule::CompositeSimpson => {
                let m = self.points_per_axis | 1;
                let m = m.max(3);
                let h = (hi - lo) / (m - 1) as f64;
                let x = (0..m).map(|i| lo + h * i as f64).collect();
                let w = (0..m)
                    .map(|i| {
                        let c = if i == 0 || i == m - 1 {
                            1.0
                        } else if i % 2 == 1 {
                            4.0
                        } else {
                            2.0
                        };
                        c * h / 3.0
                    })
                    .collect();
                (x, w)
            }
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            points_per_axis: 128,
            rule: QuadratureRule::GaussLegendre,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

pub fn integrate_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, spec: &QuadratureSpec) -> f64 {
    let (x, w) = spec.nodes(lo, hi);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

/// Tensor-product quadrature of `f` over the box `ranges`, evaluating `f` at
/// every grid node.
pub fn tensor_integrate(
    ranges: &[(f64, f64)],
    spec: &QuadratureSpec,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let axes: Vec<_> = ranges.iter().map(|&(lo, hi)| spec.nodes(lo, hi)).collect();
    let dim = axes.len();
    if dim == 0 {
        return f(&[]);
    }
    let mut idx = vec![0usize; dim];
    let mut point: Vec<f64> = axes.iter().map(|(x, _)| x[0]).collect();
    let mut total = 0.0;
    loop {
        let w: f64 = idx.iter().zip(&axes).map(|(&i, (_, w))| w[i]).product();
        total += w * f(&point);
        // odometer increment, last axis fastest
        let mut k = dim;
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].0.len() {
                point[k] = axes[k].0[idx[k]];
                break;
            }
            idx[k] = 0;
            point[k] = axes[k].0[0];
        }
    }
}

/// Integration ranges of the coordinate volume integral: `mu` up to the
/// surface, `nu` over `[0, pi]` (`[0, 2pi]` in 2D), inner `psi` over
/// `[0, pi]` and the last `psi` over `[0, 2pi]`.
pub fn phs_coordinate_ranges(shape: &PhsShape) -> Vec<(f64, f64)> {
    let n = shape.n();
    let mut ranges = vec![(0.0, mu_prime(shape))];
    ranges.push((0.0, if n == 2 { TAU } else { PI }));
    for k in 0..n - 2 {
        ranges.push((0.0, if k + 1 == n - 2 { TAU } else { PI }));
    }
    ranges
}

/// Volume of `shape` by tensor-product quadrature of the coordinate volume
/// density over [`phs_coordinate_ranges`].
///
/// Every grid node is visited. The density is a product of per-axis factors
/// (the `(mu, nu)` pair being coupled), so those factors are tabulated once
/// per axis and multiplied along the way instead of re-evaluating the
/// transcendental functions at each node.
pub fn quadrature_phs_volume(shape: &PhsShape, spec: &QuadratureSpec) -> Result<f64> {
    let n = shape.n();
    if n > MAX_QUADRATURE_DIMENSION {
        return Err(Error::DimensionTooLarge {
            n,
            max: MAX_QUADRATURE_DIMENSION,
        });
    }
    if shape.is_degenerate() {
        return Ok(0.0);
    }
    let ranges = phs_coordinate_ranges(shape);
    let a = shape.a();
    let k = (n - 2) as i32;

    let (mus, wmu) = spec.nodes(ranges[0].0, ranges[0].1);
    let (nus, wnu) = spec.nodes(ranges[1].0, ranges[1].1);
    let mut outer = Vec::with_capacity(mus.len() * nus.len());
    let an = a.powi(n as i32);
    for (mu, wm) in mus.iter().zip(&wmu) {
        let sh = mu.sinh();
        for (nu, wn) in nus.iter().zip(&wnu) {
            let s = nu.sin();
            outer.push(wm * wn * an * (sh * sh + s * s) * (sh * s).abs().powi(k));
        }
    }
    // psi_i carries sin^{n-2-i}; the last angle has power 0.
    let tables: Vec<Vec<f64>> = ranges[2..]
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let (x, w) = spec.nodes(lo, hi);
            let power = k - 1 - i as i32;
            x.iter()
                .zip(&w)
                .map(|(p, wp)| wp * p.sin().abs().powi(power))
                .collect()
        })
        .collect();

    Ok(outer.iter().map(|&o| visit_nodes(&tables, o)).sum())
}

fn visit_nodes(tables: &[Vec<f64>], partial: f64) -> f64 {
    match tables {
        [] => partial,
        [last] => last.iter().map(|t| partial * t).sum(),
        [first, rest @ ..] => first.iter().map(|t| visit_nodes(rest, partial * t)).sum(),
    }
}

/// `∫_0^upper cosh(mu) sinh^k(mu) dmu` by quadrature.
pub fn cosh_sinh_power_integral(k: u32, upper: f64, spec: &QuadratureSpec) -> f64 {
    integrate_1d(|m| m.cosh() * m.sinh().powi(k as i32), 0.0, upper, spec)
}

/// Expected next diameter assembled from the two radial integrals:
///
/// ```text
/// n d_min^{n+1} / (d (d² - d_min²)^{(n-1)/2})
///     * ( ∫ cosh sinh^n + (n-1)/n ∫ cosh sinh^{n-2} )    over [0, mu']
/// ```
///
/// The degenerate shape returns its limit `d_min`.
pub fn quadrature_expected_diameter(shape: &PhsShape, spec: &QuadratureSpec) -> Result<f64> {
    let (n, d, d_min) = (shape.n(), shape.d(), shape.d_min());
    if shape.is_degenerate() {
        return Ok(d_min);
    }
    let upper = mu_prime(shape);
    let nf = n as f64;
    let high = cosh_sinh_power_integral(n as u32, upper, spec);
    let low = cosh_sinh_power_integral(n as u32 - 2, upper, spec);
    // d_min^{n+1} / (d² - d_min²)^{(n-1)/2}, formed as a power of a ratio
    let ratio = d_min / ((d - d_min) * (d + d_min)).sqrt();
    let prefactor = nf * d_min * d_min * ratio.powi(n as i32 - 1) / d;
    Ok(prefactor * (high + (nf - 1.0) / nf * low))
}

/// Scale factors as norms of central-difference basis vectors of the
/// coordinate map.
pub fn finite_difference_scale_factors(
    shape: &PhsShape,
    p: &PhsCoords,
    step: f64,
) -> Result<ScaleFactors> {
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::invalid("step", format!("must be in (0, 1e-3], got {step}")));
    }
    if p.dim() != shape.n() {
        return Err(Error::DimensionMismatch {
            expected: shape.n(),
            found: p.dim(),
        });
    }
    let a = shape.a();
    let mut base = vec![p.mu(), p.nu()];
    base.extend_from_slice(p.psis());
    let eval = |c: &[f64]| forward_map(a, c[0], c[1], &c[2..]);
    let norms: Vec<f64> = (0..base.len())
        .map(|j| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[j] += step;
            minus[j] -= step;
            let (xp, xm) = (eval(&plus), eval(&minus));
            xp.iter()
                .zip(&xm)
                .map(|(u, v)| ((u - v) / (2.0 * step)).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(ScaleFactors {
        h_mu: norms[0],
        h_nu: norms[1],
        h_psis: norms[2..].to_vec(),
    })
}

/// `∫_0^pi sin^k(theta) dtheta` by quadrature.
pub fn sin_power_integral(k: u32, spec: &QuadratureSpec) -> f64 {
    integrate_1d(|t| t.sin().powi(k as i32), 0.0, PI, spec)
}

/// Volume by bounding-box hit ratio, with its binomial standard error.
pub fn mc_volume(
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
    let box_volume = bounding_box_volume(shape);
    let mut x = vec![0.0; shape.n()];
    let hits = (0..n_samples)
        .filter(|_| propose_in_box(shape, &mut x, rng))
        .count() as f64;
    let p = hits / n_samples as f64;
    Ok(MonteCarloEstimate {
        mean: p * box_volume,
        std_error: box_volume * (p * (1.0 - p) / n_samples as f64).sqrt(),
        n_samples,
    })
}

/// Volume of `[-d/2, d/2] x [-c, c]^(n-1)`.
pub fn bounding_box_volume(shape: &PhsShape) -> f64 {
    shape.d() * (2.0 * shape.conjugate_semi_axis()).powi(shape.n() as i32 - 1)
}

/// Outcome of one oracle check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    /// Worst observed error (relative, absolute or in standard errors; see `name`).
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        OracleCheck {
            name: name.into(),
            error,
            tolerance,
            passed: error <= tolerance,
        }
    }
}

fn rel_err(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Diameter ratios `d / d_min` of the closure grids.
pub const CLOSURE_RATIOS: [f64; 3] = [1.2, 2.0, 5.0];

/// Quadrature points per axis used by the volume closure in dimension `n`.
pub fn closure_points(n: usize) -> usize {
    if n <= 4 {
        128
    } else {
        32
    }
}

/// Worst relative error of tensor quadrature against the closed-form volume
/// in dimension `n` over [`CLOSURE_RATIOS`].
pub fn volume_closure_error(n: usize) -> Result<f64> {
    let spec = QuadratureSpec::gauss_legendre(closure_points(n))?;
    let mut worst: f64 = 0.0;
    for r in CLOSURE_RATIOS {
        let shape = PhsShape::new(n, 1.0, r)?;
        worst = worst.max(rel_err(quadrature_phs_volume(&shape, &spec)?, phs_volume(&shape)));
    }
    Ok(worst)
}

pub fn expectation_closure_error(n: usize) -> Result<f64> {
    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for r in CLOSURE_RATIOS {
        let shape = PhsShape::new(n, 1.0, r)?;
        let q = quadrature_expected_diameter(&shape, &spec)?;
        worst = worst.max(rel_err(q, expected_diameter(r, 1.0, n)?));
    }
    Ok(worst)
}

/// Random coordinates bounded away from the degenerate set.
pub fn random_regular_coords(n: usize, rng: &mut RandomStream) -> PhsCoords {
    let margin = 0.1;
    let mu = rng.random_range(margin..2.0);
    let nu = if n == 2 {
        // stay away from the focal axis at nu = 0, pi, 2pi
        let half: f64 = rng.random_range(margin..PI - margin);
        if rng.random::<bool>() {
            half
        } else {
            half + PI
        }
    } else {
        rng.random_range(margin..PI - margin)
    };
    let psis = (0..n.saturating_sub(2))
        .map(|i| {
            if i + 1 == n - 2 {
                rng.random_range(0.0..TAU)
            } else {
                rng.random_range(margin..PI - margin)
            }
        })
        .collect();
    PhsCoords::new(mu, nu, psis).expect("sampled coordinates are in range")
}

/// Worst relative disagreement between finite-difference and closed-form
/// scale factors at `points` random coordinates in dimension `n`.
pub fn jacobian_closure_error(n: usize, points: usize, rng: &mut RandomStream) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let a = rng.random_range(0.2..3.0);
        let shape = PhsShape::new(n, 2.0 * a, 4.0 * a)?;
        let p = random_regular_coords(n, rng);
        let closed = scale_factors(&shape, &p)?;
        let fd = finite_difference_scale_factors(&shape, &p, 1e-6)?;
        for (c, f) in closed.to_vec().iter().zip(fd.to_vec()) {
            worst = worst.max(rel_err(f, *c));
        }
    }
    Ok(worst)
}

/// Runs every oracle check and reports each one.
pub fn run_oracle_suite(seed: u64) -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    for n in 2..=MAX_QUADRATURE_DIMENSION {
        checks.push(OracleCheck::new(
            format!("volume_quadrature_n{n}"),
            volume_closure_error(n)?,
            1e-6,
        ));
    }
    for n in 2..=MAX_QUADRATURE_DIMENSION {
        checks.push(OracleCheck::new(
            format!("expectation_quadrature_n{n}"),
            expectation_closure_error(n)?,
            1e-9,
        ));
    }
    let mut rng = RandomStream::new(seed, 0);
    for n in [2, 3, 4, 5, 7] {
        checks.push(OracleCheck::new(
            format!("scale_factor_finite_difference_n{n}"),
            jacobian_closure_error(n, 100, &mut rng)?,
            1e-6,
        ));
    }

    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for k in 0..=16 {
        let b = beta_fn((k as f64 + 1.0) / 2.0, 0.5)?;
        worst = worst.max((sin_power_integral(k, &spec) - b).abs());
    }
    checks.push(OracleCheck::new("sin_power_integral_vs_beta", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for n in 3..=8 {
        let angular: f64 = (1..=n as u32 - 2).map(|k| sin_power_integral(k, &spec)).product();
        worst = worst.max(rel_err(angular * TAU, n as f64 * unit_ball_volume(n)?));
    }
    checks.push(OracleCheck::new("angular_factor_vs_unit_ball", worst, 1e-9));

    let mut worst: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let (m, k) = (0.5 + 0.5 * i as f64, 0.5 + 0.5 * j as f64);
            worst = worst.max(rel_err(beta_fn(m + 1.0, k)?, m / (m + k) * beta_fn(m, k)?));
        }
    }
    checks.push(OracleCheck::new("beta_recursion", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for n in 2..=32 {
        let rhs = (n as f64 - 1.0) / n as f64
            * beta_fn((n as f64 - 1.0) / 2.0, 0.5)?
            * unit_ball_volume(n - 1)?;
        worst = worst.max(rel_err(unit_ball_volume(n)?, rhs));
    }
    checks.push(OracleCheck::new("unit_ball_recursion", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for n in 2..=16usize {
        worst = worst.max(rel_err(expectation_slope_at_fixed_point(n, 1.0)?, convergence_rate(n)?));
    }
    checks.push(OracleCheck::new("rate_vs_derivative", worst, 1e-6));

    checks.push(OracleCheck::new(
        "simpson_convergence_order",
        1.0 / simpson_halving_ratio(),
        0.25,
    ));
    Ok(checks)
}

/// Derivative of the expected next diameter with respect to the current one
/// at `d_i = d_min`, by the second-order one-sided difference with step
/// `1e-6 d_min` (the map is only defined for `d_i >= d_min`).
pub fn expectation_slope_at_fixed_point(n: usize, d_min: f64) -> Result<f64> {
    let h = 1e-6 * d_min;
    let e = |d: f64| expected_diameter(d, d_min, n);
    Ok((-3.0 * e(d_min)? + 4.0 * e(d_min + h)? - e(d_min + 2.0 * h)?) / (2.0 * h))
}

/// Error reduction of composite Simpson on `∫_0^2 cosh sinh^3` when the
/// point count goes from 33 to 65.
pub fn simpson_halving_ratio() -> f64 {
    let upper = 2.0_f64;
    let exact = upper.sinh().powi(4) / 4.0;
    let coarse = cosh_sinh_power_integral(3, upper, &QuadratureSpec::simpson(33).unwrap());
    let fine = cosh_sinh_power_integral(3, upper, &QuadratureSpec::simpson(65).unwrap());
    (coarse - exact).abs() / (fine - exact).abs()
}
