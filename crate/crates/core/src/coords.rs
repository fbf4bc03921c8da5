//! Prolate hyperspheroid coordinates.
//!
//! A point is described by `(mu, nu, psi_1, ..., psi_{n-2})`: a 2D elliptic
//! pair `(mu, nu)` about the focal axis `x_1`, rotated into `R^n` by the
//! spherical angles `psi_i`. With focal half-distance `a`,
//!
//! ```text
//! x_1 = a cosh(mu) cos(nu)
//! x_2 = a sinh(mu) sin(nu) cos(psi_1)
//! x_3 = a sinh(mu) sin(nu) sin(psi_1) cos(psi_2)
//! ...
//! x_n = a sinh(mu) sin(nu) sin(psi_1) ... sin(psi_{n-2})
//! ```
//!
//! Every point with coordinate `mu` lies on the hyperspheroid of transverse
//! diameter `d_min cosh(mu)`, where `d_min = 2a` is the interfocal distance.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, MAX_DIMENSION};

/// Radial norms below `ON_AXIS_EPS * a` are treated as lying on the focal axis.
const ON_AXIS_EPS: f64 = 1e-12;

/// A confocal prolate hyperspheroid with canonical foci at `(±d_min/2, 0, ..., 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhsShape {
    n: usize,
    d_min: f64,
    d: f64,
}

impl PhsShape {
    pub fn new(n: usize, d_min: f64, d: f64) -> Result<Self> {
        if !(2..=MAX_DIMENSION).contains(&n) {
            return Err(Error::invalid(
                "n",
                format!("dimension must be in 2..={MAX_DIMENSION}, got {n}"),
            ));
        }
        if !(d_min.is_finite() && d_min > 0.0) {
            return Err(Error::invalid(
                "d_min",
                format!("must be finite and positive, got {d_min}"),
            ));
        }
        if !d.is_finite() || d < d_min {
            return Err(Error::invalid(
                "d",
                format!("must be finite and at least d_min = {d_min}, got {d}"),
            ));
        }
        Ok(PhsShape { n, d_min, d })
    }

    /// Same foci and dimension, different transverse diameter.
    pub fn with_diameter(&self, d: f64) -> Result<Self> {
        PhsShape::new(self.n, self.d_min, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Transverse diameter.
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Focal half-distance `a = d_min / 2`.
    pub fn a(&self) -> f64 {
        self.d_min / 2.0
    }

    pub fn transverse_semi_axis(&self) -> f64 {
        self.d / 2.0
    }

    /// Conjugate semi-axis `c = sqrt(d^2 - d_min^2) / 2`.
    pub fn conjugate_semi_axis(&self) -> f64 {
        ((self.d - self.d_min) * (self.d + self.d_min)).sqrt() / 2.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.d == self.d_min
    }

    /// The canonical foci `(-a, 0, ..., 0)` and `(+a, 0, ..., 0)`.
    pub fn foci(&self) -> (CartesianPoint, CartesianPoint) {
        let mut lo = vec![0.0; self.n];
        let mut hi = vec![0.0; self.n];
        lo[0] = -self.a();
        hi[0] = self.a();
        (CartesianPoint(lo), CartesianPoint(hi))
    }
}

/// A point in `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartesianPoint(pub Vec<f64>);

impl CartesianPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        CartesianPoint(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for CartesianPoint {
    fn from(v: Vec<f64>) -> Self {
        CartesianPoint(v)
    }
}

/// A point in prolate hyperspheroid coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhsCoords {
    mu: f64,
    nu: f64,
    psis: Vec<f64>,
}

impl PhsCoords {
    /// Validates the coordinate ranges for ambient dimension `psis.len() + 2`.
    ///
    /// `mu >= 0`; `nu` in `[0, pi]` (or `[0, 2pi)` when there are no `psis`,
    /// i.e. in 2D); every `psi` but the last in `[0, pi]`; the last in
    /// `[0, 2pi)`.
    pub fn new(mu: f64, nu: f64, psis: Vec<f64>) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidCoordinates(format!(
                "mu must be finite and non-negative, got {mu}"
            )));
        }
        let nu_ok = if psis.is_empty() {
            (0.0..TAU).contains(&nu)
        } else {
            (0.0..=PI).contains(&nu)
        };
        if !nu_ok {
            return Err(Error::InvalidCoordinates(format!("nu out of range: {nu}")));
        }
        if let Some((last, inner)) = psis.split_last() {
            if let Some((i, p)) = inner
                .iter()
                .enumerate()
                .find(|(_, p)| !(0.0..=PI).contains(*p))
            {
                return Err(Error::InvalidCoordinates(format!(
                    "psi_{} must be in [0, pi], got {p}",
                    i + 1
                )));
            }
            if !(0.0..TAU).contains(last) {
                return Err(Error::InvalidCoordinates(format!(
                    "psi_{} must be in [0, 2pi), got {last}",
                    psis.len()
                )));
            }
        }
        Ok(PhsCoords { mu, nu, psis })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn psis(&self) -> &[f64] {
        &self.psis
    }

    /// Ambient dimension implied by the number of angles.
    pub fn dim(&self) -> usize {
        self.psis.len() + 2
    }
}

/// Norms of the coordinate basis vectors at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFactors {
    pub h_mu: f64,
    pub h_nu: f64,
    pub h_psis: Vec<f64>,
}

impl ScaleFactors {
    /// Product of all scale factors, i.e. the volume Jacobian.
    pub fn product(&self) -> f64 {
        self.h_mu * self.h_nu * self.h_psis.iter().product::<f64>()
    }

    /// All factors in coordinate order `(mu, nu, psi_1, ...)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.h_psis.len() + 2);
        out.push(self.h_mu);
        out.push(self.h_nu);
        out.extend_from_slice(&self.h_psis);
        out
    }
}

fn check_dim(shape: &PhsShape, found: usize) -> Result<()> {
    if found != shape.n() {
        return Err(Error::DimensionMismatch {
            expected: shape.n(),
            found,
        });
    }
    Ok(())
}

/// The raw coordinate map for focal half-distance `a`, without range checks.
///
/// The formulas extend analytically outside the nominal coordinate ranges,
/// which is what finite differencing near range boundaries relies on.
pub fn forward_map(a: f64, mu: f64, nu: f64, psis: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(psis.len() + 2);
    x.push(a * mu.cosh() * nu.cos());
    // running product a sinh(mu) sin(nu) sin(psi_1) ... sin(psi_{k-1})
    let mut radial = a * mu.sinh() * nu.sin();
    for psi in psis {
        x.push(radial * psi.cos());
        radial *= psi.sin();
    }
    x.push(radial);
    x
}

pub fn phs_to_cartesian(shape: &PhsShape, p: &PhsCoords) -> Result<CartesianPoint> {
    check_dim(shape, p.dim())?;
    Ok(CartesianPoint(forward_map(shape.a(), p.mu, p.nu, &p.psis)))
}

/// Inverts [`phs_to_cartesian`] through the focal radii.
///
/// `mu = arcosh((r1 + r2) / d_min)` and `nu = arccos((r1 - r2) / d_min)`,
/// where `r1` and `r2` are the distances to the negative and positive focus.
/// On the focal axis the angles `psi_i` are undefined and are set to zero.
pub fn cartesian_to_phs(shape: &PhsShape, x: &CartesianPoint) -> Result<PhsCoords> {
    check_dim(shape, x.dim())?;
    let a = shape.a();
    let d_min = shape.d_min();
    let xs = x.as_slice();
    let rho2: f64 = xs[1..].iter().map(|v| v * v).sum();
    let r1 = ((xs[0] + a).powi(2) + rho2).sqrt();
    let r2 = ((xs[0] - a).powi(2) + rho2).sqrt();

    let mu = ((r1 + r2) / d_min).max(1.0).acosh();
    let mut nu = ((r1 - r2) / d_min).clamp(-1.0, 1.0).acos();

    let n = shape.n();
    if n == 2 {
        if xs[1] < 0.0 {
            nu = TAU - nu;
        }
        if nu >= TAU {
            nu = 0.0;
        }
        return Ok(PhsCoords {
            mu,
            nu,
            psis: Vec::new(),
        });
    }

    let mut psis = vec![0.0; n - 2];
    if rho2.sqrt() >= ON_AXIS_EPS * a {
        spherical_angles(&xs[1..], &mut psis);
    }
    Ok(PhsCoords { mu, nu, psis })
}

/// Hyperspherical angles of `y` (length `m >= 2`) into `out` (length `m - 1`).
fn spherical_angles(y: &[f64], out: &mut [f64]) {
    let m = y.len();
    // tail[k] = |(y_k, ..., y_{m-1})|
    let mut tail = vec![0.0_f64; m + 1];
    for k in (0..m).rev() {
        tail[k] = tail[k + 1].hypot(y[k]);
    }
    for k in 0..m - 2 {
        out[k] = tail[k + 1].atan2(y[k]);
    }
    let mut last = y[m - 1].atan2(y[m - 2]);
    if last < 0.0 {
        last += TAU;
    }
    if last >= TAU {
        last = 0.0;
    }
    out[m - 2] = last;
}

/// Closed-form scale factors.
///
/// `h_mu = h_nu = a sqrt(sinh^2 mu + sin^2 nu)` and
/// `h_psi_i = a sinh(mu) sin(nu) sin(psi_1) ... sin(psi_{i-1})`.
pub fn scale_factors(shape: &PhsShape, p: &PhsCoords) -> Result<ScaleFactors> {
    check_dim(shape, p.dim())?;
    let a = shape.a();
    let sh = p.mu.sinh();
    let s = p.nu.sin();
    let h = a * (sh * sh + s * s).sqrt();
    let mut h_psis = Vec::with_capacity(p.psis.len());
    let mut running = a * sh * s;
    for psi in &p.psis {
        h_psis.push(running.abs());
        running *= psi.sin();
    }
    Ok(ScaleFactors {
        h_mu: h,
        h_nu: h,
        h_psis,
    })
}

/// Differential-volume density (the Jacobian determinant of the transform):
///
/// ```text
/// a^n (sinh^2 mu + sin^2 nu) sinh^{n-2} mu sin^{n-2} nu prod_{i=1}^{n-3} sin^{n-2-i} psi_i
/// ```
pub fn volume_density(shape: &PhsShape, p: &PhsCoords) -> Result<f64> {
    check_dim(shape, p.dim())?;
    Ok(density_at(shape.a(), p.mu, p.nu, &p.psis))
}

pub(crate) fn density_at(a: f64, mu: f64, nu: f64, psis: &[f64]) -> f64 {
    let n = psis.len() + 2;
    let sh = mu.sinh();
    let s = nu.sin();
    let k = (n - 2) as i32;
    let mut v = a.powi(n as i32) * (sh * sh + s * s) * (sh * s).abs().powi(k);
    for (i, psi) in psis.iter().enumerate().take(n.saturating_sub(3)) {
        v *= psi.sin().abs().powi(k - 1 - i as i32);
    }
    v
}

/// A proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    rotation: DMatrix<f64>,
    translation: DVector<f64>,
    half_distance: f64,
}

impl RigidTransform {
    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// Half the distance between the foci the transform was built for.
    pub fn half_distance(&self) -> f64 {
        self.half_distance
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &CartesianPoint) -> Result<CartesianPoint> {
        self.check(x)?;
        let v = &self.rotation * DVector::from_column_slice(x.as_slice()) + &self.translation;
        Ok(CartesianPoint(v.as_slice().to_vec()))
    }

    pub fn apply_inverse(&self, x: &CartesianPoint) -> Result<CartesianPoint> {
        self.check(x)?;
        let v = self.rotation.tr_mul(&(DVector::from_column_slice(x.as_slice()) - &self.translation));
        Ok(CartesianPoint(v.as_slice().to_vec()))
    }

    fn check(&self, x: &CartesianPoint) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }
}

/// Builds the rigid motion taking the canonical foci `(∓a, 0, ..., 0)` to
/// `f1` and `f2`, where `a = |f2 - f1| / 2`.
///
/// The rotation is a Householder reflection sending `e_1` to the unit
/// interfocal direction, composed with a reflection that fixes `e_1` so the
/// determinant is `+1`.
pub fn align_frame(f1: &CartesianPoint, f2: &CartesianPoint) -> Result<RigidTransform> {
    let n = f1.dim();
    if f2.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f2.dim(),
        });
    }
    if n < 2 {
        return Err(Error::invalid("f1", "foci must have dimension at least 2"));
    }
    let p = DVector::from_column_slice(f1.as_slice());
    let q = DVector::from_column_slice(f2.as_slice());
    let diff = &q - &p;
    let dist = diff.norm();
    if !(dist.is_finite() && dist > 0.0) {
        return Err(Error::CoincidentFoci);
    }
    let u = diff / dist;

    // Pick the sign that keeps the Householder vector away from zero.
    let (v, flip) = if u[0] > 0.0 {
        let mut v = u.clone();
        v[0] += 1.0;
        (v, 0)
    } else {
        let mut v = -u.clone();
        v[0] += 1.0;
        (v, n - 1)
    };
    let vv = v.dot(&v);
    let mut rotation = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    // u[0] > 0: H e_1 = -u, so negate column 0; otherwise H e_1 = u, negate the last.
    rotation.column_mut(flip).neg_mut();

    Ok(RigidTransform {
        rotation,
        translation: (p + q) * 0.5,
        half_distance: dist / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shape(n: usize, a: f64) -> PhsShape {
        PhsShape::new(n, 2.0 * a, 4.0 * a).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert!(PhsShape::new(1, 1.0, 2.0).is_err());
        assert!(PhsShape::new(65, 1.0, 2.0).is_err());
        assert!(PhsShape::new(3, 0.0, 2.0).is_err());
        assert!(PhsShape::new(3, 2.0, 1.0).is_err());
        assert!(PhsShape::new(3, 1.0, f64::NAN).is_err());
        let s = PhsShape::new(3, 2.0, 2.0).unwrap();
        assert!(s.is_degenerate());
        assert_eq!(s.conjugate_semi_axis(), 0.0);
        let s = PhsShape::new(3, 3.0, 5.0).unwrap();
        assert_eq!(s.a(), 1.5);
        assert_relative_eq!(s.conjugate_semi_axis(), 2.0);
        let (f1, f2) = s.foci();
        assert_eq!(f1.distance(&f2), 3.0);
    }

    #[test]
    fn coords_validation() {
        assert!(PhsCoords::new(-0.1, 0.0, vec![0.0]).is_err());
        assert!(PhsCoords::new(0.1, 4.0, vec![0.0]).is_err());
        assert!(PhsCoords::new(0.1, 4.0, vec![]).is_ok());
        assert!(PhsCoords::new(0.1, TAU, vec![]).is_err());
        assert!(PhsCoords::new(0.1, 1.0, vec![4.0, 0.0]).is_err());
        assert!(PhsCoords::new(0.1, 1.0, vec![3.0, 6.0]).is_ok());
        assert!(PhsCoords::new(0.1, 1.0, vec![3.0, TAU]).is_err());
    }

    #[test]
    fn forward_hits_the_foci() {
        let p = PhsCoords::new(0.0, 0.0, vec![0.0]).unwrap();
        let x = phs_to_cartesian(&shape(3, 1.0), &p).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 0.0, 0.0]);

        let p = PhsCoords::new(0.0, PI, vec![]).unwrap();
        let x = phs_to_cartesian(&shape(2, 1.0), &p).unwrap();
        assert_relative_eq!(x.0[0], -1.0);
        assert!(x.0[1].abs() < 1e-15);
    }

    #[test]
    fn forward_on_conjugate_axis() {
        let mu = (2.0 + 3f64.sqrt()).ln();
        let p = PhsCoords::new(mu, PI / 2.0, vec![0.0]).unwrap();
        let s = shape(3, 1.0);
        let x = phs_to_cartesian(&s, &p).unwrap();
        assert!(x.0[0].abs() < 1e-15);
        assert_relative_eq!(x.0[1], 3f64.sqrt(), max_relative = 1e-14);
        assert_eq!(x.0[2], 0.0);
        let (f1, f2) = s.foci();
        assert_relative_eq!(x.distance(&f1) + x.distance(&f2), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = PhsCoords::new(0.5, 0.5, vec![0.1, 0.2]).unwrap();
        assert_eq!(
            phs_to_cartesian(&shape(3, 1.0), &p),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4
            })
        );
        assert!(cartesian_to_phs(&shape(3, 1.0), &CartesianPoint(vec![0.0; 2])).is_err());
    }

    #[test]
    fn inverse_examples() {
        let c = cartesian_to_phs(&shape(2, 1.0), &CartesianPoint(vec![1.0, 0.0])).unwrap();
        assert_eq!((c.mu(), c.nu()), (0.0, 0.0));

        let c = cartesian_to_phs(&shape(3, 1.0), &CartesianPoint(vec![0.0, 3f64.sqrt(), 0.0]))
            .unwrap();
        assert_relative_eq!(c.mu().cosh(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(c.nu(), PI / 2.0, max_relative = 1e-14);
        assert_eq!(c.psis(), &[0.0]);
    }

    #[test]
    fn inverse_2d_uses_lower_half_plane() {
        let s = shape(2, 1.0);
        let p = PhsCoords::new(0.7, 4.0, vec![]).unwrap();
        let x = phs_to_cartesian(&s, &p).unwrap();
        assert!(x.0[1] < 0.0);
        let back = cartesian_to_phs(&s, &x).unwrap();
        assert_relative_eq!(back.nu(), 4.0, epsilon = 1e-12);
        assert_relative_eq!(back.mu(), 0.7, max_relative = 1e-12);
    }

    #[test]
    fn on_axis_points_get_zero_psis() {
        let s = shape(4, 1.0);
        let c = cartesian_to_phs(&s, &CartesianPoint(vec![3.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(c.psis(), &[0.0, 0.0]);
        assert_eq!(c.nu(), 0.0);
        assert_relative_eq!(c.mu().cosh(), 3.0, max_relative = 1e-14);
        // inside the focal segment mu = 0
        let c = cartesian_to_phs(&s, &CartesianPoint(vec![0.25, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(c.mu(), 0.0);
        assert_relative_eq!(c.nu(), 0.25f64.acos(), max_relative = 1e-12);
    }

    #[test]
    fn scale_factor_examples() {
        let s = shape(4, 1.0);
        let h = scale_factors(&s, &PhsCoords::new(0.0, PI / 2.0, vec![0.3, 1.0]).unwrap())
            .unwrap();
        assert_relative_eq!(h.h_mu, 1.0);
        assert_eq!(h.h_mu, h.h_nu);
        for nu in [0.0, 0.4, 2.0, PI] {
            let h = scale_factors(&s, &PhsCoords::new(0.0, nu, vec![0.3, 1.0]).unwrap())
                .unwrap();
            assert!(h.h_psis.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn volume_density_examples() {
        let v = volume_density(&shape(2, 1.0), &PhsCoords::new(0.0, 0.0, vec![]).unwrap())
            .unwrap();
        assert_eq!(v, 0.0);
        let v = volume_density(&shape(2, 2.0), &PhsCoords::new(1.0, PI / 2.0, vec![]).unwrap())
            .unwrap();
        let expected = 4.0 * (1f64.sinh().powi(2) + 1.0);
        assert_relative_eq!(v, expected, max_relative = 1e-14);
        let h = scale_factors(&shape(2, 2.0), &PhsCoords::new(1.0, PI / 2.0, vec![]).unwrap())
            .unwrap();
        assert_relative_eq!(h.h_mu * h.h_nu, expected, max_relative = 1e-14);
    }

    #[test]
    fn volume_density_3d_has_no_psi_factor() {
        let s = shape(3, 1.0);
        let a = volume_density(&s, &PhsCoords::new(0.5, 1.0, vec![0.2]).unwrap()).unwrap();
        let b = volume_density(&s, &PhsCoords::new(0.5, 1.0, vec![5.0]).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn align_frame_identity() {
        let t = align_frame(&CartesianPoint(vec![-1.0, 0.0]), &CartesianPoint(vec![1.0, 0.0]))
            .unwrap();
        assert_eq!(t.rotation(), &DMatrix::identity(2, 2));
        assert_eq!(t.translation().as_slice(), &[0.0, 0.0]);
        assert_eq!(t.half_distance(), 1.0);
    }

    #[test]
    fn align_frame_quarter_turn() {
        let t = align_frame(&CartesianPoint(vec![0.0, 0.0]), &CartesianPoint(vec![0.0, 2.0]))
            .unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((t.rotation() - expected).abs().max() < 1e-15);
        assert_eq!(t.translation().as_slice(), &[0.0, 1.0]);
        let img = t.apply(&CartesianPoint(vec![1.0, 0.0])).unwrap();
        assert!((img.0[0]).abs() < 1e-15 && (img.0[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn align_frame_errors() {
        let p = CartesianPoint(vec![1.0, 2.0, 3.0]);
        assert_eq!(align_frame(&p, &p), Err(Error::CoincidentFoci));
        assert!(align_frame(&p, &CartesianPoint(vec![1.0, 2.0])).is_err());
    }
}
