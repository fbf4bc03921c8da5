//! Uniform sampling over prolate hyperspheroids.
//!
//! The production sampler maps a uniform unit-ball sample through the
//! diagonal scaling `(d/2, c, ..., c)`; affine images of uniform
//! distributions stay uniform. A bounding-box rejection sampler is kept as
//! an independent oracle.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::coords::{CartesianPoint, PhsShape};
use crate::{Error, Result};

/// Samples with a focal sum up to this relative amount above `d` are treated
/// as on the surface.
pub const SURFACE_TOLERANCE: f64 = 1e-9;

/// A seeded, reproducible random stream.
///
/// Backed by ChaCha8 with the 64-bit `stream_id` selecting the ChaCha stream,
/// so the output for a given `(seed, stream_id)` is identical on every
/// platform and distinct stream ids never overlap.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

/// The identity of a [`RandomStream`] without its position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamDescriptor {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn descriptor(&self) -> StreamDescriptor {
        StreamDescriptor {
            seed: self.seed,
            stream_id: self.stream_id,
        }
    }

    /// A fresh stream with the same seed and stream id offset by `k`.
    pub fn substream(&self, k: u64) -> RandomStream {
        RandomStream::new(self.seed, self.stream_id.wrapping_add(k))
    }
}

impl From<StreamDescriptor> for RandomStream {
    fn from(d: StreamDescriptor) -> Self {
        RandomStream::new(d.seed, d.stream_id)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_nondegenerate(shape: &PhsShape) -> Result<()> {
    if shape.is_degenerate() {
        return Err(Error::DegenerateShape);
    }
    Ok(())
}

/// Uniform point in the closed unit `n`-ball: a normalized Gaussian
/// direction with radius `U^(1/n)`.
pub fn sample_unit_ball(n: usize, rng: &mut RandomStream) -> CartesianPoint {
    assert!(n >= 1, "unit ball dimension must be at least 1");
    let mut x = vec![0.0; n];
    fill_unit_ball(&mut x, rng);
    CartesianPoint(x)
}

fn fill_unit_ball(x: &mut [f64], rng: &mut RandomStream) {
    let norm = loop {
        let mut sq = 0.0;
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
            sq += *v * *v;
        }
        if sq > 0.0 {
            break sq.sqrt();
        }
    };
    let u: f64 = rng.random();
    let r = u.powf(1.0 / x.len() as f64);
    let scale = r / norm;
    x.iter_mut().for_each(|v| *v *= scale);
}

/// Uniform point in the canonical hyperspheroid (foci on the `x_1` axis,
/// centred at the origin).
pub fn sample_uniform_phs(shape: &PhsShape, rng: &mut RandomStream) -> Result<CartesianPoint> {
    check_nondegenerate(shape)?;
    let mut x = vec![0.0; shape.n()];
    fill_unit_ball(&mut x, rng);
    let c = shape.conjugate_semi_axis();
    x[0] *= shape.transverse_semi_axis();
    x[1..].iter_mut().for_each(|v| *v *= c);
    Ok(CartesianPoint(x))
}

/// Rejection sampler over the bounding box `[-d/2, d/2] x [-c, c]^(n-1)`.
pub fn rejection_sample_phs(shape: &PhsShape, rng: &mut RandomStream) -> Result<CartesianPoint> {
    rejection_sample_phs_counted(shape, rng).map(|(x, _)| x)
}

/// As [`rejection_sample_phs`], also returning the number of proposals drawn.
pub fn rejection_sample_phs_counted(
    shape: &PhsShape,
    rng: &mut RandomStream,
) -> Result<(CartesianPoint, u64)> {
    check_nondegenerate(shape)?;
    let mut x = vec![0.0; shape.n()];
    let mut proposals = 0u64;
    loop {
        proposals += 1;
        if propose_in_box(shape, &mut x, rng) {
            return Ok((CartesianPoint(x), proposals));
        }
    }
}

/// Draws one bounding-box proposal into `x` and reports whether it lies
/// inside the hyperspheroid.
pub(crate) fn propose_in_box(shape: &PhsShape, x: &mut [f64], rng: &mut RandomStream) -> bool {
    let half = [shape.transverse_semi_axis(), shape.conjugate_semi_axis()];
    for (i, v) in x.iter_mut().enumerate() {
        let u: f64 = rng.random();
        *v = (2.0 * u - 1.0) * half[(i > 0) as usize];
    }
    focal_sum(shape.a(), x) <= shape.d()
}

pub(crate) fn focal_sum(a: f64, x: &[f64]) -> f64 {
    let rho2: f64 = x[1..].iter().map(|v| v * v).sum();
    ((x[0] + a).powi(2) + rho2).sqrt() + ((x[0] - a).powi(2) + rho2).sqrt()
}

/// Transverse diameter of the confocal hyperspheroid through `x`: the sum of
/// its distances to the two canonical foci.
pub fn diameter_through_point(shape: &PhsShape, x: &CartesianPoint) -> Result<f64> {
    if x.dim() != shape.n() {
        return Err(Error::DimensionMismatch {
            expected: shape.n(),
            found: x.dim(),
        });
    }
    Ok(focal_sum(shape.a(), x.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn streams_are_reproducible() {
        let mut a = RandomStream::new(7, 3);
        let mut b = RandomStream::new(7, 3);
        let mut c = RandomStream::new(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_eq!(RandomStream::new(7, 0).substream(4).descriptor(), c.descriptor());
    }

    #[test]
    fn stream_output_is_pinned() {
        // Guards against silent changes in the generator across dependency updates.
        let mut s = RandomStream::new(0, 0);
        let first = s.next_u64();
        let mut again = RandomStream::from(StreamDescriptor { seed: 0, stream_id: 0 });
        assert_eq!(first, again.next_u64());
        assert_eq!(first, 13080132717333068652);
        assert_eq!(RandomStream::new(0, 1).next_u64(), 13937087304575520531);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = RandomStream::new(1, 0);
        for n in 1..10 {
            for _ in 0..1000 {
                assert!(sample_unit_ball(n, &mut rng).norm() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_shape_is_rejected() {
        let s = PhsShape::new(3, 1.0, 1.0).unwrap();
        let mut rng = RandomStream::new(0, 0);
        assert_eq!(sample_uniform_phs(&s, &mut rng), Err(Error::DegenerateShape));
        assert_eq!(rejection_sample_phs(&s, &mut rng), Err(Error::DegenerateShape));
    }

    #[test]
    fn diameter_examples() {
        let s = PhsShape::new(4, 3.0, 5.0).unwrap();
        let (f1, f2) = s.foci();
        assert_eq!(diameter_through_point(&s, &f1).unwrap(), 3.0);
        assert_eq!(diameter_through_point(&s, &f2).unwrap(), 3.0);
        assert_eq!(diameter_through_point(&s, &CartesianPoint(vec![0.0; 4])).unwrap(), 3.0);
        let on_conjugate = CartesianPoint(vec![0.0, s.conjugate_semi_axis(), 0.0, 0.0]);
        assert_relative_eq!(diameter_through_point(&s, &on_conjugate).unwrap(), 5.0, max_relative = 1e-15);
        assert!(diameter_through_point(&s, &CartesianPoint(vec![0.0; 3])).is_err());
    }

    #[test]
    fn samples_respect_support() {
        let mut rng = RandomStream::new(11, 0);
        for n in [2, 3, 5, 8] {
            let s = PhsShape::new(n, 1.0, 1.7).unwrap();
            for _ in 0..2000 {
                let x = sample_uniform_phs(&s, &mut rng).unwrap();
                assert!(diameter_through_point(&s, &x).unwrap() <= s.d() * (1.0 + SURFACE_TOLERANCE));
                let y = rejection_sample_phs(&s, &mut rng).unwrap();
                assert!(diameter_through_point(&s, &y).unwrap() <= s.d());
            }
        }
    }
}
