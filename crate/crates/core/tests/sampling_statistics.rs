use std::f64::consts::PI;

use prolate::coords::cartesian_to_phs;
use prolate::measures::{expected_diameter, mu_prime};
use prolate::sampling::{
    diameter_through_point, rejection_sample_phs, rejection_sample_phs_counted, sample_unit_ball,
    sample_uniform_phs,
};
use prolate::stats::{ks_critical_value, ks_statistic, RunningStats};
use prolate::{CartesianPoint, PhsShape, RandomStream};

fn binomial_z(hits: u64, total: u64, p: f64) -> f64 {
    let p_hat = hits as f64 / total as f64;
    (p_hat - p).abs() / (p * (1.0 - p) / total as f64).sqrt()
}

#[test]
fn ball_mean_is_zero() {
    let n = 3;
    let count = 1_000_000;
    let mut rng = RandomStream::new(10, 0);
    let mut stats: Vec<RunningStats> = (0..n).map(|_| RunningStats::new()).collect();
    for _ in 0..count {
        let x = sample_unit_ball(n, &mut rng);
        for (s, v) in stats.iter_mut().zip(x.as_slice()) {
            s.push(*v);
        }
    }
    let se = (1.0 / (n as f64 + 2.0) / count as f64).sqrt();
    for s in &stats {
        assert!(s.mean().abs() < 3.0 * se, "mean {} se {}", s.mean(), se);
    }
}

#[test]
fn ball_radius_cdf() {
    let count = 1_000_000u64;
    for n in [2, 3, 5] {
        let mut rng = RandomStream::new(11, n as u64);
        let norms: Vec<f64> = (0..count).map(|_| sample_unit_ball(n, &mut rng).norm()).collect();
        for r in [0.25f64, 0.5, 0.75] {
            let hits = norms.iter().filter(|&&x| x <= r).count() as u64;
            let z = binomial_z(hits, count, r.powi(n as i32));
            assert!(z < 3.0, "n={n} r={r} z={z}");
        }
    }
}

#[test]
fn samples_respect_support_and_coordinates() {
    for n in [2, 3, 5, 8] {
        let shape = PhsShape::new(n, 1.0, 1.7).unwrap();
        let mut rng = RandomStream::new(12, 0);
        let mu_max = mu_prime(&shape);
        for _ in 0..10_000 {
            let x = sample_uniform_phs(&shape, &mut rng).unwrap();
            let d = diameter_through_point(&shape, &x).unwrap();
            assert!(d <= shape.d() * (1.0 + 1e-9));
            let p = cartesian_to_phs(&shape, &x).unwrap();
            assert!(p.mu() <= mu_max + 1e-9);
            assert!(((shape.d_min() * p.mu().cosh() - d) / d).abs() <= 1e-10);
            let y = rejection_sample_phs(&shape, &mut rng).unwrap();
            assert!(diameter_through_point(&shape, &y).unwrap() <= shape.d());
        }
    }
}

#[test]
fn diameter_through_special_points() {
    let shape = PhsShape::new(3, 2.0, 3.0).unwrap();
    let (f1, _) = shape.foci();
    assert_eq!(diameter_through_point(&shape, &f1).unwrap(), 2.0);
    let origin = CartesianPoint::new(vec![0.0; 3]);
    assert_eq!(diameter_through_point(&shape, &origin).unwrap(), 2.0);
    let c = shape.conjugate_semi_axis();
    let on_axis = CartesianPoint::new(vec![0.0, c, 0.0]);
    assert!((diameter_through_point(&shape, &on_axis).unwrap() - 3.0).abs() < 1e-14);
    assert!(diameter_through_point(&shape, &CartesianPoint::new(vec![0.0; 2])).is_err());
}

#[test]
fn mean_diameter_matches_expectation() {
    let shape = PhsShape::new(2, 1.0, 2.0).unwrap();
    let mut rng = RandomStream::new(13, 0);
    let stats: RunningStats = (0..1_000_000)
        .map(|_| diameter_through_point(&shape, &sample_uniform_phs(&shape, &mut rng).unwrap()).unwrap())
        .collect();
    let expected = expected_diameter(2.0, 1.0, 2).unwrap();
    assert_eq!(expected, 1.5);
    assert!((stats.mean() - expected).abs() < 3.0 * stats.std_error());
}

#[test]
fn affine_and_rejection_samplers_agree() {
    let count = 100_000;
    for n in [2, 3, 5] {
        let shape = PhsShape::new(n, 1.0, 2.0).unwrap();
        let mut rng_a = RandomStream::new(14, 0);
        let mut rng_b = RandomStream::new(14, 1);
        let mut a: Vec<f64> = (0..count)
            .map(|_| diameter_through_point(&shape, &sample_uniform_phs(&shape, &mut rng_a).unwrap()).unwrap())
            .collect();
        let mut b: Vec<f64> = (0..count)
            .map(|_| diameter_through_point(&shape, &rejection_sample_phs(&shape, &mut rng_b).unwrap()).unwrap())
            .collect();
        let stat = ks_statistic(&mut a, &mut b);
        assert!(stat < ks_critical_value(0.001, count, count), "n={n} D={stat}");
    }
}

fn acceptance_z(shape: &PhsShape, proposals_wanted: u64, expected: f64, seed: u64) -> f64 {
    let mut rng = RandomStream::new(seed, 0);
    let (mut accepted, mut proposals) = (0u64, 0u64);
    while proposals < proposals_wanted {
        let (_, k) = rejection_sample_phs_counted(shape, &mut rng).unwrap();
        proposals += k;
        accepted += 1;
    }
    binomial_z(accepted, proposals, expected)
}

#[test]
fn rejection_acceptance_ratio_2d() {
    let shape = PhsShape::new(2, 3.0, 5.0).unwrap();
    let z = acceptance_z(&shape, 1_000_000, PI / 4.0, 15);
    assert!(z < 3.0, "z={z}");
}

#[test]
fn rejection_acceptance_ratio_7d() {
    // ellipsoid over its bounding box: zeta_7 / 2^7, zeta_7 = 16 pi^3 / 105
    let expected = 16.0 * PI.powi(3) / 105.0 / 128.0;
    let shape = PhsShape::new(7, 1.0, 1.5).unwrap();
    let z = acceptance_z(&shape, 1_000_000, expected, 16);
    assert!(z < 3.0, "z={z}");
}

#[test]
fn degenerate_shape_cannot_be_sampled() {
    let shape = PhsShape::new(3, 1.0, 1.0).unwrap();
    let mut rng = RandomStream::new(0, 0);
    assert!(sample_uniform_phs(&shape, &mut rng).is_err());
    assert!(rejection_sample_phs(&shape, &mut rng).is_err());
}

#[test]
fn streams_are_deterministic_and_distinct() {
    let shape = PhsShape::new(4, 1.0, 3.0).unwrap();
    let draw = |seed, stream| {
        let mut rng = RandomStream::new(seed, stream);
        (0..50).map(|_| sample_uniform_phs(&shape, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(draw(1, 0), draw(1, 0));
    assert_ne!(draw(1, 0), draw(1, 1));
    assert_ne!(draw(1, 0), draw(2, 0));
}
