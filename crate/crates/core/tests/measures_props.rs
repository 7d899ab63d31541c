use nalgebra::{Point2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trislip::{flat_norm, AtomicMeasure, ConvexPolygon, FlatNormOptions};

fn random_measure(rng: &mut ChaCha8Rng, points: &[Point2<f64>]) -> AtomicMeasure {
    AtomicMeasure::new(points.iter().map(|&x| (x, Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))))
}

fn opts() -> FlatNormOptions {
    FlatNormOptions { directions: 180, ..FlatNormOptions::default() }
}

#[test]
fn flat_norm_is_a_norm_below_total_variation() {
    let domain = ConvexPolygon::square(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..4 {
        let points: Vec<_> =
            (0..5).map(|_| Point2::new(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9))).collect();
        let a = random_measure(&mut rng, &points);
        let b = random_measure(&mut rng, &points);
        let fa = flat_norm(&a, &domain, &opts()).unwrap().value;
        let fb = flat_norm(&b, &domain, &opts()).unwrap().value;
        assert!(fa <= a.total_variation() + 1e-9);
        let f2 = flat_norm(&a.scaled(-2.5), &domain, &opts()).unwrap().value;
        assert!((f2 - 2.5 * fa).abs() <= 1e-6 * fa.max(1.0), "{f2} vs {}", 2.5 * fa);
        let fab = flat_norm(&a.plus(&b), &domain, &opts()).unwrap().value;
        assert!(fab <= fa + fb + 1e-6);
    }
}

#[test]
fn single_atom_uses_the_boundary_distance() {
    // One atom of mass m at distance d from ∂Ω: the best test function is a
    // cone of height d/(1+d) (sup and Lipschitz constraints balanced).
    let domain = ConvexPolygon::square(1.0).unwrap();
    for (x, d) in [(0.0, 1.0), (0.5, 0.5), (-0.8, 0.2)] {
        let mu = AtomicMeasure::new([(Point2::new(x, 0.0), Vector2::new(0.0, 3.0))]);
        let f = flat_norm(&mu, &domain, &opts()).unwrap();
        assert!((f.value - 3.0 * d / (1.0 + d)).abs() < 1e-9, "{} at d={d}", f.value);
        assert!(!f.estimated);
    }
}

#[test]
fn close_dipole_costs_its_separation() {
    let domain = ConvexPolygon::square(1.0).unwrap();
    for h in [0.1, 0.02] {
        let w = Vector2::new(1.0, 0.0);
        let mu = AtomicMeasure::new([(Point2::new(-h / 2.0, 0.0), w), (Point2::new(h / 2.0, 0.0), -w)]);
        let f = flat_norm(&mu, &domain, &opts()).unwrap().value;
        // λ = 1/(1 + α) with α at least h/2·λ from the boundary: value h/(1 + h/2).
        assert!((f - h / (1.0 + h / 2.0)).abs() < 1e-9, "{f} at h={h}");
    }
}

#[test]
fn large_measures_are_estimated_from_a_window() {
    let domain = ConvexPolygon::square(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<_> = (0..300).map(|_| Point2::new(rng.random_range(-0.95..0.95), rng.random_range(-0.95..0.95))).collect();
    let mu = AtomicMeasure::new(points.iter().enumerate().map(|(k, &x)| (x, Vector2::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))));
    let small = FlatNormOptions { max_exact_atoms: 100, window_atoms: 60, ..opts() };
    let est = flat_norm(&mu, &domain, &small).unwrap();
    assert!(est.estimated);
    assert!(est.atoms_used <= 60);
    let exact = flat_norm(&mu, &domain, &opts()).unwrap();
    assert!(est.lower_bound <= exact.value + 1e-9);
    assert!(est.value <= mu.total_variation());
}
