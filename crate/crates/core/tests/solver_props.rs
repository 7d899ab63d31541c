use nalgebra::{Point2, Vector2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trislip::degeneracies::dilation_pair;
use trislip::fields::gauge_transform;
use trislip::lattice::TriangleId;
use trislip::solver::{minimize_displacement_on, representative_slip, QuadraticSystem};
use trislip::sparse::Vec2;
use trislip::{
    build_recovery_pair, compute_f_of_mu, dislocation_measure, energy, minimize_displacement, ConvexPolygon,
    DislocationMeasure, DisplacementField, LatticeComplex, LatticeVector, Region, SlipField, SolverOptions,
};

fn square(eps: f64) -> LatticeComplex {
    LatticeComplex::build(ConvexPolygon::square(1.0).unwrap(), eps).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn random_slip(c: &LatticeComplex, rng: &mut ChaCha8Rng) -> SlipField {
    let values = (0..c.num_bonds()).map(|_| LatticeVector::new(rng.random_range(-1..=1), rng.random_range(-1..=1))).collect();
    SlipField::from_values(c, values).unwrap()
}

#[test]
fn operator_is_symmetric_semidefinite_with_rigid_kernel() {
    let c = square(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_slip(&c, &mut rng);
    let sys = QuadraticSystem::assemble(&c, &s, None).unwrap();
    let a = sys.operator.to_dense();
    assert!((&a - a.transpose()).amax() <= 1e-12 * a.amax());
    let n = c.num_nodes();
    let mut out = vec![Vec2::zeros(); n];
    for _ in 0..5 {
        let u: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        sys.operator.mul(&u, &mut out);
        let q: f64 = u.iter().zip(&out).map(|(x, y)| x.dot(y)).sum();
        assert!(q >= 0.0);
    }
    let scale = a.amax();
    let kernel: [Box<dyn Fn(Point2<f64>) -> Vec2>; 3] =
        [Box::new(|_| Vec2::new(1.0, 0.0)), Box::new(|_| Vec2::new(0.0, 1.0)), Box::new(|x| Vec2::new(-x.y, x.x))];
    for f in &kernel {
        let u: Vec<Vec2> = (0..n).map(|i| f(c.position(i))).collect();
        sys.operator.mul(&u, &mut out);
        assert!(out.iter().all(|r| r.amax() <= 1e-12 * scale));
    }
}

#[test]
fn quadratic_form_reproduces_direct_energy() {
    let c = square(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = random_slip(&c, &mut rng);
    let sys = QuadraticSystem::assemble(&c, &s, None).unwrap();
    let u: Vec<Vec2> = (0..c.num_nodes()).map(|_| Vec2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2))).collect();
    let field = DisplacementField::from_values(&c, u.clone()).unwrap();
    assert!(rel(sys.energy(&u), energy(&c, &field, &s, Region::All).unwrap()) < 1e-10);
}

#[test]
fn minimum_matches_direct_evaluation_and_is_stationary() {
    let c = square(0.0625);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_slip(&c, &mut rng);
    let m = minimize_displacement(&c, &s, &SolverOptions::default()).unwrap();
    assert!(rel(m.energy, m.quadratic_energy) < 1e-10);
    assert!(m.relative_residual <= 1e-10);
    // Perturbing the minimiser cannot lower the energy.
    let mut v = m.displacement.clone();
    for x in v.values_mut() {
        *x += Vector2::new(rng.random_range(-1e-3..1e-3), rng.random_range(-1e-3..1e-3));
    }
    assert!(energy(&c, &v, &m.slip, Region::All).unwrap() >= m.energy * (1.0 - 1e-12));
}

#[test]
fn adding_bonds_cannot_lower_the_minimum() {
    let c = square(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_slip(&c, &mut rng);
    let opts = SolverOptions::default();
    let mut mask = vec![false; c.num_bonds()];
    let mut last = 0.0;
    // Nested regions: bonds whose midpoint lies within a growing radius.
    for r in [0.3, 0.6, 0.9, 2.0] {
        for (k, b) in c.bonds().iter().enumerate() {
            let mid = 0.5 * (c.position(b.tail as usize).coords + c.position(b.head as usize).coords);
            if mid.norm() < r {
                mask[k] = true;
            }
        }
        let m = minimize_displacement_on(&c, &s, Some(&mask), &opts).unwrap();
        assert!(m.energy >= last * (1.0 - 1e-9), "r={r}: {} < {last}", m.energy);
        last = m.energy;
    }
}

#[test]
fn dilation_and_zero_slip_relax_to_zero() {
    let c = square(0.125);
    let opts = SolverOptions::default();
    assert_eq!(minimize_displacement(&c, &SlipField::zeros(&c), &opts).unwrap().energy, 0.0);
    let (_, s) = dilation_pair(&c, 2);
    assert!(minimize_displacement(&c, &s, &opts).unwrap().energy <= 1e-12);
    let empty = DislocationMeasure::new(c.epsilon());
    assert_eq!(compute_f_of_mu(&empty, &c, &opts).unwrap().energy, 0.0);
}

#[test]
fn representative_slip_carries_exactly_the_atoms() {
    let c = square(0.0625);
    let one = DislocationMeasure::from_atoms(c.epsilon(), [(TriangleId::up(1, 2), LatticeVector::E1)]);
    let s = representative_slip(&one, &c).unwrap();
    assert_eq!(dislocation_measure(&s, &c).unwrap(), one);
    let dipole =
        DislocationMeasure::from_atoms(c.epsilon(), [(TriangleId::up(-4, 2), LatticeVector::E1), (TriangleId::up(5, -3), -LatticeVector::E1)]);
    let s = representative_slip(&dipole, &c).unwrap();
    assert_eq!(dislocation_measure(&s, &c).unwrap(), dipole);
    // A half-line running into another core is refused.
    let blocked =
        DislocationMeasure::from_atoms(c.epsilon(), [(TriangleId::up(0, 0), LatticeVector::E1), (TriangleId::up(6, 0), LatticeVector::NU)]);
    assert!(matches!(representative_slip(&blocked, &c), Err(trislip::Error::BlockedHalfLine { .. })));
}

#[test]
fn infimum_does_not_depend_on_the_representative() {
    let c = square(1.0 / 32.0);
    let opts = SolverOptions::default();
    let pair = build_recovery_pair(&[(LatticeVector::NU, Point2::new(0.05, 0.1))], &c).unwrap();
    let direct = compute_f_of_mu(&pair.measure, &c, &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi: Vec<_> = (0..c.num_nodes()).map(|_| LatticeVector::new(rng.random_range(-2..=2), rng.random_range(-2..=2))).collect();
    let other = gauge_transform(&pair.slip, &psi, &c).unwrap();
    assert_eq!(dislocation_measure(&other, &c).unwrap(), pair.measure);
    let via_gauge = minimize_displacement(&c, &other, &opts).unwrap();
    assert!(rel(direct.energy, via_gauge.energy) < 1e-8);
}

#[test]
fn relaxed_energy_is_below_the_recovery_pair_and_in_the_expected_range() {
    let eps = 1.0 / 64.0;
    let c = square(eps);
    let pair = build_recovery_pair(&[(LatticeVector::E1, Point2::origin())], &c).unwrap();
    let rec = energy(&c, &pair.displacement, &pair.slip, Region::All).unwrap();
    let min = compute_f_of_mu(&pair.measure, &c, &SolverOptions::default()).unwrap();
    assert!(min.energy <= rec);
    let normalized = min.energy / (eps * eps * eps.ln().abs());
    let limit = 3f64.sqrt() / (6.0 * std::f64::consts::PI);
    assert!((0.5 * limit..=2.0 * limit).contains(&normalized), "{normalized}");
}

#[test]
fn iteration_cap_returns_the_best_iterate() {
    let c = square(0.125);
    let s = random_slip(&c, &mut ChaCha8Rng::seed_from_u64(6));
    // Jacobi with an unreachable tolerance must stop at the cap.
    let opts = SolverOptions { tol: 1e-300, max_iter_factor: 1, preconditioner: trislip::solver::PreconditionerKind::Jacobi };
    match minimize_displacement(&c, &s, &opts) {
        Err(trislip::Error::NotConverged { best, iterations, .. }) => {
            assert_eq!(best.len(), c.num_nodes());
            assert!(iterations > 0);
        }
        other => panic!("expected a convergence failure, got {other:?}"),
    }
}
