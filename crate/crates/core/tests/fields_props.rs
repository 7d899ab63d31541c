use nalgebra::{Point2, Vector2};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trislip::fields::{
    audit_volume_constraint, circulation, dislocation_measure_from_strain, gauge_transform, volume_constraint_holds,
};
use trislip::lattice::{Orientation, TriangleId};
use trislip::{
    build_recovery_pair, dislocation_measure, ConvexPolygon, DisplacementField, LatticeComplex, LatticeVector, SlipField,
};

fn square(eps: f64) -> LatticeComplex {
    LatticeComplex::build(ConvexPolygon::square(1.0).unwrap(), eps).unwrap()
}

fn random_slip(c: &LatticeComplex, rng: &mut ChaCha8Rng) -> SlipField {
    let values = (0..c.num_bonds()).map(|_| LatticeVector::new(rng.random_range(-3..=3), rng.random_range(-3..=3))).collect();
    SlipField::from_values(c, values).unwrap()
}

#[test]
fn slips_are_antisymmetric() {
    let c = square(0.25);
    let s = random_slip(&c, &mut ChaCha8Rng::seed_from_u64(1));
    for b in c.bonds() {
        let (i, j) = (c.node(b.tail as usize), c.node(b.head as usize));
        assert_eq!(s.get(&c, i, j).unwrap(), -s.get(&c, j, i).unwrap());
    }
}

#[test]
fn measure_from_strain_matches_integer_measure() {
    let c = square(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let s = random_slip(&c, &mut rng);
        let u = DisplacementField::from_fn(&c, |_, _| Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let exact = dislocation_measure(&s, &c).unwrap();
        assert!(!exact.is_empty());
        assert_eq!(dislocation_measure_from_strain(&u, &s, &c).unwrap(), exact);
    }
}

#[test]
fn gauge_transform_keeps_the_measure() {
    let c = square(0.125);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = random_slip(&c, &mut rng);
    let psi: Vec<_> = (0..c.num_nodes()).map(|_| LatticeVector::new(rng.random_range(-5..=5), rng.random_range(-5..=5))).collect();
    assert_eq!(dislocation_measure(&gauge_transform(&s, &psi, &c).unwrap(), &c).unwrap(), dislocation_measure(&s, &c).unwrap());
}

#[test]
fn volume_constraint_implies_zero_circulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut hits = 0;
    for _ in 0..200_000 {
        let t = if rng.random_bool(0.5) { TriangleId::up(0, 0) } else { TriangleId::down(0, 0) };
        let mut v = || LatticeVector::new(rng.random_range(-3..=3), rng.random_range(-3..=3));
        let s = [v(), v(), v()];
        if volume_constraint_holds(t, s) {
            hits += 1;
            assert!((s[0] + s[1] + s[2]).is_zero(), "{s:?} on {t}");
        }
    }
    assert!(hits > 0);
}

#[test]
fn shear_slip_satisfies_the_constraint_and_dilation_does_not() {
    let c = square(0.25);
    // z(p, q) = (q, 0): a shear along e₁ with integer values.
    let shear = SlipField::from_fn(&c, |i, j| LatticeVector::new(j.b - i.b, 0));
    let audit = audit_volume_constraint(&shear, &c).unwrap();
    assert_eq!(audit.satisfied, audit.dislocation_free);
    let dil = SlipField::from_fn(&c, |i, j| j - i);
    let audit = audit_volume_constraint(&dil, &c).unwrap();
    assert_eq!(audit.satisfied, 0);
    assert_eq!(audit.dislocation_free, c.triangles().len());
    assert_eq!(audit_volume_constraint(&SlipField::zeros(&c), &c).unwrap().fraction(), 1.0);
}

#[test]
fn recovery_audit_excludes_the_charged_triangle() {
    let c = square(1.0 / 32.0);
    let pair = build_recovery_pair(&[(LatticeVector::E1, Point2::origin())], &c).unwrap();
    let audit = audit_volume_constraint(&pair.slip, &c).unwrap();
    assert_eq!(audit.dislocation_free, c.triangles().len() - 1);
}

proptest! {
    #[test]
    fn lattice_circulation_is_integer_exact(a in -4i64..4, b in -4i64..4, up in any::<bool>(), seed in any::<u64>()) {
        let c = square(0.125);
        let t = if up { TriangleId::up(a, b) } else { TriangleId::down(a, b) };
        prop_assume!(c.contains_triangle(t));
        let s = random_slip(&c, &mut ChaCha8Rng::seed_from_u64(seed));
        let [v0, v1, v2] = t.vertices();
        let by_hand = s.get(&c, v0, v1).unwrap() + s.get(&c, v1, v2).unwrap() + s.get(&c, v2, v0).unwrap();
        prop_assert_eq!(circulation(&s, &c, t).unwrap(), by_hand);
        prop_assert_eq!(t.orientation == Orientation::Up, t.vertices()[1] == v0.offset(LatticeVector::E1));
    }
}
