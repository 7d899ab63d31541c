//! Recovery construction: snap each target dislocation to an Up barycenter,
//! cut the plane along a half-line from there, and sample the continuum
//! singular displacement on the lattice while the slip absorbs the jump on
//! every bond crossing the cut.

use nalgebra::{Point2, Vector2};

use crate::continuum::{displacement_singular, BurgersVector};
use crate::error::{Error, Result};
use crate::fields::{dislocation_measure, mild_separation_violation, DislocationMeasure, DisplacementField, SlipField};
use crate::lattice::{LatticeComplex, LatticeVector, NodeId, Orientation, TriangleId, SQRT3};

/// Ray from a triangle barycenter along a lattice direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfLine {
    pub origin: TriangleId,
    pub direction: LatticeVector,
}

impl HalfLine {
    /// `e₁` for `b = ±e₁`, `ν` for `±ν`, `η` for `±η`, and `e₁` otherwise.
    pub fn for_burgers(origin: TriangleId, b: BurgersVector) -> Self {
        let direction = [LatticeVector::NU, LatticeVector::ETA]
            .into_iter()
            .find(|&d| b == d || b == -d)
            .unwrap_or(LatticeVector::E1);
        Self { origin, direction }
    }

    pub fn origin_point(&self, epsilon: f64) -> Point2<f64> {
        self.origin.barycenter(epsilon)
    }

    pub fn angle(&self) -> f64 {
        let d = self.direction.to_vector();
        d.y.atan2(d.x)
    }
}

/// A bond meeting a half-line, oriented from the endpoint nearer the ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crossing {
    pub bond: usize,
    pub closer: usize,
    pub farther: usize,
    /// The nearer endpoint lies clockwise of the ray.
    pub closer_on_right: bool,
}

/// Up triangle whose barycenter is nearest to `x`; ties go to the smallest
/// `(a, b)`.
pub fn snap_to_barycenter(x: Point2<f64>, complex: &LatticeComplex) -> Result<TriangleId> {
    let eps = complex.epsilon();
    let tol = 1e-9 * eps * eps;
    let pick = |candidates: &mut dyn Iterator<Item = TriangleId>| {
        let mut best: Option<(f64, TriangleId)> = None;
        for t in candidates {
            let d = (t.barycenter(eps) - x).norm_squared();
            match best {
                Some((bd, bt)) if d > bd + tol || (d >= bd - tol && bt < t) => {}
                _ => best = Some((d, t)),
            }
        }
        best
    };

    let bf = x.y / (0.5 * SQRT3 * eps);
    let af = x.x / eps - 0.5 * bf;
    let (a0, b0) = (af.floor() as i64, bf.floor() as i64);
    let window: Vec<TriangleId> =
        (a0 - 3..=a0 + 3).flat_map(|a| (b0 - 3..=b0 + 3).map(move |b| TriangleId::up(a, b))).collect();
    let free = pick(&mut window.iter().copied());
    let included = pick(&mut window.iter().copied().filter(|&t| complex.contains_triangle(t)));
    if let (Some((df, _)), Some((di, t))) = (free, included) {
        if di <= df + tol {
            return Ok(t);
        }
    }
    pick(&mut complex.up_triangles())
        .map(|(_, t)| t)
        .ok_or_else(|| Error::InvalidDomain("complex has no Up triangle".into()))
}

/// Every bond whose closed segment meets the closed half-line, oriented from
/// the endpoint nearer the ray. All predicates run on integer index
/// coordinates scaled by 3, so barycenters are integral too.
pub fn crossing_bonds(gamma: &HalfLine, complex: &LatticeComplex) -> Result<Vec<Crossing>> {
    let (ox, oy) = gamma.origin.barycenter_index3();
    let origin = LatticeVector::new(ox, oy);
    let d = gamma.direction;
    let scaled = |n: NodeId| LatticeVector::new(3 * n.a, 3 * n.b) - origin;
    // 4|d|² · dist², exact.
    let distance_key = |r: LatticeVector| -> i64 {
        if d.dot2(r) >= 0 {
            3 * d.wedge(r).pow(2)
        } else {
            4 * d.norm_squared() * r.norm_squared()
        }
    };

    let mut out = Vec::new();
    for (k, bond) in complex.bonds().iter().enumerate() {
        let (i, j) = (bond.tail as usize, bond.head as usize);
        let (p, q) = (scaled(complex.node(i)), scaled(complex.node(j)));
        let (wp, wq) = (d.wedge(p), d.wedge(q));
        if wp == 0 || wq == 0 {
            // A line through a barycenter along a lattice direction misses
            // every node; reaching this means the direction is not a lattice
            // unit and the segment touches the ray at an endpoint.
            if (wp == 0 && d.dot2(p) >= 0) || (wq == 0 && d.dot2(q) >= 0) {
                return Err(Error::Equidistant(complex.node(i), complex.node(j)));
            }
            continue;
        }
        if (wp > 0) == (wq > 0) {
            continue;
        }
        let e = q - p;
        let (num, den) = (p.wedge(e), d.wedge(e));
        // origin + t d = P + s e gives t (d ∧ e) = p ∧ e; keep t ≥ 0.
        if num != 0 && (num > 0) != (den > 0) {
            continue;
        }
        let (kp, kq) = (distance_key(p), distance_key(q));
        let (closer, farther, wc) = match kp.cmp(&kq) {
            std::cmp::Ordering::Less => (i, j, wp),
            std::cmp::Ordering::Greater => (j, i, wq),
            std::cmp::Ordering::Equal => return Err(Error::Equidistant(complex.node(i), complex.node(j))),
        };
        out.push(Crossing { bond: k, closer, farther, closer_on_right: wc < 0 });
    }
    Ok(out)
}

/// Adds the slip of a single cut carrying lattice weight `w` to `slip`:
/// `σ(i,j) = −w` on every crossing bond traversed from the clockwise side of
/// the ray to the counterclockwise side. The triangle at the origin then has
/// `μ[σ] = +εw`, and the jump matches a displacement whose value drops by `w`
/// when the cut is crossed counterclockwise.
pub fn add_half_line_slip(slip: &mut SlipField, complex: &LatticeComplex, gamma: &HalfLine, w: LatticeVector) -> Result<Vec<Crossing>> {
    let crossings = crossing_bonds(gamma, complex)?;
    for c in &crossings {
        let (right, left) = if c.closer_on_right { (c.closer, c.farther) } else { (c.farther, c.closer) };
        slip.add(complex, complex.node(right), complex.node(left), -w)?;
    }
    Ok(crossings)
}

/// The recovery pair for unit dislocations, plus the bookkeeping that went
/// into it.
#[derive(Clone, Debug)]
pub struct RecoveryPair {
    pub displacement: DisplacementField,
    pub slip: SlipField,
    /// `μ[σ]/ε` with one atom `b_k` per snapped core.
    pub measure: DislocationMeasure,
    pub cores: Vec<TriangleId>,
    pub half_lines: Vec<HalfLine>,
}

/// Builds `(u_ε, σ_ε)` for atoms `b_k δ_{x_k}` with unit `b_k`.
pub fn build_recovery_pair(atoms: &[(BurgersVector, Point2<f64>)], complex: &LatticeComplex) -> Result<RecoveryPair> {
    let eps = complex.epsilon();
    let mut cores = Vec::with_capacity(atoms.len());
    for &(b, x) in atoms {
        if !b.is_unit() {
            return Err(Error::NonUnitBurgers(b.p, b.q));
        }
        if !complex.domain().contains_strictly(x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
        let t = snap_to_barycenter(x, complex)?;
        debug_assert_eq!(t.orientation, Orientation::Up);
        if cores.contains(&t) {
            return Err(Error::NotAdmissible(format!(
                "two dislocations snap to {t}; use a smaller lattice spacing"
            )));
        }
        cores.push(t);
    }
    let measure = DislocationMeasure::from_atoms(eps, cores.iter().zip(atoms).map(|(&t, &(b, _))| (t, b)));
    if let Some(why) = mild_separation_violation(&measure, complex) {
        return Err(Error::NotAdmissible(format!("{why}; use a smaller lattice spacing")));
    }

    let mut slip = SlipField::zeros(complex);
    let mut half_lines = Vec::with_capacity(atoms.len());
    let mut displacement = DisplacementField::zeros(complex);
    for (&t, &(b, _)) in cores.iter().zip(atoms) {
        let gamma = HalfLine::for_burgers(t, b);
        add_half_line_slip(&mut slip, complex, &gamma, b)?;
        let center = gamma.origin_point(eps);
        let cut = gamma.angle();
        let sample = |n: usize| -> Result<Vector2<f64>> {
            Ok(eps * displacement_singular(b, complex.position(n) - center, cut)?)
        };
        let base = sample(0)?;
        for (n, v) in displacement.values_mut().iter_mut().enumerate() {
            *v += sample(n)? - base;
        }
        half_lines.push(gamma);
    }

    let produced = dislocation_measure(&slip, complex)?;
    if produced != measure {
        return Err(Error::MeasureAudit(format!(
            "expected {} atoms, slip carries {} atoms",
            measure.len(),
            produced.len()
        )));
    }
    Ok(RecoveryPair { displacement, slip, measure, cores, half_lines })
}
