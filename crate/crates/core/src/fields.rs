//! Displacements, plastic slips, and the dislocation measure they induce.

use std::collections::BTreeMap;
use std::ops::{Add, Neg};

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};
use crate::lattice::{LatticeComplex, LatticeVector, NodeId, TriangleId, SQRT3};
use crate::measures::AtomicMeasure;

/// Anything that assigns a value to each bond, antisymmetric under reversal.
pub trait EdgeField {
    type Value: Copy + Add<Output = Self::Value> + Neg<Output = Self::Value>;

    /// Value on the bond's canonical orientation `tail → head`.
    fn bond_value(&self, bond: usize) -> Self::Value;
}

/// `V(i,j) + V(j,k) + V(k,i)` over the counterclockwise vertices of `t`.
pub fn circulation<F: EdgeField>(field: &F, complex: &LatticeComplex, t: TriangleId) -> Result<F::Value> {
    let mut terms = t.edges().into_iter().map(|(i, j)| {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        let v = field.bond_value(ob.bond);
        Ok::<_, Error>(if ob.forward { v } else { -v })
    });
    let first = terms.next().expect("three edges")?;
    terms.try_fold(first, |acc, v| Ok(acc + v?))
}

/// Plastic slip in integer lattice coordinates, one value per bond in its
/// canonical orientation. The physical slip on a bond is `ε (p e₁ + q ν)`.
/// Reversing a bond negates the value, so antisymmetry holds by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlipField {
    values: Vec<LatticeVector>,
}

impl SlipField {
    pub fn zeros(complex: &LatticeComplex) -> Self {
        Self { values: vec![LatticeVector::ZERO; complex.num_bonds()] }
    }

    /// Sample `f(tail, head)` on every bond's canonical orientation.
    pub fn from_fn(complex: &LatticeComplex, mut f: impl FnMut(NodeId, NodeId) -> LatticeVector) -> Self {
        let values = complex
            .bonds()
            .iter()
            .map(|b| f(complex.node(b.tail as usize), complex.node(b.head as usize)))
            .collect();
        Self { values }
    }

    pub fn from_values(complex: &LatticeComplex, values: Vec<LatticeVector>) -> Result<Self> {
        if values.len() != complex.num_bonds() {
            return Err(Error::SizeMismatch { expected: complex.num_bonds(), found: values.len() });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[LatticeVector] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn get(&self, complex: &LatticeComplex, i: NodeId, j: NodeId) -> Result<LatticeVector> {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        let v = self.values[ob.bond];
        Ok(if ob.forward { v } else { -v })
    }

    /// Sets `σ(i,j) = v`, hence `σ(j,i) = −v`.
    pub fn set(&mut self, complex: &LatticeComplex, i: NodeId, j: NodeId, v: LatticeVector) -> Result<()> {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        self.values[ob.bond] = if ob.forward { v } else { -v };
        Ok(())
    }

    /// Adds `v` to `σ(i,j)`.
    pub fn add(&mut self, complex: &LatticeComplex, i: NodeId, j: NodeId, v: LatticeVector) -> Result<()> {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        self.values[ob.bond] += if ob.forward { v } else { -v };
        Ok(())
    }

    pub fn set_bond(&mut self, bond: usize, v: LatticeVector) {
        self.values[bond] = v;
    }

    pub fn physical_bond_value(&self, complex: &LatticeComplex, bond: usize) -> Vector2<f64> {
        complex.epsilon() * self.values[bond].to_vector()
    }

    fn check(&self, complex: &LatticeComplex) -> Result<()> {
        if self.values.len() != complex.num_bonds() {
            return Err(Error::SizeMismatch { expected: complex.num_bonds(), found: self.values.len() });
        }
        Ok(())
    }
}

impl EdgeField for SlipField {
    type Value = LatticeVector;
    fn bond_value(&self, bond: usize) -> LatticeVector {
        self.values[bond]
    }
}

/// Real 2-vector per node.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    values: Vec<Vector2<f64>>,
}

impl DisplacementField {
    pub fn zeros(complex: &LatticeComplex) -> Self {
        Self { values: vec![Vector2::zeros(); complex.num_nodes()] }
    }

    /// Sample `f(node, position)` at every node.
    pub fn from_fn(complex: &LatticeComplex, mut f: impl FnMut(NodeId, Point2<f64>) -> Vector2<f64>) -> Self {
        let eps = complex.epsilon();
        Self { values: complex.nodes().iter().map(|&n| f(n, n.position(eps))).collect() }
    }

    pub fn from_values(complex: &LatticeComplex, values: Vec<Vector2<f64>>) -> Result<Self> {
        if values.len() != complex.num_nodes() {
            return Err(Error::SizeMismatch { expected: complex.num_nodes(), found: values.len() });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Vector2<f64>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vector2<f64>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Vector2<f64>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, node: usize) -> Vector2<f64> {
        self.values[node]
    }

    fn check(&self, complex: &LatticeComplex) -> Result<()> {
        if self.values.len() != complex.num_nodes() {
            return Err(Error::SizeMismatch { expected: complex.num_nodes(), found: self.values.len() });
        }
        Ok(())
    }
}

/// `du(i,j) = u(j) − u(i)`.
pub struct Gradient<'a> {
    pub complex: &'a LatticeComplex,
    pub u: &'a DisplacementField,
}

impl EdgeField for Gradient<'_> {
    type Value = Vector2<f64>;
    fn bond_value(&self, bond: usize) -> Vector2<f64> {
        let b = self.complex.bonds()[bond];
        self.u.values[b.head as usize] - self.u.values[b.tail as usize]
    }
}

/// Elastic part `du − σ` of the bond strain, with `σ` in physical units.
pub struct ElasticStrain<'a> {
    pub complex: &'a LatticeComplex,
    pub u: &'a DisplacementField,
    pub slip: &'a SlipField,
}

impl EdgeField for ElasticStrain<'_> {
    type Value = Vector2<f64>;
    fn bond_value(&self, bond: usize) -> Vector2<f64> {
        let b = self.complex.bonds()[bond];
        self.u.values[b.head as usize] - self.u.values[b.tail as usize]
            - self.slip.physical_bond_value(self.complex, bond)
    }
}

/// Atomic measure carried by triangle barycenters.
///
/// Weights are stored in lattice units: the physical measure is
/// `ε Σ w_T δ_{x_T}`, so the stored weights are exactly those of `μ/ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct DislocationMeasure {
    epsilon: f64,
    atoms: BTreeMap<TriangleId, LatticeVector>,
}

impl DislocationMeasure {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, atoms: BTreeMap::new() }
    }

    /// Coincident atoms are summed; zero weights are dropped.
    pub fn from_atoms(epsilon: f64, atoms: impl IntoIterator<Item = (TriangleId, LatticeVector)>) -> Self {
        let mut m = Self::new(epsilon);
        for (t, w) in atoms {
            m.add(t, w);
        }
        m
    }

    pub fn add(&mut self, t: TriangleId, w: LatticeVector) {
        let entry = self.atoms.entry(t).or_default();
        *entry += w;
        if entry.is_zero() {
            self.atoms.remove(&t);
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn atoms(&self) -> &BTreeMap<TriangleId, LatticeVector> {
        &self.atoms
    }

    pub fn weight(&self, t: TriangleId) -> LatticeVector {
        self.atoms.get(&t).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `|μ/ε|(Ω) = Σ |w_T|`.
    pub fn scaled_total_variation(&self) -> f64 {
        self.atoms.values().map(|w| w.norm()).fold(0.0, |s, x| s + x)
    }

    /// Total lattice weight `Σ w_T`.
    pub fn total_weight(&self) -> LatticeVector {
        self.atoms.values().copied().sum()
    }

    /// `μ/ε` as a real atomic measure at the barycenters.
    pub fn to_scaled_atomic(&self) -> AtomicMeasure {
        AtomicMeasure::new(self.atoms.iter().map(|(t, w)| (t.barycenter(self.epsilon), w.to_vector())))
    }
}

/// `μ[σ](T) = −dσ(T)` on every triangle of the complex. Exact.
pub fn dislocation_measure(slip: &SlipField, complex: &LatticeComplex) -> Result<DislocationMeasure> {
    slip.check(complex)?;
    let mut m = DislocationMeasure::new(complex.epsilon());
    for &t in complex.triangles() {
        let c = circulation(slip, complex, t)?;
        if !c.is_zero() {
            m.atoms.insert(t, -c);
        }
    }
    Ok(m)
}

/// Same measure recomputed as `d(du − σ)(T)/ε`, rounding the real circulation
/// to the nearest lattice vector. Fails if the rounding is not clean.
pub fn dislocation_measure_from_strain(
    u: &DisplacementField,
    slip: &SlipField,
    complex: &LatticeComplex,
) -> Result<DislocationMeasure> {
    u.check(complex)?;
    slip.check(complex)?;
    let eps = complex.epsilon();
    let field = ElasticStrain { complex, u, slip };
    let scale = u.values.iter().map(|v| v.amax()).fold(eps, f64::max);
    let mut m = DislocationMeasure::new(eps);
    for &t in complex.triangles() {
        let c = circulation(&field, complex, t)? / eps;
        let q = c.y / (0.5 * SQRT3);
        let p = c.x - 0.5 * q;
        let w = LatticeVector::new(p.round() as i64, q.round() as i64);
        if (w.to_vector() - c).norm() > 1e-6 * (1.0 + scale / eps) {
            return Err(Error::NonzeroCirculation(t));
        }
        if !w.is_zero() {
            m.atoms.insert(t, w);
        }
    }
    Ok(m)
}

/// Mild separation: every charged triangle keeps off the boundary of the
/// union of triangles, and no two charged triangles share a vertex.
pub fn check_mild_separation(mu: &DislocationMeasure, complex: &LatticeComplex) -> bool {
    mild_separation_violation(mu, complex).is_none()
}

/// First obstruction to mild separation, described in words.
pub fn mild_separation_violation(mu: &DislocationMeasure, complex: &LatticeComplex) -> Option<String> {
    for &t in mu.atoms.keys() {
        if !complex.contains_triangle(t) {
            return Some(format!("{t} is not a triangle of the complex"));
        }
        if complex.touches_boundary(t) {
            return Some(format!("{t} touches the boundary"));
        }
        for v in t.vertices() {
            for s in crate::lattice::triangles_at_node(v) {
                if s != t && mu.atoms.contains_key(&s) {
                    return Some(format!("{t} and {s} share a vertex"));
                }
            }
        }
    }
    None
}

/// Linearised volume constraint on one triangle, all three cyclic vertex
/// triples `(i,j,k)`: `σ(i,k) ∧ (j−i) − σ(i,j) ∧ (k−i) = 0`. Both terms carry
/// the same factor `ε²·√3/2`, so the test is on integers.
pub fn check_volume_constraint(slip: &SlipField, complex: &LatticeComplex, t: TriangleId) -> Result<bool> {
    let [v0, v1, v2] = t.vertices();
    for (i, j, k) in [(v0, v1, v2), (v1, v2, v0), (v2, v0, v1)] {
        let sik = slip.get(complex, i, k)?;
        let sij = slip.get(complex, i, j)?;
        if sik.wedge(j - i) != sij.wedge(k - i) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Volume constraint for explicit edge slips `(σ(v₀,v₁), σ(v₁,v₂), σ(v₂,v₀))`
/// along the counterclockwise vertices of `t`.
pub fn volume_constraint_holds(t: TriangleId, edge_slips: [LatticeVector; 3]) -> bool {
    let [v0, v1, v2] = t.vertices();
    let [s01, s12, s20] = edge_slips;
    // σ(i,j) and σ(i,k) for each cyclic start vertex.
    let triples = [(v0, v1, v2, s01, -s20), (v1, v2, v0, s12, -s01), (v2, v0, v1, s20, -s12)];
    triples.iter().all(|&(i, j, k, sij, sik)| sik.wedge(j - i) == sij.wedge(k - i))
}

/// How many dislocation-free triangles satisfy the volume constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct VolumeAudit {
    pub dislocation_free: usize,
    pub satisfied: usize,
}

impl VolumeAudit {
    /// Satisfied fraction; 1 when there is nothing to check.
    pub fn fraction(&self) -> f64 {
        if self.dislocation_free == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.dislocation_free as f64
        }
    }
}

/// Checks the volume constraint on every triangle with `μ[σ](T) = 0`.
pub fn audit_volume_constraint(slip: &SlipField, complex: &LatticeComplex) -> Result<VolumeAudit> {
    slip.check(complex)?;
    let mut audit = VolumeAudit { dislocation_free: 0, satisfied: 0 };
    for &t in complex.triangles() {
        if !circulation(slip, complex, t)?.is_zero() {
            continue;
        }
        audit.dislocation_free += 1;
        if check_volume_constraint(slip, complex, t)? {
            audit.satisfied += 1;
        }
    }
    Ok(audit)
}

/// `σ'(i,j) = σ(i,j) + ψ(j) − ψ(i)` for a lattice-valued node field `ψ`.
pub fn gauge_transform(slip: &SlipField, psi: &[LatticeVector], complex: &LatticeComplex) -> Result<SlipField> {
    slip.check(complex)?;
    if psi.len() != complex.num_nodes() {
        return Err(Error::SizeMismatch { expected: complex.num_nodes(), found: psi.len() });
    }
    let values = complex
        .bonds()
        .iter()
        .zip(&slip.values)
        .map(|(b, &s)| s + psi[b.head as usize] - psi[b.tail as usize])
        .collect();
    Ok(SlipField { values })
}
