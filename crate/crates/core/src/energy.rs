//! The harmonic bond energy and what it looks like triangle by triangle.
//!
//! The energy follows the ordered-pair convention
//! `F(u,σ) = (1/(2ε²)) Σ_{(i,j)} [(du − σ)(i,j) · (j − i)]²`, so each unordered
//! bond contributes twice; internally we sum once over bonds and drop the ½.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::fields::{DisplacementField, SlipField};
use crate::lattice::{LatticeComplex, LatticeVector, NodeId, TriangleId, SQRT3};

/// `ℂβ : β = (tr β)² + 2|β^sym|²`, the isotropic density with both Lamé
/// parameters equal to one.
pub fn elastic_density(beta: &Matrix2<f64>) -> f64 {
    let sym = 0.5 * (beta + beta.transpose());
    beta.trace().powi(2) + 2.0 * sym.norm_squared()
}

/// `ℂβ = (tr β) I + β + βᵀ`.
pub fn elastic_stress(beta: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::identity() * beta.trace() + beta + beta.transpose()
}

/// Which bonds an energy evaluation runs over.
#[derive(Clone, Copy, Debug)]
pub enum Region<'a> {
    All,
    Bonds(&'a [usize]),
    /// Every bond that is an edge of one of these triangles, counted once.
    Triangles(&'a [TriangleId]),
}

impl Region<'_> {
    fn bonds(&self, complex: &LatticeComplex) -> Result<Vec<usize>> {
        Ok(match *self {
            Region::All => (0..complex.num_bonds()).collect(),
            Region::Bonds(b) => b.to_vec(),
            Region::Triangles(ts) => {
                let mut set = BTreeSet::new();
                for t in ts {
                    for (i, j) in t.edges() {
                        set.insert(complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?.bond);
                    }
                }
                set.into_iter().collect()
            }
        })
    }
}

/// `[(du − σ)(i,j) · (j − i)]²` for the bond's canonical orientation (the
/// value does not depend on orientation).
pub fn bond_term(complex: &LatticeComplex, u: &DisplacementField, slip: &SlipField, bond: usize) -> f64 {
    let b = complex.bonds()[bond];
    let eps = complex.epsilon();
    let e = u.get(b.head as usize) - u.get(b.tail as usize) - slip.physical_bond_value(complex, bond);
    (eps * e.dot(&b.vector().to_vector())).powi(2)
}

pub fn energy(complex: &LatticeComplex, u: &DisplacementField, slip: &SlipField, region: Region<'_>) -> Result<f64> {
    check_sizes(complex, u, slip)?;
    let eps2 = complex.epsilon().powi(2);
    let sum: f64 = match region {
        Region::All => (0..complex.num_bonds()).map(|k| bond_term(complex, u, slip, k)).fold(0.0, |s, x| s + x),
        _ => region.bonds(complex)?.into_iter().map(|k| bond_term(complex, u, slip, k)).fold(0.0, |s, x| s + x),
    };
    Ok(sum / eps2)
}

fn check_sizes(complex: &LatticeComplex, u: &DisplacementField, slip: &SlipField) -> Result<()> {
    if u.len() != complex.num_nodes() {
        return Err(Error::SizeMismatch { expected: complex.num_nodes(), found: u.len() });
    }
    if slip.len() != complex.num_bonds() {
        return Err(Error::SizeMismatch { expected: complex.num_bonds(), found: slip.len() });
    }
    Ok(())
}

/// Energy of one triangle under a constant strain `β`:
/// `ε²(|e₁ᵀβe₁|² + |νᵀβν|² + |ηᵀβη|²)`, which equals `(3/8) ε² ℂβ:β`.
pub fn triangle_energy_of_constant_strain(beta: &Matrix2<f64>, epsilon: f64) -> f64 {
    let term = |v: LatticeVector| {
        let t = v.to_vector();
        t.dot(&(beta * t)).powi(2)
    };
    epsilon * epsilon * (term(LatticeVector::E1) + term(LatticeVector::NU) + term(LatticeVector::ETA))
}

/// Piecewise constant strain, one matrix per triangle of a chosen set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleStrainField {
    pub values: BTreeMap<TriangleId, Matrix2<f64>>,
}

impl TriangleStrainField {
    pub fn get(&self, t: TriangleId) -> Option<&Matrix2<f64>> {
        self.values.get(&t)
    }

    pub fn triangles(&self) -> Vec<TriangleId> {
        self.values.keys().copied().collect()
    }
}

fn elastic_edge(complex: &LatticeComplex, u: &DisplacementField, slip: &SlipField, i: NodeId, j: NodeId) -> Result<Vector2<f64>> {
    let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
    let b = complex.bonds()[ob.bond];
    let e = u.get(b.head as usize) - u.get(b.tail as usize) - slip.physical_bond_value(complex, ob.bond);
    Ok(if ob.forward { e } else { -e })
}

/// Solves `β (j − i) = (du − σ)(i,j)` on two edges of each triangle and
/// checks the third. Triangles with nonzero circulation are rejected.
pub fn reconstruct_strain(
    complex: &LatticeComplex,
    u: &DisplacementField,
    slip: &SlipField,
    triangles: &[TriangleId],
) -> Result<TriangleStrainField> {
    check_sizes(complex, u, slip)?;
    let eps = complex.epsilon();
    let mut values = BTreeMap::new();
    for &t in triangles {
        let [v0, v1, v2] = t.vertices();
        let e01 = elastic_edge(complex, u, slip, v0, v1)?;
        let e12 = elastic_edge(complex, u, slip, v1, v2)?;
        let e02 = elastic_edge(complex, u, slip, v0, v2)?;
        let scale = e01.amax().max(e12.amax()).max(e02.amax()).max(eps);
        if (e01 + e12 - e02).amax() > 1e-10 * scale {
            return Err(Error::NonzeroCirculation(t));
        }
        let edges = Matrix2::from_columns(&[eps * (v1 - v0).to_vector(), eps * (v2 - v0).to_vector()]);
        let rhs = Matrix2::from_columns(&[e01, e02]);
        let inv = edges.try_inverse().expect("lattice triangles are nondegenerate");
        values.insert(t, rhs * inv);
    }
    Ok(TriangleStrainField { values })
}

/// The two parts of the bond energy on a set of dislocation-free triangles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySplit {
    /// Energy of every bond that is an edge of the set.
    pub total: f64,
    /// `(√3/2) ∫ ½ ℂβ:β` over the union of the triangles.
    pub bulk: f64,
    /// Half-weight correction from edges lying on exactly one triangle of the set.
    pub boundary: f64,
}

/// Splits the energy of the bonds of `strain`'s triangles into a bulk
/// integral and a boundary term; `total = bulk + boundary` up to rounding.
pub fn energy_split(
    complex: &LatticeComplex,
    u: &DisplacementField,
    slip: &SlipField,
    strain: &TriangleStrainField,
) -> Result<EnergySplit> {
    let eps = complex.epsilon();
    let ts = strain.triangles();
    let total = energy(complex, u, slip, Region::Triangles(&ts))?;
    let area = TriangleId::area(eps);
    let bulk = strain.values.values().map(|b| 0.5 * SQRT3 * area * 0.5 * elastic_density(b)).fold(0.0, |s, x| s + x);
    let mut count: BTreeMap<usize, u8> = BTreeMap::new();
    for t in &ts {
        for (i, j) in t.edges() {
            *count.entry(complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?.bond).or_default() += 1;
        }
    }
    let boundary = count
        .into_iter()
        .filter(|&(_, n)| n == 1)
        .map(|(k, _)| bond_term(complex, u, slip, k))
        .fold(0.0, |s, x| s + x)
        / (2.0 * eps * eps);
    Ok(EnergySplit { total, bulk, boundary })
}

/// `Σ β_T (x_j − x_i)` along a closed node path whose edges all lie on
/// triangles of `strain`.
pub fn loop_circulation_of_strain(complex: &LatticeComplex, strain: &TriangleStrainField, path: &[NodeId]) -> Result<Vector2<f64>> {
    let eps = complex.epsilon();
    let mut sum = Vector2::zeros();
    for (k, &i) in path.iter().enumerate() {
        let j = path[(k + 1) % path.len()];
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        let beta = complex
            .incident_triangles(ob.bond)
            .into_iter()
            .find_map(|t| strain.get(t))
            .ok_or(Error::LoopLeavesRegion(i, j))?;
        sum += beta * (eps * (j - i).to_vector());
    }
    Ok(sum)
}

/// `ε² Σ_{(i,j)} ψ̂(|dv(i,j)|/ε)` over ordered pairs, for a deformation `v`.
pub fn nonlinear_energy(complex: &LatticeComplex, v: &DisplacementField, potential: impl Fn(f64) -> f64) -> f64 {
    let eps = complex.epsilon();
    let sum: f64 = complex
        .bonds()
        .iter()
        .map(|b| potential((v.get(b.head as usize) - v.get(b.tail as usize)).norm() / eps))
        .fold(0.0, |s, x| s + x);
    2.0 * eps * eps * sum
}

/// Quadratic energy obtained by linearising a pair potential with
/// `ψ̂''(1) = curvature` about the reference lattice: `curvature · F(u, 0)`.
pub fn linearized_energy(complex: &LatticeComplex, u: &DisplacementField, curvature: f64) -> Result<f64> {
    Ok(curvature * energy(complex, u, &SlipField::zeros(complex), Region::All)?)
}
