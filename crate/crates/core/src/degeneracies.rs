//! Zero-energy configurations that show how much freedom the slip field
//! has, and the per-triangle test showing the volume constraint removes it.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fields::{volume_constraint_holds, DisplacementField, Gradient, EdgeField, SlipField};
use crate::lattice::{LatticeComplex, LatticeVector, TriangleId};

/// `√3 e₂` in lattice coordinates.
pub const SQRT3_E2: LatticeVector = LatticeVector::new(-1, 2);

/// Slip `√3 ε e₂` on every `+e₁` bond and zero elsewhere. With `u = 0` every
/// bond term vanishes (the slip is orthogonal to its bond), yet every
/// triangle is charged: `∓√3 ε e₂` on Up and Down triangles.
pub fn unseparated_slip(complex: &LatticeComplex) -> SlipField {
    SlipField::from_fn(complex, |i, j| if j - i == LatticeVector::E1 { SQRT3_E2 } else { LatticeVector::ZERO })
}

/// Crack displacement `u(i) = sign · ε ν` on the rows with `i₂ ≤ 0` and zero
/// above, together with the slip `σ = du` that makes its energy vanish.
/// `sign = −1` opens the rows; `sign = +1` pushes them into each other.
pub fn crack_pair(complex: &LatticeComplex, sign: i64) -> (DisplacementField, SlipField) {
    let lattice_u = |b: i64| if b <= 0 { sign * LatticeVector::NU } else { LatticeVector::ZERO };
    let eps = complex.epsilon();
    let u = DisplacementField::from_fn(complex, |n, _| eps * lattice_u(n.b).to_vector());
    let slip = SlipField::from_fn(complex, |i, j| lattice_u(j.b) - lattice_u(i.b));
    (u, slip)
}

/// Integer dilation `u(x) = λ x`, `σ(i,j) = λ (j − i)`.
pub fn dilation_pair(complex: &LatticeComplex, lambda: i64) -> (DisplacementField, SlipField) {
    let u = DisplacementField::from_fn(complex, |_, x| lambda as f64 * x.coords);
    let slip = SlipField::from_fn(complex, |i, j| lambda * (j - i));
    (u, slip)
}

/// Smallest `F(u, σ; T)` over slips on the edges of `t` with lattice
/// coordinates in `[−bound, bound]` that satisfy the volume constraint (which
/// forces zero circulation, so the third edge follows from the other two).
pub fn constrained_triangle_minimum(complex: &LatticeComplex, u: &DisplacementField, t: TriangleId, bound: i64) -> Result<f64> {
    let eps = complex.epsilon();
    let grad = Gradient { complex, u };
    let [v0, v1, v2] = t.vertices();
    let mut du = [Vector2::zeros(); 3];
    let mut dirs = [Vector2::zeros(); 3];
    for (k, (i, j)) in [(v0, v1), (v1, v2), (v2, v0)].into_iter().enumerate() {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        let g = grad.bond_value(ob.bond);
        du[k] = if ob.forward { g } else { -g };
        dirs[k] = (j - i).to_vector();
    }
    let term = |k: usize, s: LatticeVector| ((du[k] - eps * s.to_vector()).dot(&(eps * dirs[k]))).powi(2);
    let range = -bound..=bound;
    let mut best = f64::INFINITY;
    for p0 in range.clone() {
        for q0 in range.clone() {
            let s0 = LatticeVector::new(p0, q0);
            let e0 = term(0, s0);
            if e0 >= best * eps * eps {
                continue;
            }
            for p1 in range.clone() {
                for q1 in range.clone() {
                    let s1 = LatticeVector::new(p1, q1);
                    let s2 = -(s0 + s1);
                    if !range.contains(&s2.p) || !range.contains(&s2.q) {
                        continue;
                    }
                    if !volume_constraint_holds(t, [s0, s1, s2]) {
                        continue;
                    }
                    let e = (e0 + term(1, s1) + term(2, s2)) / (eps * eps);
                    best = best.min(e);
                }
            }
        }
    }
    Ok(best)
}

/// Does `u` have a nonzero bond difference on some edge of `t`?
pub fn displacement_varies_on(complex: &LatticeComplex, u: &DisplacementField, t: TriangleId) -> Result<bool> {
    let grad = Gradient { complex, u };
    for (i, j) in t.edges() {
        let ob = complex.bond_between_nodes(i, j).ok_or(Error::MissingBond(i, j))?;
        if grad.bond_value(ob.bond) != Vector2::zeros() {
            return Ok(true);
        }
    }
    Ok(false)
}
