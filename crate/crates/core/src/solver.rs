//! Minimal energy for a prescribed dislocation measure.
//!
//! `𝓕_ε(μ)` is an infimum over displacements and slips with `μ[σ] = μ`. Two
//! slips with the same measure on a simply connected complex differ by the
//! gradient of a lattice-valued node field, and that gradient is absorbed by
//! the displacement. So one representative slip suffices and what remains is
//! a convex quadratic problem in `u`, solved by preconditioned conjugate
//! gradients on the (singular, consistent) normal equations.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::energy::{bond_term, energy, Region};
use crate::error::{Error, Result};
use crate::fields::{dislocation_measure, mild_separation_violation, DislocationMeasure, DisplacementField, SlipField};
use crate::lattice::{LatticeComplex, LatticeVector};
use crate::multigrid::{Jacobi, Multigrid, Preconditioner};
use crate::recovery::{add_half_line_slip, HalfLine};
use crate::sparse::{axpy, dot, norm, Block, BlockCsr, Vec2};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    #[default]
    Multigrid,
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop when the gradient norm drops below `tol` times its initial value.
    pub tol: f64,
    /// Iteration cap is `max_iter_factor · 2 · #nodes`.
    pub max_iter_factor: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter_factor: 50, preconditioner: PreconditionerKind::Multigrid }
    }
}

/// `F(u) = ½ uᵀ A u − rhsᵀ u + energy_offset` for a fixed slip.
#[derive(Clone, Debug)]
pub struct QuadraticSystem {
    pub operator: BlockCsr,
    pub rhs: Vec<Vec2>,
    pub energy_offset: f64,
}

impl QuadraticSystem {
    /// Each bond contributes `(t·(u_j − u_i) − c)²` with `t` the unit bond
    /// direction and `c = ε t·σ`, where `σ` is in lattice units.
    pub fn assemble(complex: &LatticeComplex, slip: &SlipField, bonds: Option<&[bool]>) -> Result<Self> {
        if slip.len() != complex.num_bonds() {
            return Err(Error::SizeMismatch { expected: complex.num_bonds(), found: slip.len() });
        }
        let eps = complex.epsilon();
        let n = complex.num_nodes();
        let active = |k: usize| bonds.map_or(true, |m| m[k]);
        let units: Vec<Vector2<f64>> = LatticeVector::UNITS.iter().map(|u| u.to_vector()).collect();
        let stiff: Vec<Block> = units.iter().map(|t| 2.0 * t * t.transpose()).collect();

        let mut rhs = vec![Vec2::zeros(); n];
        let mut offset = 0.0;
        for (k, b) in complex.bonds().iter().enumerate() {
            if !active(k) {
                continue;
            }
            let t = units[b.direction as usize];
            let c = eps * t.dot(&slip.values()[k].to_vector());
            rhs[b.head as usize] += 2.0 * c * t;
            rhs[b.tail as usize] -= 2.0 * c * t;
            offset += c * c;
        }

        let rows = (0..n).map(|i| {
            let mut diag = Block::zeros();
            let mut off: Vec<(u32, Block)> = Vec::with_capacity(7);
            for dir in 0..6 {
                if let Some(k) = complex.bond_from(i, dir) {
                    if !active(k) {
                        continue;
                    }
                    let b = complex.bonds()[k];
                    let j = if b.tail as usize == i { b.head } else { b.tail };
                    diag += stiff[dir];
                    off.push((j, -stiff[dir]));
                }
            }
            off.push((i as u32, diag));
            off.sort_unstable_by_key(|e| e.0);
            off
        });
        let operator = BlockCsr::from_rows(rows.collect::<Vec<_>>());
        Ok(Self { operator, rhs, energy_offset: offset })
    }

    pub fn energy(&self, u: &[Vec2]) -> f64 {
        let mut au = vec![Vec2::zeros(); u.len()];
        self.operator.mul(u, &mut au);
        0.5 * dot(u, &au) - dot(&self.rhs, u) + self.energy_offset
    }

    /// `A u − rhs`.
    pub fn gradient(&self, u: &[Vec2]) -> Vec<Vec2> {
        let mut g = vec![Vec2::zeros(); u.len()];
        self.operator.mul(u, &mut g);
        g.iter_mut().zip(&self.rhs).for_each(|(gi, r)| *gi -= r);
        g
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub displacement: DisplacementField,
    /// Energy evaluated directly from bonds at the minimiser.
    pub energy: f64,
    /// The same value through the quadratic form.
    pub quadratic_energy: f64,
    /// Slip used, after any adjustment on dangling bonds.
    pub slip: SlipField,
    pub iterations: usize,
    /// Final `‖A u − rhs‖ / ‖rhs‖`, recomputed from scratch.
    pub relative_residual: f64,
}

struct CgOutcome {
    x: Vec<Vec2>,
    iterations: usize,
    relative_residual: f64,
    converged: bool,
}

fn pcg(a: &BlockCsr, b: &[Vec2], m: &dyn Preconditioner, tol: f64, max_iter: usize) -> CgOutcome {
    let n = b.len();
    let mut x = vec![Vec2::zeros(); n];
    let g0 = norm(b);
    if g0 == 0.0 {
        return CgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut iterations = 0;
    let mut ap = vec![Vec2::zeros(); n];
    let mut z = vec![Vec2::zeros(); n];
    // Restart from the true residual if the recursive one drifted away.
    for _restart in 0..4 {
        a.mul(&x, &mut ap);
        let mut r: Vec<Vec2> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
        if norm(&r) <= tol * g0 {
            return CgOutcome { x, iterations, relative_residual: norm(&r) / g0, converged: true };
        }
        m.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iter {
            a.mul(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) || !(rz > 0.0) {
                break;
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            if norm(&r) <= tol * g0 {
                break;
            }
            m.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        if iterations >= max_iter {
            break;
        }
    }
    a.mul(&x, &mut ap);
    let res = b.iter().zip(&ap).map(|(bi, ai)| (bi - ai).norm_squared()).sum::<f64>().sqrt() / g0;
    CgOutcome { x, iterations, relative_residual: res, converged: res <= tol }
}

fn solve_system(complex: &LatticeComplex, system: &QuadraticSystem, opts: &SolverOptions) -> Result<CgOutcome> {
    let max_iter = opts.max_iter_factor.saturating_mul(2 * complex.num_nodes()).max(1);
    let out = match opts.preconditioner {
        PreconditionerKind::Jacobi => pcg(&system.operator, &system.rhs, &Jacobi::new(&system.operator), opts.tol, max_iter),
        PreconditionerKind::Multigrid => {
            let coords: Vec<(i64, i64)> = complex.nodes().iter().map(|n| (n.a, n.b)).collect();
            let mg = Multigrid::new(system.operator.clone(), &coords);
            pcg(&system.operator, &system.rhs, &mg, opts.tol, max_iter)
        }
    };
    if !out.converged {
        let best = DisplacementField::from_values(complex, out.x)?;
        return Err(Error::NotConverged {
            iterations: out.iterations,
            relative_residual: out.relative_residual,
            best: Box::new(best),
        });
    }
    Ok(out)
}

/// `min_u F(u, σ)` over the bonds selected by `bonds` (all when `None`).
///
/// Bonds that belong to no triangle do not affect the dislocation measure, so
/// their slip is free: it is chosen from `|p|, |q| ≤ 2` to best match the
/// current displacement, alternating with the quadratic solve for at most
/// three sweeps.
pub fn minimize_displacement_on(
    complex: &LatticeComplex,
    slip: &SlipField,
    bonds: Option<&[bool]>,
    opts: &SolverOptions,
) -> Result<Minimum> {
    let dangling: Vec<usize> =
        (0..complex.num_bonds()).filter(|&k| complex.is_dangling(k) && bonds.map_or(true, |m| m[k])).collect();
    let mut slip = slip.clone();
    let mut sweeps = 0;
    loop {
        let system = QuadraticSystem::assemble(complex, &slip, bonds)?;
        let out = solve_system(complex, &system, opts)?;
        let quadratic_energy = system.energy(&out.x);
        let u = DisplacementField::from_values(complex, out.x)?;
        let mut changed = false;
        if sweeps < 3 {
            for &k in &dangling {
                let best = best_dangling_slip(complex, &u, k);
                if best != slip.values()[k] {
                    let mut trial = slip.clone();
                    trial.set_bond(k, best);
                    if bond_term(complex, &u, &trial, k) < bond_term(complex, &u, &slip, k) - 1e-15 {
                        slip = trial;
                        changed = true;
                    }
                }
            }
        }
        sweeps += 1;
        if !changed {
            let region: Vec<usize>;
            let r = match bonds {
                None => Region::All,
                Some(m) => {
                    region = (0..m.len()).filter(|&k| m[k]).collect();
                    Region::Bonds(&region)
                }
            };
            let energy = energy(complex, &u, &slip, r)?;
            return Ok(Minimum {
                displacement: u,
                energy,
                quadratic_energy,
                slip,
                iterations: out.iterations,
                relative_residual: out.relative_residual,
            });
        }
    }
}

fn best_dangling_slip(complex: &LatticeComplex, u: &DisplacementField, k: usize) -> LatticeVector {
    let b = complex.bonds()[k];
    let eps = complex.epsilon();
    let t = b.vector().to_vector();
    let target = t.dot(&(u.get(b.head as usize) - u.get(b.tail as usize)));
    let mut best = (f64::INFINITY, LatticeVector::ZERO);
    for p in -2..=2 {
        for q in -2..=2 {
            let s = LatticeVector::new(p, q);
            let miss = (target - eps * t.dot(&s.to_vector())).abs();
            if miss < best.0 - 1e-15 {
                best = (miss, s);
            }
        }
    }
    best.1
}

pub fn minimize_displacement(complex: &LatticeComplex, slip: &SlipField, opts: &SolverOptions) -> Result<Minimum> {
    minimize_displacement_on(complex, slip, None, opts)
}

/// A slip with `μ[σ] = μ` exactly, supported on the bonds crossing one
/// half-line per atom.
pub fn representative_slip(mu: &DislocationMeasure, complex: &LatticeComplex) -> Result<SlipField> {
    let mut slip = SlipField::zeros(complex);
    for (&t, &w) in mu.atoms() {
        if !complex.contains_triangle(t) {
            return Err(Error::MissingTriangle(t));
        }
        let gamma = HalfLine::for_burgers(t, w);
        let crossings = add_half_line_slip(&mut slip, complex, &gamma, w)?;
        for c in crossings {
            for s in complex.incident_triangles(c.bond) {
                if s != t && mu.atoms().contains_key(&s) {
                    return Err(Error::BlockedHalfLine { origin: t, blocking: s });
                }
            }
        }
    }
    let produced = dislocation_measure(&slip, complex)?;
    if produced.atoms() != mu.atoms() {
        return Err(Error::MeasureAudit(format!("target has {} atoms, slip carries {}", mu.len(), produced.len())));
    }
    Ok(slip)
}

/// Checks the preconditions under which one representative slip gives the
/// infimum over all slips.
pub fn validate_for_reduction(mu: &DislocationMeasure, complex: &LatticeComplex) -> Result<()> {
    let topo = complex.topology();
    if !topo.edge_connected {
        return Err(Error::Topology("triangles are not edge-connected".into()));
    }
    if !topo.simply_connected {
        return Err(Error::Topology("union of triangles has a hole".into()));
    }
    if let Some(why) = mild_separation_violation(mu, complex) {
        return Err(Error::NotAdmissible(why));
    }
    Ok(())
}

/// `𝓕_ε(μ)`: validates the complex and the measure, builds a representative
/// slip and minimises over displacements.
pub fn compute_f_of_mu(mu: &DislocationMeasure, complex: &LatticeComplex, opts: &SolverOptions) -> Result<Minimum> {
    validate_for_reduction(mu, complex)?;
    let slip = representative_slip(mu, complex)?;
    minimize_displacement(complex, &slip, opts)
}
