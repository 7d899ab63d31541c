//! Atomic vector measures, their total variation, and the flat norm
//!
//! `‖μ‖_flat = sup { |Σ φ(xᵢ) wᵢ| : φ Lipschitz, compactly supported in Ω,
//! sup|φ| + Lip φ ≤ 1 }`.
//!
//! For a fixed unit direction `d` the supremum of `Σ φ(xᵢ)(wᵢ·d)` over the
//! atom values is a linear program in `φᵢ`, `α ≥ sup|φ|` and `λ ≥ Lip φ`;
//! any feasible atom assignment extends to a global test function by the
//! McShane construction, so restricting to atoms loses nothing. The vector
//! norm then takes the best direction.

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable};
use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::ConvexPolygon;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(Point2<f64>, Vector2<f64>)>,
}

impl AtomicMeasure {
    /// Atoms at bitwise-equal points are merged; zero weights are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (Point2<f64>, Vector2<f64>)>) -> Self {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut merged: Vec<(Point2<f64>, Vector2<f64>)> = Vec::new();
        for (x, w) in atoms {
            let key = (x.x.to_bits(), x.y.to_bits());
            match index.get(&key) {
                Some(&k) => merged[k].1 += w,
                None => {
                    index.insert(key, merged.len());
                    merged.push((x, w));
                }
            }
        }
        merged.retain(|(_, w)| *w != Vector2::zeros());
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[(Point2<f64>, Vector2<f64>)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.atoms.iter().map(|&(x, w)| (x, s * w)))
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self::new(self.atoms.iter().chain(&other.atoms).copied())
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w.norm()).fold(0.0, |s, x| s + x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlatNormOptions {
    /// Directions sampled over a half turn when weights are not all parallel.
    pub directions: usize,
    /// Golden-section steps around the best sampled direction.
    pub refine_steps: usize,
    /// Larger measures are estimated from a central window instead.
    pub max_exact_atoms: usize,
    /// Target number of atoms in that window.
    pub window_atoms: usize,
}

impl Default for FlatNormOptions {
    fn default() -> Self {
        Self { directions: 720, refine_steps: 24, max_exact_atoms: 5000, window_atoms: 2000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatNorm {
    pub value: f64,
    /// Unit direction attaining the value.
    pub direction: [f64; 2],
    /// The value is an extrapolation from a window, not an exact optimum.
    pub estimated: bool,
    /// A certified lower bound (equal to `value` when exact).
    pub lower_bound: f64,
    /// Atoms entering the linear programs.
    pub atoms_used: usize,
}

/// `Σ |wᵢ|`.
pub fn total_variation(mu: &AtomicMeasure) -> f64 {
    mu.total_variation()
}

pub fn flat_norm(mu: &AtomicMeasure, domain: &ConvexPolygon, opts: &FlatNormOptions) -> Result<FlatNorm> {
    for (x, _) in &mu.atoms {
        if !domain.contains_strictly(*x) {
            return Err(Error::OutsideDomain(x.x, x.y));
        }
    }
    if mu.is_empty() {
        return Ok(FlatNorm { value: 0.0, direction: [1.0, 0.0], estimated: false, lower_bound: 0.0, atoms_used: 0 });
    }
    if mu.len() <= opts.max_exact_atoms {
        let (value, d) = best_direction(mu, domain, opts)?;
        return Ok(FlatNorm {
            value,
            direction: [d.x, d.y],
            estimated: false,
            lower_bound: value,
            atoms_used: mu.len(),
        });
    }

    // Window estimate: a central square inside the domain. Test functions
    // supported in the window are admissible for the whole domain, so the
    // window optimum (over the window's atoms) is a lower bound; the value is
    // then scaled by the ratio of total variations.
    let window = central_window(mu, domain, opts.window_atoms)?;
    let inside = AtomicMeasure::new(mu.atoms.iter().copied().filter(|(x, _)| window.contains_strictly(*x)));
    let (lower, d) = best_direction(&inside, &window, opts)?;
    let ratio = mu.total_variation() / inside.total_variation().max(f64::MIN_POSITIVE);
    let value = (lower * ratio).min(mu.total_variation());
    Ok(FlatNorm { value, direction: [d.x, d.y], estimated: true, lower_bound: lower, atoms_used: inside.len() })
}

fn central_window(mu: &AtomicMeasure, domain: &ConvexPolygon, target: usize) -> Result<ConvexPolygon> {
    let c = domain.centroid();
    let square = |h: f64| {
        ConvexPolygon::new(vec![
            Point2::new(c.x - h, c.y - h),
            Point2::new(c.x + h, c.y - h),
            Point2::new(c.x + h, c.y + h),
            Point2::new(c.x - h, c.y + h),
        ])
    };
    let fits = |h: f64| square(h).map(|s| s.vertices().iter().all(|v| domain.contains(*v))).unwrap_or(false);
    let (mut lo, mut hi) = (0.0, domain.diameter());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h_max = lo;
    let count = |h: f64| mu.atoms.iter().filter(|(x, _)| (x.x - c.x).abs() < h && (x.y - c.y).abs() < h).count();
    let (mut lo, mut hi) = (0.0, h_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if count(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::LinearProgram("could not place an estimation window".into()));
    }
    square(lo)
}

/// Maximal directional value and the direction attaining it.
fn best_direction(mu: &AtomicMeasure, domain: &ConvexPolygon, opts: &FlatNormOptions) -> Result<(f64, Vector2<f64>)> {
    if mu.is_empty() {
        return Ok((0.0, Vector2::x()));
    }
    let dist: Vec<f64> = mu.atoms.iter().map(|(x, _)| domain.distance_to_boundary(*x)).collect();
    let lp = DirectionalLp::new(mu, dist);

    // All weights parallel: the directional value peaks along that line.
    let (_, w0) = mu.atoms.iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).expect("nonempty");
    let u = w0.normalize();
    let parallel = mu.atoms.iter().all(|(_, w)| (w.x * u.y - w.y * u.x).abs() <= 1e-12 * w.norm().max(1.0));
    if parallel {
        return Ok((lp.solve(u)?, u));
    }

    let n = opts.directions.max(4);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..n {
        let theta = std::f64::consts::PI * k as f64 / n as f64;
        let v = lp.solve(Vector2::new(theta.cos(), theta.sin()))?;
        if v > best.0 {
            best = (v, theta);
        }
    }
    let h = std::f64::consts::PI / n as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |t: f64| lp.solve(Vector2::new(t.cos(), t.sin()));
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..opts.refine_steps {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    for (v, t) in [(fc, c), (fd, d)] {
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok((best.0, Vector2::new(best.1.cos(), best.1.sin())))
}

struct DirectionalLp<'a> {
    mu: &'a AtomicMeasure,
    dist: Vec<f64>,
    /// Initial Lipschitz pairs: a few nearest neighbours per atom.
    seed_pairs: Vec<(usize, usize)>,
}

impl<'a> DirectionalLp<'a> {
    fn new(mu: &'a AtomicMeasure, dist: Vec<f64>) -> Self {
        let n = mu.len();
        let k = 8.min(n.saturating_sub(1));
        let mut seed_pairs = Vec::new();
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for i in 0..n {
            order.clear();
            order.extend((0..n).filter(|&j| j != i).map(|j| ((mu.atoms[i].0 - mu.atoms[j].0).norm(), j)));
            if k > 0 {
                order.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
            }
            for &(_, j) in &order[..k] {
                seed_pairs.push((i.min(j), i.max(j)));
            }
        }
        seed_pairs.sort_unstable();
        seed_pairs.dedup();
        Self { mu, dist, seed_pairs }
    }

    fn solve(&self, direction: Vector2<f64>) -> Result<f64> {
        let atoms = &self.mu.atoms;
        let n = atoms.len();
        let lp_err = |e: microlp::Error| Error::LinearProgram(e.to_string());

        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let phi: Vec<Variable> = atoms.iter().map(|(_, w)| problem.add_var(w.dot(&direction), (-1.0, 1.0))).collect();
        let alpha = problem.add_var(0.0, (0.0, 1.0));
        let lambda = problem.add_var(0.0, (0.0, 1.0));
        problem.add_constraint([(alpha, 1.0), (lambda, 1.0)], ComparisonOp::Le, 1.0);
        for i in 0..n {
            for s in [1.0, -1.0] {
                problem.add_constraint([(phi[i], s), (alpha, -1.0)], ComparisonOp::Le, 0.0);
                problem.add_constraint([(phi[i], s), (lambda, -self.dist[i])], ComparisonOp::Le, 0.0);
            }
        }
        let lipschitz = |p: &mut Problem, i: usize, j: usize| {
            let d = (atoms[i].0 - atoms[j].0).norm();
            p.add_constraint([(phi[i], 1.0), (phi[j], -1.0), (lambda, -d)], ComparisonOp::Le, 0.0);
            p.add_constraint([(phi[j], 1.0), (phi[i], -1.0), (lambda, -d)], ComparisonOp::Le, 0.0);
        };
        for &(i, j) in &self.seed_pairs {
            lipschitz(&mut problem, i, j);
        }
        let mut solution: Solution = problem.solve().map_err(lp_err)?.into_solution().map_err(|e| {
            Error::LinearProgram(format!("{:?}", e.termination_reason()))
        })?;

        // Add whichever Lipschitz constraints the current optimum violates.
        loop {
            let vals: Vec<f64> = phi.iter().map(|&v| solution.var_value(v)).collect();
            let lam = solution.var_value(lambda);
            let mut violated = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let d = (atoms[i].0 - atoms[j].0).norm();
                    let excess = (vals[i] - vals[j]).abs() - lam * d;
                    if excess > 1e-9 {
                        violated.push((i, j, vals[i] > vals[j]));
                    }
                }
            }
            if violated.is_empty() {
                return Ok(solution.objective().max(0.0));
            }
            for (i, j, i_high) in violated {
                let d = (atoms[i].0 - atoms[j].0).norm();
                let (hi, lo) = if i_high { (i, j) } else { (j, i) };
                solution = solution
                    .add_constraint([(phi[hi], 1.0), (phi[lo], -1.0), (lambda, -d)], ComparisonOp::Le, 0.0)
                    .map_err(lp_err)?
                    .into_solution()
                    .map_err(|e| Error::LinearProgram(format!("{:?}", e.termination_reason())))?;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> ConvexPolygon {
        ConvexPolygon::square(1.0).unwrap()
    }

    #[test]
    fn single_centered_atom() {
        let mu = AtomicMeasure::new([(Point2::origin(), Vector2::x())]);
        let f = flat_norm(&mu, &square(), &FlatNormOptions::default()).unwrap();
        assert!((f.value - 0.5).abs() < 1e-9, "{}", f.value);
        assert!(!f.estimated);
    }

    #[test]
    fn off_center_atom_is_d_over_one_plus_d() {
        let mu = AtomicMeasure::new([(Point2::new(0.6, 0.1), Vector2::new(0.0, -2.0))]);
        let f = flat_norm(&mu, &square(), &FlatNormOptions::default()).unwrap();
        let d: f64 = 0.4;
        assert!((f.value - 2.0 * d / (1.0 + d)).abs() < 1e-9);
    }

    #[test]
    fn dipole_is_bounded_by_separation() {
        let x = Point2::new(-0.05, 0.0);
        let y = Point2::new(0.05, 0.0);
        let mu = AtomicMeasure::new([(x, Vector2::x()), (y, -Vector2::x())]);
        let f = flat_norm(&mu, &square(), &FlatNormOptions::default()).unwrap();
        assert!(f.value <= 0.1 + 1e-12);
        // φ(x) = −φ(y) = s λ·0.05, s ≤ … gives 0.1/(1 + 0.05) for this geometry.
        assert!((f.value - 0.1 / 1.05).abs() < 1e-9, "{}", f.value);
    }

    #[test]
    fn atom_on_boundary_is_rejected() {
        let mu = AtomicMeasure::new([(Point2::new(1.0, 0.0), Vector2::x())]);
        assert!(flat_norm(&mu, &square(), &FlatNormOptions::default()).is_err());
    }

    #[test]
    fn merging_and_dropping() {
        let p = Point2::new(0.1, 0.2);
        let mu = AtomicMeasure::new([(p, Vector2::x()), (p, -Vector2::x()), (Point2::origin(), Vector2::y())]);
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.total_variation(), 1.0);
    }
}
