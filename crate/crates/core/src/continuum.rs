//! Continuum side: the singular strain of a straight edge dislocation in the
//! isotropic medium with unit Lamé parameters, its self-energy `ψ`, and the
//! relaxed line-tension density `φ` that governs the discrete limit.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::energy::{elastic_density, elastic_stress};
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, SQRT3};

/// Burgers vectors are lattice vectors.
pub type BurgersVector = LatticeVector;

/// `g = −b^⊥/(6π)` with `b^⊥ = (−b₂, b₁)`.
pub fn g_vector(b: BurgersVector) -> Vector2<f64> {
    let v = b.to_vector();
    -Vector2::new(-v.y, v.x) / (6.0 * PI)
}

/// `f(θ) = b/(2π) − (1/(3π)) (−b₁cos2θ − b₂sin2θ, b₂cos2θ − b₁sin2θ)`.
pub fn f_profile(b: BurgersVector, theta: f64) -> Vector2<f64> {
    let v = b.to_vector();
    let (s, c) = (2.0 * theta).sin_cos();
    v / (2.0 * PI) - Vector2::new(-v.x * c - v.y * s, v.y * c - v.x * s) / (3.0 * PI)
}

/// `F(θ) = ∫₀^θ f`, in closed form.
pub fn f_antiderivative(b: BurgersVector, theta: f64) -> Vector2<f64> {
    let v = b.to_vector();
    let (s, c) = (2.0 * theta).sin_cos();
    let one_minus = 1.0 - c;
    v * (theta / (2.0 * PI))
        - Vector2::new(-v.x * s * 0.5 - v.y * one_minus * 0.5, v.y * s * 0.5 - v.x * one_minus * 0.5) / (3.0 * PI)
}

/// Angular profile `Γ(θ) = f(θ) ⊗ τ̂ + g ⊗ r̂`, so that `β(x) = Γ(θ)/ρ`.
pub fn angular_profile(b: BurgersVector, theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    let tau = Vector2::new(-s, c);
    let radial = Vector2::new(c, s);
    f_profile(b, theta) * tau.transpose() + g_vector(b) * radial.transpose()
}

/// Singular strain at `x ≠ 0`: curl-free away from the origin with
/// circulation `b`, and in equilibrium for the isotropic tensor.
pub fn beta_singular(b: BurgersVector, x: Vector2<f64>) -> Result<Matrix2<f64>> {
    let rho = x.norm();
    if rho == 0.0 {
        return Err(Error::AtCore);
    }
    Ok(angular_profile(b, x.y.atan2(x.x)) / rho)
}

/// `Div ℂβ` at `x` by central differences with step `h`; zero up to `O(h²)`
/// away from the core.
pub fn elastic_stress_divergence_fd(b: BurgersVector, x: Vector2<f64>, h: f64) -> Result<Vector2<f64>> {
    let stress = |y: Vector2<f64>| -> Result<Matrix2<f64>> { Ok(elastic_stress(&beta_singular(b, y)?)) };
    let dx = (stress(x + Vector2::new(h, 0.0))? - stress(x - Vector2::new(h, 0.0))?) / (2.0 * h);
    let dy = (stress(x + Vector2::new(0.0, h))? - stress(x - Vector2::new(0.0, h))?) / (2.0 * h);
    Ok(dx.column(0) + dy.column(1))
}

/// Displacement `F(θ̃) + g log ρ` with the angle taken in
/// `[cut_angle, cut_angle + 2π)`. Crossing the cut counterclockwise the
/// value drops by `b`.
pub fn displacement_singular(b: BurgersVector, x: Vector2<f64>, cut_angle: f64) -> Result<Vector2<f64>> {
    let rho = x.norm();
    if rho == 0.0 {
        return Err(Error::AtCore);
    }
    let theta = x.y.atan2(x.x);
    let branch = cut_angle + (theta - cut_angle).rem_euclid(2.0 * PI);
    Ok(f_antiderivative(b, branch) + g_vector(b) * rho.ln())
}

/// Self-energy `ψ(b) = |b|²/(3π)`.
pub fn psi(b: BurgersVector) -> f64 {
    b.norm_squared() as f64 / (3.0 * PI)
}

/// `∫₀^{2π} ½ ℂΓ:Γ dθ` by composite Simpson; agrees with [`psi`].
pub fn psi_quadrature(b: BurgersVector, panels: usize) -> f64 {
    simpson(|t| 0.5 * elastic_density(&angular_profile(b, t)), 0.0, 2.0 * PI, panels)
}

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

/// Cheapest decomposition `b = z₁e₁ + z₂ν + z₃η`: returns `(z₁, z₂, z₃)`
/// minimising `|z₁| + |z₂| + |z₃|`. Since `η = ν − e₁`, fixing `z₃` forces
/// `z₁ = p + z₃`, `z₂ = q − z₃`, and the optimum has `|z₃| ≤ |p| + |q|`.
pub fn phi_decomposition(b: BurgersVector) -> (i64, i64, i64) {
    let n = b.p.abs() + b.q.abs();
    (-n..=n)
        .map(|z3| (b.p + z3, b.q - z3, z3))
        .min_by_key(|&(z1, z2, z3)| (z1.abs() + z2.abs() + z3.abs(), z3.abs(), z3))
        .expect("range is nonempty")
}

/// `φ(b) = (1/(3π)) min Σ|zᵢ|`.
pub fn phi(b: BurgersVector) -> f64 {
    let (z1, z2, z3) = phi_decomposition(b);
    (z1.abs() + z2.abs() + z3.abs()) as f64 / (3.0 * PI)
}

/// Limit of `𝓕_ε(μ_ε)/(ε²|log ε|)`: `(√3/2) Σ φ(b_k)`.
pub fn predicted_limit(burgers: &[BurgersVector]) -> f64 {
    0.5 * SQRT3 * burgers.iter().map(|&b| phi(b)).fold(0.0, |s, x| s + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneity() {
        let b = LatticeVector::new(1, -2);
        let x = Vector2::new(0.3, -0.7);
        let d = beta_singular(b, 2.0 * x).unwrap() - beta_singular(b, x).unwrap() / 2.0;
        assert!(d.amax() < 1e-12);
        assert!(beta_singular(b, Vector2::zeros()).is_err());
    }

    #[test]
    fn antiderivative_starts_at_zero_and_closes_to_b() {
        let b = LatticeVector::new(2, -1);
        assert!(f_antiderivative(b, 0.0).norm() < 1e-15);
        assert!((f_antiderivative(b, 2.0 * PI) - b.to_vector()).norm() < 1e-14);
        let x = Vector2::new(1.0, 0.0);
        assert!(displacement_singular(b, x, 0.0).unwrap().norm() < 1e-15);
    }

    #[test]
    fn closed_form_values() {
        assert!((psi(LatticeVector::E1) - 0.106_103_3).abs() < 1e-7);
        assert_eq!(psi(LatticeVector::ZERO), 0.0);
        assert!((psi(LatticeVector::new(2, 0)) - 4.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((predicted_limit(&[LatticeVector::E1]) - 0.091_888).abs() < 1e-6);
        assert_eq!(predicted_limit(&[]), 0.0);
        let pair = predicted_limit(&[LatticeVector::E1, -LatticeVector::E1]);
        assert!((pair - SQRT3 / (3.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn decomposition_reproduces_b() {
        for p in -4..=4 {
            for q in -4..=4 {
                let b = LatticeVector::new(p, q);
                let (z1, z2, z3) = phi_decomposition(b);
                assert_eq!(z1 * LatticeVector::E1 + z2 * LatticeVector::NU + z3 * LatticeVector::ETA, b);
            }
        }
    }
}
