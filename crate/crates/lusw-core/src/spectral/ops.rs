//! Exact spectral differential operators: ∂x ↔ iλ₁, Δ ↔ −|λ|², Λ^s ↔ |λ|^s.
//!
//! Every multiplier m here satisfies m(−λ) = conj m(λ), so real fields stay
//! real. A vector field is a pair [f₁, f₂] of scalar fields.

use num_complex::Complex64;

use super::field::SpectralField;

pub type VectorField = [SpectralField; 2];

pub fn dx(f: &SpectralField) -> SpectralField {
    f.map_multiplier(|l| Complex64::new(0.0, l.0 as f64))
}

pub fn dy(f: &SpectralField) -> SpectralField {
    f.map_multiplier(|l| Complex64::new(0.0, l.1 as f64))
}

pub fn gradient(f: &SpectralField) -> VectorField {
    [dx(f), dy(f)]
}

/// ∇^⊥ f = (−∂y f, ∂x f); always divergence-free.
pub fn perp_gradient(f: &SpectralField) -> VectorField {
    let mut g = dy(f);
    g = g.scale(-1.0);
    [g, dx(f)]
}

pub fn divergence(v: &VectorField) -> SpectralField {
    &dx(&v[0]) + &dy(&v[1])
}

/// Scalar curl ∂x v₂ − ∂y v₁.
pub fn curl(v: &VectorField) -> SpectralField {
    &dx(&v[1]) - &dy(&v[0])
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    f.map_multiplier(|l| Complex64::new(-((l.0 * l.0 + l.1 * l.1) as f64), 0.0))
}

/// Fractional Laplacian Λ^s = (−Δ)^{s/2}, multiplier |λ|^s; s ≥ 0.
pub fn fractional_laplacian(f: &SpectralField, s: f64) -> SpectralField {
    assert!(s >= 0.0, "fractional laplacian requires s >= 0");
    f.map_multiplier(|l| {
        let n2 = (l.0 * l.0 + l.1 * l.1) as f64;
        Complex64::new(n2.powf(0.5 * s), 0.0)
    })
}

/// Torus translation f(· − shift) as the phase shift f̂(λ) e^{−iλ·shift}.
pub fn translate(f: &SpectralField, shift: (f64, f64)) -> SpectralField {
    f.map_multiplier(|l| {
        let phase = -(l.0 as f64 * shift.0 + l.1 as f64 * shift.1);
        Complex64::from_polar(1.0, phase)
    })
}
