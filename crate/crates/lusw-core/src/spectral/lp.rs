//! Littlewood-Paley blocks and dyadic projections with sharp cutoffs.
//!
//! B_j = {λ ∈ ℤ² : |λ_m| ≤ 2^j} in the sup norm. The block operator J_j
//! restricts to the shell B_j ∖ B_{j−1} (B_0 for j = 0) and the projection
//! 𝒥_N with N = 2^J keeps B_J, so Σ_j J_j f = f exactly in coefficients.

use super::field::SpectralField;

/// True when λ ∈ B_j.
pub fn in_block(lambda: (i64, i64), j: u32) -> bool {
    let n = 1i64 << j;
    lambda.0.abs() <= n && lambda.1.abs() <= n
}

/// The unique j with λ ∈ B_j ∖ B_{j−1} (0 for λ ∈ B_0).
pub fn shell_of(lambda: (i64, i64)) -> u32 {
    let sup = lambda.0.abs().max(lambda.1.abs());
    let mut j = 0u32;
    while (1i64 << j) < sup {
        j += 1;
    }
    j
}

/// Littlewood-Paley block J_j f: modes in B_j ∖ B_{j−1}.
pub fn block(f: &SpectralField, j: u32) -> SpectralField {
    f.retain(|l| shell_of(l) == j && in_block(l, j))
}

/// Dyadic projection 𝒥_N f with N = 2^j: modes in B_j.
///
/// Idempotent, linear, and commutes with every Fourier multiplier.
pub fn project(f: &SpectralField, j: u32) -> SpectralField {
    if f.max_block() <= j {
        f.clone()
    } else {
        f.truncate_to_level(j)
    }
}
