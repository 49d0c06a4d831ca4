//! Fourier-space representation of real scalar fields on the torus [0,2π)².
//!
//! A field f is stored through its Fourier coefficients f̂(λ), λ ∈ ℤ², with
//!
//!   f(x) = Σ_λ f̂(λ) e^{iλ·x},    f̂(λ) = (2π)⁻² ∫ f(x) e^{−iλ·x} dx.
//!
//! Coefficients live on the square block |λ₁|, |λ₂| ≤ 2^J for some level J
//! and satisfy the Hermitian symmetry f̂(−λ) = conj f̂(λ) of real fields.
//! With this normalization Parseval reads ⟨f, g⟩_{L²} = (2π)² Σ_λ f̂(λ) ĝ(λ)*.

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Lebesgue measure of the torus, (2π)².
pub const TORUS_AREA: f64 = std::f64::consts::TAU * std::f64::consts::TAU;

/// Smallest level j ≥ 0 with 2^j ≥ n.
pub(crate) fn covering_level(n: i64) -> u32 {
    debug_assert!(n >= 0);
    let mut j = 0u32;
    while (1i64 << j) < n {
        j += 1;
    }
    j
}

/// Real scalar field on 𝕋² held as Fourier coefficients on a square block.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    level: u32,
    coeffs: Array2<Complex64>,
}

impl SpectralField {
    /// The zero field supported on the block of the given level.
    pub fn zeros(level: u32) -> Self {
        let n = 2 * (1usize << level) + 1;
        SpectralField {
            level,
            coeffs: Array2::zeros((n, n)),
        }
    }

    /// Field equal to the constant `c` everywhere.
    pub fn constant(c: f64) -> Self {
        let mut f = SpectralField::zeros(0);
        f.set((0, 0), Complex64::new(c, 0.0));
        f
    }

    /// Field with a single cosine mode `amp·cos(λ·x)`.
    pub fn cosine(lambda: (i64, i64), amp: f64) -> Self {
        let mut f = SpectralField::zeros(covering_level(lambda.0.abs().max(lambda.1.abs())));
        let half = Complex64::new(0.5 * amp, 0.0);
        f.set(lambda, half);
        f.set((-lambda.0, -lambda.1), half);
        f
    }

    /// Field with a single sine mode `amp·sin(λ·x)`.
    pub fn sine(lambda: (i64, i64), amp: f64) -> Self {
        let mut f = SpectralField::zeros(covering_level(lambda.0.abs().max(lambda.1.abs())));
        // sin(λ·x) = (e^{iλ·x} − e^{−iλ·x}) / 2i
        f.set(lambda, Complex64::new(0.0, -0.5 * amp));
        f.set((-lambda.0, -lambda.1), Complex64::new(0.0, 0.5 * amp));
        f
    }

    /// Level J of the retaining block: every nonzero mode has |λ_m| ≤ 2^J.
    pub fn max_block(&self) -> u32 {
        self.level
    }

    /// Half-width 2^J of the coefficient square.
    pub fn half_width(&self) -> i64 {
        1i64 << self.level
    }

    /// Largest |λ_m| over modes that are actually nonzero (0 for the zero field).
    pub fn bandwidth(&self) -> i64 {
        let mut bw = 0i64;
        for (lambda, c) in self.iter() {
            if c != Complex64::new(0.0, 0.0) {
                bw = bw.max(lambda.0.abs()).max(lambda.1.abs());
            }
        }
        bw
    }

    #[inline]
    fn index(&self, lambda: (i64, i64)) -> Option<(usize, usize)> {
        let hw = self.half_width();
        if lambda.0.abs() <= hw && lambda.1.abs() <= hw {
            Some(((lambda.0 + hw) as usize, (lambda.1 + hw) as usize))
        } else {
            None
        }
    }

    /// Coefficient f̂(λ); zero outside the stored block.
    #[inline]
    pub fn get(&self, lambda: (i64, i64)) -> Complex64 {
        match self.index(lambda) {
            Some(ij) => self.coeffs[ij],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Set a coefficient. Panics if λ lies outside the stored block.
    #[inline]
    pub fn set(&mut self, lambda: (i64, i64), value: Complex64) {
        let ij = self
            .index(lambda)
            .unwrap_or_else(|| panic!("mode {lambda:?} outside block of level {}", self.level));
        self.coeffs[ij] = value;
    }

    /// Iterate over all stored (λ, f̂(λ)) pairs, including zeros.
    pub fn iter(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        let hw = self.half_width();
        self.coeffs
            .indexed_iter()
            .map(move |((i, j), &c)| ((i as i64 - hw, j as i64 - hw), c))
    }

    /// Modes with a nonzero coefficient.
    pub fn nonzero_modes(&self) -> Vec<((i64, i64), Complex64)> {
        self.iter()
            .filter(|&(_, c)| c != Complex64::new(0.0, 0.0))
            .collect()
    }

    /// New field with every coefficient multiplied by `m(λ)`.
    ///
    /// Realness is preserved whenever m(−λ) = conj m(λ).
    pub fn map_multiplier(&self, m: impl Fn((i64, i64)) -> Complex64) -> Self {
        let hw = self.half_width();
        let coeffs = Array2::from_shape_fn(self.coeffs.raw_dim(), |(i, j)| {
            let lambda = (i as i64 - hw, j as i64 - hw);
            self.coeffs[(i, j)] * m(lambda)
        });
        SpectralField {
            level: self.level,
            coeffs,
        }
    }

    /// New field keeping only modes for which `keep(λ)` holds.
    pub fn retain(&self, keep: impl Fn((i64, i64)) -> bool) -> Self {
        self.map_multiplier(|l| {
            if keep(l) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Copy coefficients into a block of (usually larger) level.
    /// Modes outside the target block are dropped.
    pub fn resize_block(&self, level: u32) -> Self {
        let mut out = SpectralField::zeros(level);
        let hw_out = out.half_width();
        for (lambda, c) in self.iter() {
            if c != Complex64::new(0.0, 0.0) && lambda.0.abs() <= hw_out && lambda.1.abs() <= hw_out
            {
                out.set(lambda, c);
            }
        }
        out
    }

    /// Restriction to the block B_{2^level}: keeps |λ_m| ≤ 2^level exactly.
    pub fn truncate_to_level(&self, level: u32) -> Self {
        self.resize_block(level)
    }

    /// Enforce f̂(−λ) = conj f̂(λ) exactly by averaging conjugate pairs.
    ///
    /// Forward FFTs of real samples are Hermitian only up to round-off; this
    /// makes the invariant bit-true.
    pub fn conj_symmetrize(&mut self) {
        let hw = self.half_width();
        for l1 in -hw..=hw {
            for l2 in -hw..=hw {
                if (l1, l2) > (-l1, -l2) {
                    continue;
                }
                let a = self.get((l1, l2));
                let b = self.get((-l1, -l2));
                let avg = 0.5 * (a + b.conj());
                if (l1, l2) == (0, 0) {
                    self.set((0, 0), Complex64::new(a.re, 0.0));
                } else {
                    self.set((l1, l2), avg);
                    self.set((-l1, -l2), avg.conj());
                }
            }
        }
    }

    /// Largest violation of Hermitian symmetry, max_λ |f̂(−λ) − conj f̂(λ)|.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (lambda, c) in self.iter() {
            let mirror = self.get((-lambda.0, -lambda.1));
            worst = worst.max((mirror - c.conj()).norm());
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// ‖f‖_{k,2} = ((2π)² Σ_λ (1+|λ|²)^k |f̂(λ)|²)^{1/2}.
    ///
    /// Negative k is allowed and used for W^{−1,2} diagnostics.
    pub fn sobolev_norm(&self, k: f64) -> f64 {
        let mut sum = 0.0;
        for (lambda, c) in self.iter() {
            let n2 = (lambda.0 * lambda.0 + lambda.1 * lambda.1) as f64;
            sum += (1.0 + n2).powf(k) * c.norm_sqr();
        }
        (TORUS_AREA * sum).sqrt()
    }

    /// L² norm, equal to `sobolev_norm(0)`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.iter().map(|(_, c)| c.norm_sqr()).sum();
        (TORUS_AREA * sum).sqrt()
    }

    /// L² inner product ⟨f, g⟩ = (2π)² Σ_λ f̂(λ) ĝ(λ)*, real part.
    pub fn l2_inner(&self, other: &SpectralField) -> f64 {
        let (small, large) = if self.level <= other.level {
            (self, other)
        } else {
            (other, self)
        };
        let mut sum = 0.0;
        for (lambda, c) in small.iter() {
            sum += (c * large.get(lambda).conj()).re;
        }
        TORUS_AREA * sum
    }

    /// L² distance ‖f − g‖₂ without materializing the difference.
    pub fn l2_distance(&self, other: &SpectralField) -> f64 {
        self.weighted_distance(other, 0.0)
    }

    /// W^{k,2} distance with the multiplier (1+|λ|²)^{k/2}.
    pub fn weighted_distance(&self, other: &SpectralField, k: f64) -> f64 {
        let hw = self.half_width().max(other.half_width());
        let mut sum = 0.0;
        for l1 in -hw..=hw {
            for l2 in -hw..=hw {
                let d = self.get((l1, l2)) - other.get((l1, l2));
                if d != Complex64::new(0.0, 0.0) {
                    let n2 = (l1 * l1 + l2 * l2) as f64;
                    sum += (1.0 + n2).powf(k) * d.norm_sqr();
                }
            }
        }
        (TORUS_AREA * sum).sqrt()
    }

    /// In-place self += scale · other (blocks are promoted as needed).
    pub fn scaled_add(&mut self, scale: f64, other: &SpectralField) {
        if other.level > self.level {
            *self = self.resize_block(other.level);
        }
        let hw = other.half_width();
        let shift = self.half_width() - hw;
        for ((i, j), &c) in other.coeffs.indexed_iter() {
            if c != Complex64::new(0.0, 0.0) {
                self.coeffs[((i as i64 + shift) as usize, (j as i64 + shift) as usize)] +=
                    scale * c;
            }
        }
    }

    /// Zero-mean random field with |f̂(λ)| ∝ (1+|λ|²)^{−decay/2} on
    /// 0 < |λ_m| ≤ bandwidth, Gaussian coefficients, reproducible from `seed`.
    pub fn random_smooth(seed: u64, level: u32, bandwidth: i64, decay: f64) -> Self {
        let mut f = SpectralField::zeros(level);
        let bw = bandwidth.min(f.half_width());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for l1 in -bw..=bw {
            for l2 in -bw..=bw {
                // fill the lexicographically positive half, mirror the rest
                if (l1, l2) <= (0, 0) {
                    continue;
                }
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                let n2 = (l1 * l1 + l2 * l2) as f64;
                let amp = (1.0 + n2).powf(-0.5 * decay);
                let c = Complex64::new(g1, g2) * amp * std::f64::consts::FRAC_1_SQRT_2;
                f.set((l1, l2), c);
                f.set((-l1, -l2), c.conj());
            }
        }
        f
    }

    /// Rescale so the largest coefficient magnitude maps the field to the
    /// requested L∞-ish amplitude on the grid; used by initial conditions.
    pub fn scale(&self, factor: f64) -> Self {
        self.map_multiplier(|_| Complex64::new(factor, 0.0))
    }
}

impl std::ops::Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.scaled_add(1.0, rhs);
        out
    }
}

impl std::ops::Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.scaled_add(-1.0, rhs);
        out
    }
}
