//! Transport-noise machinery: divergence-free basis fields Φ_n with summable
//! amplitudes, the covariance diagonal a(x) = Σ_n Φ_n Φ_nᵀ, the Itô-Stokes
//! drift u_s = ½ ∇·a, and the operators they induce on a state:
//! the transport increment Σ_n Δβ^n (Φ_n·∇)X and the Itô correction
//! ½ ∇·(a ∇X).
//!
//! σ is autonomous: the basis is built once per grid and reused read-only.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::State;
use crate::spectral::{
    covering_level, exact_product, ops, synthesize, transform_to_level, GridSpec, SpectralField,
};

/// How the basis fields are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseFamily {
    /// One spatially constant mode Φ₁ = ε·c. Zero divergence and zero drift.
    ConstantVector { direction: (f64, f64) },
    /// Modes Φ = ∇^⊥ψ for ψ ∈ {cos(λ·x), sin(λ·x)} over a small wavenumber
    /// set, with amplitudes √Λ_n = ε n^{−decay/2} (so Σ Λ_n < ∞ for decay > 1).
    StreamFunction {
        wavenumbers: Vec<(i64, i64)>,
        decay: f64,
    },
}

/// Declarative description of the noise; identical across resolutions so a
/// refinement study sees one and the same σ.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    /// Global dimensionless magnitude ε; ε = 0 switches the noise off.
    pub scale: f64,
    /// Reject bases whose Itô-Stokes drift is not divergence-free.
    pub require_solenoidal_isd: bool,
}

impl NoiseSpec {
    pub fn constant(direction: (f64, f64), scale: f64) -> Self {
        NoiseSpec {
            family: NoiseFamily::ConstantVector { direction },
            scale,
            require_solenoidal_isd: false,
        }
    }

    pub fn stream_function(wavenumbers: Vec<(i64, i64)>, decay: f64, scale: f64) -> Self {
        NoiseSpec {
            family: NoiseFamily::StreamFunction { wavenumbers, decay },
            scale,
            require_solenoidal_isd: false,
        }
    }

    /// Number of scalar Brownian motions the basis will consume.
    pub fn mode_count(&self) -> usize {
        match &self.family {
            NoiseFamily::ConstantVector { .. } => 1,
            NoiseFamily::StreamFunction { wavenumbers, .. } => 2 * wavenumbers.len(),
        }
    }

    /// Largest |λ_m| used by the basis fields.
    pub fn max_wavenumber(&self) -> i64 {
        match &self.family {
            NoiseFamily::ConstantVector { .. } => 0,
            NoiseFamily::StreamFunction { wavenumbers, .. } => wavenumbers
                .iter()
                .map(|w| w.0.abs().max(w.1.abs()))
                .max()
                .unwrap_or(0),
        }
    }
}

/// One Karhunen-Loève mode: Φ_n with amplitude √Λ_n, kept both spectrally
/// and as samples on the basis grid.
#[derive(Debug, Clone)]
pub struct NoiseMode {
    pub wavenumber: Option<(i64, i64)>,
    /// √Λ_n, fixed so that ‖Φ_n‖₂ = √Λ_n · 2π.
    pub amplitude: f64,
    pub phi: ops::VectorField,
    pub(crate) phi_grid: [Array2<f64>; 2],
}

/// Symmetric 2×2 covariance field a(x), spectrally exact.
#[derive(Debug, Clone)]
pub struct CovarianceField {
    pub a11: SpectralField,
    pub a12: SpectralField,
    pub a22: SpectralField,
}

impl CovarianceField {
    /// Largest |λ_m| appearing in any component.
    pub fn bandwidth(&self) -> i64 {
        self.a11
            .bandwidth()
            .max(self.a12.bandwidth())
            .max(self.a22.bandwidth())
    }

    /// Smallest eigenvalue of a(x) over the m×m grid.
    pub fn min_eigenvalue(&self, m: usize) -> f64 {
        let a11 = synthesize(&self.a11, m).expect("covariance bandwidth fits grid");
        let a12 = synthesize(&self.a12, m).expect("covariance bandwidth fits grid");
        let a22 = synthesize(&self.a22, m).expect("covariance bandwidth fits grid");
        let mut min = f64::INFINITY;
        for ((i, j), &x11) in a11.indexed_iter() {
            let x12 = a12[(i, j)];
            let x22 = a22[(i, j)];
            let tr = x11 + x22;
            let disc = ((x11 - x22).powi(2) + 4.0 * x12 * x12).sqrt();
            min = min.min(0.5 * (tr - disc));
        }
        min
    }

    /// (min, max, mean) of trace a(x) over the m×m grid.
    pub fn trace_stats(&self, m: usize) -> (f64, f64, f64) {
        let a11 = synthesize(&self.a11, m).expect("covariance bandwidth fits grid");
        let a22 = synthesize(&self.a22, m).expect("covariance bandwidth fits grid");
        let tr = a11 + a22;
        let min = tr.iter().copied().fold(f64::INFINITY, f64::min);
        let max = tr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = tr.sum() / tr.len() as f64;
        (min, max, mean)
    }
}

/// Immutable noise basis tied to a grid.
#[derive(Debug, Clone)]
pub struct NoiseBasis {
    pub modes: Vec<NoiseMode>,
    pub covariance: CovarianceField,
    pub isd: ops::VectorField,
    grid: GridSpec,
    cov_grid: [Array2<f64>; 3],
    isd_grid: Option<[Array2<f64>; 2]>,
}

/// Pointwise Gram sum a(x) = Σ_n Φ_n(x) Φ_nᵀ(x), exact in coefficients.
pub fn covariance_field(modes: &[NoiseMode]) -> CovarianceField {
    let mut a11 = SpectralField::zeros(0);
    let mut a12 = SpectralField::zeros(0);
    let mut a22 = SpectralField::zeros(0);
    for mode in modes {
        a11.scaled_add(1.0, &exact_product(&mode.phi[0], &mode.phi[0]));
        a12.scaled_add(1.0, &exact_product(&mode.phi[0], &mode.phi[1]));
        a22.scaled_add(1.0, &exact_product(&mode.phi[1], &mode.phi[1]));
    }
    CovarianceField { a11, a12, a22 }
}

/// Itô-Stokes drift u_s^i = ½ Σ_j ∂_j a_{ij}, evaluated spectrally.
pub fn ito_stokes_drift(cov: &CovarianceField) -> ops::VectorField {
    let us1 = (&ops::dx(&cov.a11) + &ops::dy(&cov.a12)).scale(0.5);
    let us2 = (&ops::dx(&cov.a12) + &ops::dy(&cov.a22)).scale(0.5);
    [us1, us2]
}

fn build_modes(spec: &NoiseSpec, grid: &GridSpec) -> Result<Vec<NoiseMode>> {
    let m = grid.points();
    let mut modes = Vec::new();
    match &spec.family {
        NoiseFamily::ConstantVector { direction } => {
            let (cx, cy) = *direction;
            if spec.scale > 0.0 && cx == 0.0 && cy == 0.0 {
                return Err(Error::config(
                    "constant noise mode needs a nonzero direction",
                ));
            }
            let phi = [
                SpectralField::constant(spec.scale * cx),
                SpectralField::constant(spec.scale * cy),
            ];
            let phi_grid = [synthesize(&phi[0], m)?, synthesize(&phi[1], m)?];
            modes.push(NoiseMode {
                wavenumber: None,
                amplitude: spec.scale * (cx * cx + cy * cy).sqrt(),
                phi,
                phi_grid,
            });
        }
        NoiseFamily::StreamFunction { wavenumbers, decay } => {
            if wavenumbers.is_empty() {
                return Err(Error::config(
                    "stream-function noise needs at least one mode",
                ));
            }
            let mut n = 0usize;
            for &lambda in wavenumbers {
                if lambda == (0, 0) {
                    return Err(Error::config("stream-function wavenumbers must be nonzero"));
                }
                if lambda.0.abs().max(lambda.1.abs()) > grid.cutoff() {
                    return Err(Error::config(format!(
                        "noise wavenumber {lambda:?} lies outside the grid block B_{}",
                        grid.cutoff()
                    )));
                }
                for phase in 0..2usize {
                    n += 1;
                    let amplitude = spec.scale * (n as f64).powf(-0.5 * decay);
                    let psi = if phase == 0 {
                        SpectralField::cosine(lambda, 1.0)
                    } else {
                        SpectralField::sine(lambda, 1.0)
                    };
                    // ‖∇^⊥ψ‖₂ = |λ|·2π/√2 for unit cos/sin, so this factor
                    // pins ‖Φ_n‖₂ = √Λ_n·2π.
                    let modulus = ((lambda.0 * lambda.0 + lambda.1 * lambda.1) as f64).sqrt();
                    let factor = amplitude * std::f64::consts::SQRT_2 / modulus;
                    let grad = ops::perp_gradient(&psi);
                    let phi = [grad[0].scale(factor), grad[1].scale(factor)];
                    let phi_grid = [synthesize(&phi[0], m)?, synthesize(&phi[1], m)?];
                    modes.push(NoiseMode {
                        wavenumber: Some(lambda),
                        amplitude,
                        phi,
                        phi_grid,
                    });
                }
            }
        }
    }
    Ok(modes)
}

/// Build the basis, its covariance and drift on the given grid.
pub fn build_basis(spec: &NoiseSpec, grid: &GridSpec) -> Result<NoiseBasis> {
    let modes = build_modes(spec, grid)?;
    let covariance = covariance_field(&modes);
    if (grid.points() as i64) < 2 * covariance.bandwidth() {
        return Err(Error::config(
            "grid too small to sample the noise covariance",
        ));
    }
    let isd = ito_stokes_drift(&covariance);
    let div_isd = ops::divergence(&isd).l2_norm();
    if spec.require_solenoidal_isd {
        let scale = 1.0 + covariance.a11.l2_norm() + covariance.a22.l2_norm();
        if div_isd > 1e-12 * scale {
            return Err(Error::config(format!(
                "noise spec violates div u_s = 0 (residual {div_isd:.3e})"
            )));
        }
    }
    let m = grid.points();
    let cov_grid = [
        synthesize(&covariance.a11, m)?,
        synthesize(&covariance.a12, m)?,
        synthesize(&covariance.a22, m)?,
    ];
    let isd_norm = isd[0].l2_norm() + isd[1].l2_norm();
    let isd_grid = if isd_norm > 0.0 {
        Some([synthesize(&isd[0], m)?, synthesize(&isd[1], m)?])
    } else {
        None
    };
    Ok(NoiseBasis {
        modes,
        covariance,
        isd,
        grid: *grid,
        cov_grid,
        isd_grid,
    })
}

impl NoiseBasis {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn is_active(&self) -> bool {
        self.modes.iter().any(|m| m.amplitude != 0.0)
    }

    pub fn has_drift(&self) -> bool {
        self.isd_grid.is_some()
    }

    pub(crate) fn isd_grid(&self) -> Option<&[Array2<f64>; 2]> {
        self.isd_grid.as_ref()
    }

    pub(crate) fn covariance_grid(&self) -> &[Array2<f64>; 3] {
        &self.cov_grid
    }

    /// Products a·∇φ and (ΣΔβΦ)·∇φ retain modes up to the state block N;
    /// exactness needs M ≥ 2N + bandwidth(a) + 1.
    pub fn check_dealiasing(&self, state_level: u32) -> Result<()> {
        let needed = 2 * (1i64 << state_level) + self.covariance.bandwidth() + 1;
        if (self.grid.points() as i64) < needed {
            return Err(Error::config(format!(
                "grid too small for dealiased noise products: need {needed} points, have {}",
                self.grid.points()
            )));
        }
        Ok(())
    }

    /// Transport increment Σ_n Δβ^n (Φ_n·∇)X, each component projected to
    /// the block of X.
    pub fn apply_transport_noise(&self, x: &State, increments: &[f64]) -> Result<State> {
        if increments.len() != self.modes.len() {
            return Err(Error::config(format!(
                "got {} Brownian increments for {} noise modes",
                increments.len(),
                self.modes.len()
            )));
        }
        self.check_dealiasing(x.level())?;
        let m = self.grid.points();
        // Effective field σ_eff = Σ_n Δβ^n Φ_n; the sum commutes with the
        // pointwise product.
        let mut s1 = Array2::zeros((m, m));
        let mut s2 = Array2::zeros((m, m));
        for (mode, &db) in self.modes.iter().zip(increments) {
            if db != 0.0 && mode.amplitude != 0.0 {
                s1.scaled_add(db, &mode.phi_grid[0]);
                s2.scaled_add(db, &mode.phi_grid[1]);
            }
        }
        let level = x.level();
        let advect = |f: &SpectralField| -> Result<SpectralField> {
            let fx = synthesize(&ops::dx(f), m)?;
            let fy = synthesize(&ops::dy(f), m)?;
            let prod = &s1 * &fx + &s2 * &fy;
            transform_to_level(&prod, level)
        };
        Ok(State {
            u: [advect(&x.u[0])?, advect(&x.u[1])?],
            h: advect(&x.h)?,
        })
    }

    /// Itô correction ½ ∇·(a ∇φ) per component, projected to the block of X.
    pub fn ito_correction(&self, x: &State) -> Result<State> {
        self.check_dealiasing(x.level())?;
        let m = self.grid.points();
        let level = x.level();
        let correct = |f: &SpectralField| -> Result<SpectralField> {
            let fx = synthesize(&ops::dx(f), m)?;
            let fy = synthesize(&ops::dy(f), m)?;
            let w1 = &(&self.cov_grid[0] * &fx) + &(&self.cov_grid[1] * &fy);
            let w2 = &(&self.cov_grid[1] * &fx) + &(&self.cov_grid[2] * &fy);
            let w1 = transform_to_level(&w1, level)?;
            let w2 = transform_to_level(&w2, level)?;
            Ok((&ops::dx(&w1) + &ops::dy(&w2)).scale(0.5))
        };
        Ok(State {
            u: [correct(&x.u[0])?, correct(&x.u[1])?],
            h: correct(&x.h)?,
        })
    }

    /// Quadratic variation Σ_n ‖(Φ_n·∇)f‖₂² with full (unprojected) products.
    pub fn transport_quadratic_variation(&self, f: &SpectralField) -> f64 {
        let mut total = 0.0;
        for mode in &self.modes {
            let adv = &exact_product(&mode.phi[0], &ops::dx(f))
                + &exact_product(&mode.phi[1], &ops::dy(f));
            total += adv.l2_norm().powi(2);
        }
        total
    }

    /// Basis translated on the torus; used by equivariance checks.
    pub fn translated(&self, shift: (f64, f64)) -> Result<NoiseBasis> {
        let m = self.grid.points();
        let mut modes = Vec::with_capacity(self.modes.len());
        for mode in &self.modes {
            let phi = [
                ops::translate(&mode.phi[0], shift),
                ops::translate(&mode.phi[1], shift),
            ];
            let phi_grid = [synthesize(&phi[0], m)?, synthesize(&phi[1], m)?];
            modes.push(NoiseMode {
                wavenumber: mode.wavenumber,
                amplitude: mode.amplitude,
                phi,
                phi_grid,
            });
        }
        let covariance = covariance_field(&modes);
        let isd = ito_stokes_drift(&covariance);
        let cov_grid = [
            synthesize(&covariance.a11, m)?,
            synthesize(&covariance.a12, m)?,
            synthesize(&covariance.a22, m)?,
        ];
        let isd_norm = isd[0].l2_norm() + isd[1].l2_norm();
        let isd_grid = if isd_norm > 0.0 {
            Some([synthesize(&isd[0], m)?, synthesize(&isd[1], m)?])
        } else {
            None
        };
        Ok(NoiseBasis {
            modes,
            covariance,
            isd,
            grid: self.grid,
            cov_grid,
            isd_grid,
        })
    }
}

/// Max |λ| level needed to hold the covariance of a spec (for validation).
pub fn covariance_level(spec: &NoiseSpec) -> u32 {
    covering_level(2 * spec.max_wavenumber())
}
