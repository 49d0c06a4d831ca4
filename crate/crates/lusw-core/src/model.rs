//! The rotating shallow water operators under transport noise.
//!
//! Written with the sign of the evolution equation
//!
//!   dX = drift(X) dt − σ·∇X dB,
//!
//! the drift of the momentum components is
//!
//!   −f_R·[u·∇u + (1+α)(∇·u)u] + u_s·∇u − f k×u − g∇h + νΔu + ½∇·(a∇u)
//!
//! and of the height
//!
//!   −f_R·[u·∇h + (1+β)(∇·u)h] + u_s·∇h + ηΔh + ½∇·(a∇h),
//!
//! everything assembled inside the dyadic block B_N of the state. Only the
//! advection/compressibility group is attenuated by the truncation f_R;
//! rotation, gravity, drift advection, the Itô correction and the viscosity
//! are left untouched.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::noise::NoiseBasis;
use crate::spectral::{ops, synthesize, transform_to_level, GridSpec, SpectralField};

/// Solution regime: which global structure the run is exercising.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// k ≥ 1 with the nonlinearity cut off at radius R.
    TruncatedStrong,
    /// α = β = −1/2, k = 0; the cancellations make the cutoff unnecessary.
    UntruncatedWeak,
}

/// Physical and functional parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    /// Momentum viscosity ν (m²/s).
    pub nu: f64,
    /// Height diffusivity η (m²/s).
    pub eta: f64,
    /// Gravity g (m/s²). Zero is accepted to decouple the gravity-wave
    /// exchange in oracle studies.
    pub g: f64,
    /// Coriolis parameter f (1/s).
    pub f: f64,
    /// Density ρ (kg/m³); only scales the energy diagnostic.
    pub rho: f64,
    /// Sobolev index of the truncation/stopping norm.
    pub k: u32,
    /// Truncation radius R in W^{k,2} units.
    pub r: f64,
    pub regime: Regime,
}

impl ModelParams {
    /// Defaults for the global weak regime (α = β = −1/2, k = 0).
    pub fn weak() -> Self {
        ModelParams {
            alpha: -0.5,
            beta: -0.5,
            nu: 0.05,
            eta: 0.05,
            g: 9.81,
            f: 1e-4,
            rho: 1.0,
            k: 0,
            r: 1.0,
            regime: Regime::UntruncatedWeak,
        }
    }

    /// Defaults for the truncated strong regime.
    pub fn strong(k: u32, r: f64) -> Self {
        ModelParams {
            alpha: -1.0,
            beta: 0.0,
            nu: 0.02,
            eta: 0.02,
            g: 9.81,
            f: 1e-4,
            rho: 1.0,
            k,
            r,
            regime: Regime::TruncatedStrong,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.eta >= 0.0) {
            return Err(Error::validation("viscosities must satisfy nu, eta >= 0"));
        }
        if !(self.g >= 0.0) {
            return Err(Error::validation("gravity must satisfy g >= 0"));
        }
        if !(self.rho > 0.0) {
            return Err(Error::validation("density must satisfy rho > 0"));
        }
        if !(self.r > 0.0) {
            return Err(Error::validation("truncation radius must satisfy r > 0"));
        }
        match self.regime {
            Regime::UntruncatedWeak => {
                if self.alpha != -0.5 || self.beta != -0.5 {
                    return Err(Error::validation("weak regime requires alpha=beta=-0.5"));
                }
                if self.k != 0 {
                    return Err(Error::validation("weak regime requires k=0"));
                }
            }
            Regime::TruncatedStrong => {
                if self.k < 1 {
                    return Err(Error::validation("truncated-strong regime requires k >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Composite state X = (u, h): two velocity components and the height.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: ops::VectorField,
    pub h: SpectralField,
}

impl State {
    pub fn zeros(level: u32) -> Self {
        State {
            u: [SpectralField::zeros(level), SpectralField::zeros(level)],
            h: SpectralField::zeros(level),
        }
    }

    /// Divergence-free random velocity (from a stream function) plus a
    /// zero-mean random height of the given mean; reproducible from `seed`.
    pub fn random(seed: u64, level: u32, bandwidth: i64, amplitude: f64, h_mean: f64) -> Self {
        let psi = SpectralField::random_smooth(seed, level, bandwidth, 2.5);
        let mut u = ops::perp_gradient(&psi);
        let max = u[0].l2_norm().max(u[1].l2_norm()).max(1e-30);
        let factor = amplitude * std::f64::consts::TAU / max;
        u = [u[0].scale(factor), u[1].scale(factor)];
        let mut h = SpectralField::random_smooth(seed ^ 0x68_65_69_67_68_74, level, bandwidth, 2.5);
        let hmax = h.l2_norm().max(1e-30);
        h = h.scale(amplitude * std::f64::consts::TAU / hmax);
        h.scaled_add(1.0, &SpectralField::constant(h_mean));
        State {
            u,
            h: h.resize_block(level),
        }
    }

    /// Common block level of the three components.
    pub fn level(&self) -> u32 {
        debug_assert_eq!(self.u[0].max_block(), self.u[1].max_block());
        debug_assert_eq!(self.u[0].max_block(), self.h.max_block());
        self.u[0].max_block()
    }

    pub fn project(&self, level: u32) -> State {
        State {
            u: [
                self.u[0].truncate_to_level(level),
                self.u[1].truncate_to_level(level),
            ],
            h: self.h.truncate_to_level(level),
        }
    }

    pub fn resize_block(&self, level: u32) -> State {
        State {
            u: [self.u[0].resize_block(level), self.u[1].resize_block(level)],
            h: self.h.resize_block(level),
        }
    }

    /// L²(𝕋²)³ norm (componentwise sum of squares).
    pub fn l2_norm(&self) -> f64 {
        (self.u[0].l2_norm().powi(2) + self.u[1].l2_norm().powi(2) + self.h.l2_norm().powi(2))
            .sqrt()
    }

    /// W^{k,2} norm of the velocity pair.
    pub fn u_sobolev_norm(&self, k: f64) -> f64 {
        (self.u[0].sobolev_norm(k).powi(2) + self.u[1].sobolev_norm(k).powi(2)).sqrt()
    }

    /// Composite norm ‖X‖_{k,2} = ‖u‖_{k,2} + ‖h‖_{k,2} used by the
    /// truncation and the stopping rule.
    pub fn norm_sum(&self, k: f64) -> f64 {
        self.u_sobolev_norm(k) + self.h.sobolev_norm(k)
    }

    /// W^{k,2}(𝕋²)³ norm (componentwise sum of squares).
    pub fn sobolev_norm(&self, k: f64) -> f64 {
        (self.u[0].sobolev_norm(k).powi(2)
            + self.u[1].sobolev_norm(k).powi(2)
            + self.h.sobolev_norm(k).powi(2))
        .sqrt()
    }

    pub fn l2_distance(&self, other: &State) -> f64 {
        (self.u[0].l2_distance(&other.u[0]).powi(2)
            + self.u[1].l2_distance(&other.u[1]).powi(2)
            + self.h.l2_distance(&other.h).powi(2))
        .sqrt()
    }

    pub fn weighted_distance(&self, other: &State, k: f64) -> f64 {
        (self.u[0].weighted_distance(&other.u[0], k).powi(2)
            + self.u[1].weighted_distance(&other.u[1], k).powi(2)
            + self.h.weighted_distance(&other.h, k).powi(2))
        .sqrt()
    }

    pub fn scaled_add(&mut self, scale: f64, other: &State) {
        self.u[0].scaled_add(scale, &other.u[0]);
        self.u[1].scaled_add(scale, &other.u[1]);
        self.h.scaled_add(scale, &other.h);
    }

    pub fn is_finite(&self) -> bool {
        self.u[0].is_finite() && self.u[1].is_finite() && self.h.is_finite()
    }

    pub fn translate(&self, shift: (f64, f64)) -> State {
        State {
            u: [
                ops::translate(&self.u[0], shift),
                ops::translate(&self.u[1], shift),
            ],
            h: ops::translate(&self.h, shift),
        }
    }
}

/// Smooth cutoff equal to 1 on [0,R], 0 on [R+1,∞), bridged on [R,R+1] by
/// the quintic smoothstep (C² at both ends, nonincreasing).
#[derive(Debug, Clone, Copy)]
pub struct TruncationFn {
    pub r: f64,
}

impl TruncationFn {
    pub fn value(&self, radius: f64) -> f64 {
        if radius <= self.r {
            1.0
        } else if radius >= self.r + 1.0 {
            0.0
        } else {
            let t = radius - self.r;
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }
}

/// f_R evaluated at ‖u‖_{k,2} + ‖h‖_{k,2}; identically 1 in the weak regime.
pub fn truncation_value(params: &ModelParams, x: &State) -> f64 {
    match params.regime {
        Regime::UntruncatedWeak => 1.0,
        Regime::TruncatedStrong => TruncationFn { r: params.r }.value(x.norm_sum(params.k as f64)),
    }
}

/// Coriolis term f·(z×u) with z×u = (−u₂, u₁).
pub fn rotate(u: &ops::VectorField, f: f64) -> ops::VectorField {
    [u[1].scale(-f), u[0].scale(f)]
}

// Grid samples of a component and its two derivatives.
fn sampled_gradient(
    f: &SpectralField,
    m: usize,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    Ok((
        synthesize(f, m)?,
        synthesize(&ops::dx(f), m)?,
        synthesize(&ops::dy(f), m)?,
    ))
}

/// Full drift of the evolution equation (time-derivative units), projected
/// to the block of X. See the module header for the exact term list.
pub fn drift(
    x: &State,
    params: &ModelParams,
    basis: &NoiseBasis,
    grid: &GridSpec,
) -> Result<State> {
    if x.level() > grid.level() {
        return Err(Error::config(format!(
            "state block {} exceeds grid level {}",
            x.level(),
            grid.level()
        )));
    }
    basis.check_dealiasing(x.level())?;
    let m = grid.points();
    let level = x.level();

    let (u1, u1x, u1y) = sampled_gradient(&x.u[0], m)?;
    let (u2, u2x, u2y) = sampled_gradient(&x.u[1], m)?;
    let (h, hx, hy) = sampled_gradient(&x.h, m)?;
    let div_u = &u1x + &u2y;
    let fr = truncation_value(params, x);

    // −f_R [u·∇φ + (1+δ)(∇·u)φ] + u_s·∇φ on the grid
    let convective =
        |phi: &Array2<f64>, phix: &Array2<f64>, phiy: &Array2<f64>, delta: f64| -> Array2<f64> {
            let mut out = &(&u1 * phix) + &(&u2 * phiy);
            out.scaled_add(1.0 + delta, &(&div_u * phi));
            out.mapv_inplace(|v| -fr * v);
            if let Some(isd) = basis.isd_grid() {
                out.scaled_add(1.0, &(&isd[0] * phix));
                out.scaled_add(1.0, &(&isd[1] * phiy));
            }
            out
        };

    let n1 = convective(&u1, &u1x, &u1y, params.alpha);
    let n2 = convective(&u2, &u2x, &u2y, params.alpha);
    let nh = convective(&h, &hx, &hy, params.beta);

    let mut du1 = transform_to_level(&n1, level)?;
    let mut du2 = transform_to_level(&n2, level)?;
    let mut dh = transform_to_level(&nh, level)?;

    // rotation and gravity, exact in coefficients
    if params.f != 0.0 {
        let cor = rotate(&x.u, params.f);
        du1.scaled_add(-1.0, &cor[0]);
        du2.scaled_add(-1.0, &cor[1]);
    }
    if params.g != 0.0 {
        du1.scaled_add(-params.g, &ops::dx(&x.h));
        du2.scaled_add(-params.g, &ops::dy(&x.h));
    }

    // viscosity
    if params.nu != 0.0 {
        du1.scaled_add(params.nu, &ops::laplacian(&x.u[0]));
        du2.scaled_add(params.nu, &ops::laplacian(&x.u[1]));
    }
    if params.eta != 0.0 {
        dh.scaled_add(params.eta, &ops::laplacian(&x.h));
    }

    let mut out = State {
        u: [du1, du2],
        h: dh,
    };

    // Itô correction ½ ∇·(a∇·)
    if basis.is_active() {
        let ito = basis.ito_correction(x)?;
        out.scaled_add(1.0, &ito);
    }
    Ok(out)
}

/// Stochastic increment of the model: −Σ_n Δβ^n (Φ_n·∇)X, projected.
pub fn diffusion(x: &State, basis: &NoiseBasis, increments: &[f64]) -> Result<State> {
    let mut inc = basis.apply_transport_noise(x, increments)?;
    inc.u[0] = inc.u[0].scale(-1.0);
    inc.u[1] = inc.u[1].scale(-1.0);
    inc.h = inc.h.scale(-1.0);
    Ok(inc)
}

/// One fused explicit step X + drift(X)·dt + diffusion(X, Δβ).
///
/// Mathematically identical to composing `drift` and `diffusion` (a test
/// pins the two paths together); the fusion samples each gradient grid once
/// and folds convective and noise terms into a single forward transform per
/// component. The noise basis must be built on the same grid.
pub fn em_assemble(
    x: &State,
    params: &ModelParams,
    basis: &NoiseBasis,
    increments: &[f64],
    dt: f64,
    grid: &GridSpec,
) -> Result<State> {
    if x.level() > grid.level() {
        return Err(Error::config(format!(
            "state block {} exceeds grid level {}",
            x.level(),
            grid.level()
        )));
    }
    if basis.grid().points() != grid.points() {
        return Err(Error::config(
            "noise basis grid does not match the integration grid",
        ));
    }
    let active = basis.is_active();
    if active && increments.len() != basis.mode_count() {
        return Err(Error::config(format!(
            "got {} Brownian increments for {} noise modes",
            increments.len(),
            basis.mode_count()
        )));
    }
    basis.check_dealiasing(x.level())?;
    let m = grid.points();
    let level = x.level();

    let (u1, u1x, u1y) = sampled_gradient(&x.u[0], m)?;
    let (u2, u2x, u2y) = sampled_gradient(&x.u[1], m)?;
    let (h, hx, hy) = sampled_gradient(&x.h, m)?;
    let div_u = &u1x + &u2y;
    let fr = truncation_value(params, x);

    // effective transport field Σ_n Δβ^n Φ_n on the grid
    let sigma_eff = active.then(|| {
        let mut s1 = Array2::zeros((m, m));
        let mut s2 = Array2::zeros((m, m));
        for (mode, &db) in basis.modes.iter().zip(increments) {
            if db != 0.0 && mode.amplitude != 0.0 {
                s1.scaled_add(db, &mode.phi_grid[0]);
                s2.scaled_add(db, &mode.phi_grid[1]);
            }
        }
        (s1, s2)
    });
    let cov = active.then(|| basis.covariance_grid());

    fn flat(a: &Array2<f64>) -> &[f64] {
        a.as_slice().expect("standard layout")
    }

    let assemble = |phi: &Array2<f64>,
                    phix: &Array2<f64>,
                    phiy: &Array2<f64>,
                    delta: f64|
     -> Result<(SpectralField, Option<(SpectralField, SpectralField)>)> {
        // dt·[−f_R(u·∇φ + (1+δ)(∇·u)φ) + u_s·∇φ] − σ_eff·∇φ
        let mut g = Array2::<f64>::zeros((m, m));
        {
            let out = g.as_slice_mut().expect("standard layout");
            let (a, b) = (flat(&u1), flat(&u2));
            let (p, px, py) = (flat(phi), flat(phix), flat(phiy));
            let dv = flat(&div_u);
            let one_delta = 1.0 + delta;
            for i in 0..out.len() {
                out[i] = -fr * (a[i] * px[i] + b[i] * py[i] + one_delta * dv[i] * p[i]);
            }
            if let Some(isd) = basis.isd_grid() {
                let (s1, s2) = (flat(&isd[0]), flat(&isd[1]));
                for i in 0..out.len() {
                    out[i] += s1[i] * px[i] + s2[i] * py[i];
                }
            }
            for v in out.iter_mut() {
                *v *= dt;
            }
            if let Some((se1, se2)) = &sigma_eff {
                let (s1, s2) = (flat(se1), flat(se2));
                for i in 0..out.len() {
                    out[i] -= s1[i] * px[i] + s2[i] * py[i];
                }
            }
        }
        let combined = transform_to_level(&g, level)?;
        let ito = match &cov {
            Some([a11, a12, a22]) => {
                let mut w1 = Array2::<f64>::zeros((m, m));
                let mut w2 = Array2::<f64>::zeros((m, m));
                {
                    let w1 = w1.as_slice_mut().expect("standard layout");
                    let w2 = w2.as_slice_mut().expect("standard layout");
                    let (c11, c12, c22) = (flat(a11), flat(a12), flat(a22));
                    let (px, py) = (flat(phix), flat(phiy));
                    for i in 0..w1.len() {
                        w1[i] = c11[i] * px[i] + c12[i] * py[i];
                        w2[i] = c12[i] * px[i] + c22[i] * py[i];
                    }
                }
                Some((
                    transform_to_level(&w1, level)?,
                    transform_to_level(&w2, level)?,
                ))
            }
            None => None,
        };
        Ok((combined, ito))
    };

    let (inc1, ito1) = assemble(&u1, &u1x, &u1y, params.alpha)?;
    let (inc2, ito2) = assemble(&u2, &u2x, &u2y, params.alpha)?;
    let (inch, itoh) = assemble(&h, &hx, &hy, params.beta)?;

    let mut next = x.clone();
    next.u[0].scaled_add(1.0, &inc1);
    next.u[1].scaled_add(1.0, &inc2);
    next.h.scaled_add(1.0, &inch);
    let add_ito = |field: &mut SpectralField, ito: Option<(SpectralField, SpectralField)>| {
        if let Some((w1, w2)) = ito {
            let div = &ops::dx(&w1) + &ops::dy(&w2);
            field.scaled_add(0.5 * dt, &div);
        }
    };
    add_ito(&mut next.u[0], ito1);
    add_ito(&mut next.u[1], ito2);
    add_ito(&mut next.h, itoh);

    // linear terms, exact in coefficients
    if params.f != 0.0 {
        let cor = rotate(&x.u, params.f);
        next.u[0].scaled_add(-dt, &cor[0]);
        next.u[1].scaled_add(-dt, &cor[1]);
    }
    if params.g != 0.0 {
        next.u[0].scaled_add(-params.g * dt, &ops::dx(&x.h));
        next.u[1].scaled_add(-params.g * dt, &ops::dy(&x.h));
    }
    if params.nu != 0.0 {
        next.u[0].scaled_add(params.nu * dt, &ops::laplacian(&x.u[0]));
        next.u[1].scaled_add(params.nu * dt, &ops::laplacian(&x.u[1]));
    }
    if params.eta != 0.0 {
        next.h.scaled_add(params.eta * dt, &ops::laplacian(&x.h));
    }
    Ok(next)
}

/// ∇·(u⊗u) in divergence form, kept as a cross-check of the advective
/// assembly L_u u + D_u u.
pub fn advection_divergence_form(
    u: &ops::VectorField,
    grid: &GridSpec,
) -> Result<ops::VectorField> {
    let uu11 = crate::spectral::dealiased_product(&u[0], &u[0], grid)?;
    let uu12 = crate::spectral::dealiased_product(&u[0], &u[1], grid)?;
    let uu22 = crate::spectral::dealiased_product(&u[1], &u[1], grid)?;
    Ok([
        &ops::dx(&uu11) + &ops::dy(&uu12),
        &ops::dx(&uu12) + &ops::dy(&uu22),
    ])
}
