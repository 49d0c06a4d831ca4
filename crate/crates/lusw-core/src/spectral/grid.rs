//! Collocation grids, FFT transforms and dealiased pointwise products.
//!
//! The grid carries M×M samples at x_p = (2π/M)p. The forward transform maps
//! samples to the coefficients of `field`; products of band-limited fields
//! are evaluated pointwise on a grid large enough that every retained mode
//! of the product is alias-free: for two factors of bandwidth ≤ 2^J each,
//! M ≥ 3·2^J + 1 makes the coefficients of fg exact on the block B_{2^J}.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{covering_level, SpectralField, TORUS_AREA};
use crate::error::{Error, Result};

/// Dyadic spectral resolution (level J, modes |λ_m| ≤ 2^J) together with the
/// number of physical grid points per dimension used for quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    level: u32,
    points: usize,
}

impl GridSpec {
    /// Requires M ≥ 3·2^J + 1 so quadratic products dealias exactly.
    pub fn new(level: u32, points: usize) -> Result<Self> {
        let min = 3 * (1usize << level) + 1;
        if points < min {
            return Err(Error::config(format!(
                "grid too small: level {level} needs at least {min} points per \
                 dimension for exact dealiasing, got {points}"
            )));
        }
        Ok(GridSpec { level, points })
    }

    /// Default quadrature size M = 2^{J+2}.
    pub fn with_default_points(level: u32) -> Self {
        GridSpec {
            level,
            points: 1usize << (level + 2),
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Retained dyadic bandwidth N = 2^J.
    pub fn cutoff(&self) -> i64 {
        1i64 << self.level
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Grid spacing 2π/M.
    pub fn spacing(&self) -> f64 {
        std::f64::consts::TAU / self.points as f64
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(m: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(m)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(m),
                inverse: planner.plan_fft_inverse(m),
            })
        })
        .clone()
}

/// In-place 2D FFT: rows then columns with the same 1D plan.
fn fft2(data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
    let m = data.nrows();
    for mut row in data.rows_mut() {
        plan.process(row.as_slice_mut().expect("row not contiguous"));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            buf[i] = data[(i, j)];
        }
        plan.process(&mut buf);
        for i in 0..m {
            data[(i, j)] = buf[i];
        }
    }
}

// Weight splitting an even-grid Nyquist bin between λ = ±M/2. Both halves
// carry the same (real) value, which keeps the stored field Hermitian and
// the round trip exact at the grid points.
fn nyquist_weight(l: i64, m: usize) -> f64 {
    if 2 * l.unsigned_abs() as usize == m {
        0.5
    } else {
        1.0
    }
}

/// Forward transform: M×M real samples to Fourier coefficients normalized as
/// f̂(λ) = (2π)⁻² ∫ f e^{−iλ·x} dx. All modes representable on the grid are
/// retained, so forward∘inverse round trips are exact to round-off.
pub fn transform(values: &Array2<f64>) -> Result<SpectralField> {
    let m = values.nrows();
    if values.ncols() != m || m == 0 {
        return Err(Error::config(format!(
            "transform expects a square non-empty grid, got {}x{}",
            values.nrows(),
            values.ncols()
        )));
    }
    let mut data = values.mapv(|v| Complex64::new(v, 0.0));
    let plans = plans_for(m);
    fft2(&mut data, &plans.forward);

    let k_max = (m / 2) as i64;
    let mut f = SpectralField::zeros(covering_level(k_max));
    let scale = 1.0 / (m * m) as f64;
    for l1 in -k_max..=k_max {
        for l2 in -k_max..=k_max {
            let w = nyquist_weight(l1, m) * nyquist_weight(l2, m);
            let q1 = l1.rem_euclid(m as i64) as usize;
            let q2 = l2.rem_euclid(m as i64) as usize;
            f.set((l1, l2), data[(q1, q2)] * (w * scale));
        }
    }
    f.conj_symmetrize();
    Ok(f)
}

/// Forward transform reading only the bins of the block B_{2^level};
/// identical to `transform(values).truncate_to_level(level)` but without
/// materializing the full-band field. Requires 2^{level+1} < M so that no
/// retained mode sits on a Nyquist line.
pub(crate) fn transform_to_level(values: &Array2<f64>, level: u32) -> Result<SpectralField> {
    let m = values.nrows();
    if values.ncols() != m || m == 0 {
        return Err(Error::config("transform expects a square non-empty grid"));
    }
    let hw = 1i64 << level;
    if 2 * hw >= m as i64 {
        return Err(Error::config(format!(
            "grid of {m} points cannot dealias block level {level}"
        )));
    }
    let mut data = values.mapv(|v| Complex64::new(v, 0.0));
    let plans = plans_for(m);
    fft2(&mut data, &plans.forward);
    let mut f = SpectralField::zeros(level);
    let scale = 1.0 / (m * m) as f64;
    for l1 in -hw..=hw {
        for l2 in -hw..=hw {
            let q1 = l1.rem_euclid(m as i64) as usize;
            let q2 = l2.rem_euclid(m as i64) as usize;
            f.set((l1, l2), data[(q1, q2)] * scale);
        }
    }
    f.conj_symmetrize();
    Ok(f)
}

/// Evaluate a field at the M×M grid points. Exact whenever M is at least
/// twice the field bandwidth (conjugate Nyquist pairs fold correctly).
pub(crate) fn synthesize(f: &SpectralField, m: usize) -> Result<Array2<f64>> {
    let bw = f.bandwidth();
    if (m as i64) < 2 * bw {
        return Err(Error::config(format!(
            "grid of {m} points cannot represent bandwidth {bw}"
        )));
    }
    let mut bins = Array2::from_elem((m, m), Complex64::new(0.0, 0.0));
    for (lambda, c) in f.iter() {
        if c != Complex64::new(0.0, 0.0) {
            let q1 = lambda.0.rem_euclid(m as i64) as usize;
            let q2 = lambda.1.rem_euclid(m as i64) as usize;
            bins[(q1, q2)] += c;
        }
    }
    let plans = plans_for(m);
    fft2(&mut bins, &plans.inverse);
    Ok(bins.mapv(|c| c.re))
}

/// Samples of the field on the grid of `grid`.
pub fn inverse_transform(f: &SpectralField, grid: &GridSpec) -> Result<Array2<f64>> {
    if f.max_block() > grid.level() {
        return Err(Error::config(format!(
            "field block {} exceeds grid level {}",
            f.max_block(),
            grid.level()
        )));
    }
    synthesize(f, grid.points())
}

/// Trapezoid-free exact quadrature on the uniform grid: ∫ v dx = (2π)²·mean.
/// Exact for trigonometric polynomials of bandwidth < M.
pub fn quadrature(values: &Array2<f64>) -> f64 {
    let m2 = (values.nrows() * values.ncols()) as f64;
    TORUS_AREA * values.sum() / m2
}

/// Coefficients of the pointwise product fg, exact on the retained block
/// B_{2^J}. Both factors must live inside the grid block.
pub fn dealiased_product(
    f: &SpectralField,
    g: &SpectralField,
    grid: &GridSpec,
) -> Result<SpectralField> {
    if f.max_block() > grid.level() || g.max_block() > grid.level() {
        return Err(Error::config(format!(
            "dealiased product needs factors inside the grid block (levels {} and {}, grid {})",
            f.max_block(),
            g.max_block(),
            grid.level()
        )));
    }
    let vf = synthesize(f, grid.points())?;
    let vg = synthesize(g, grid.points())?;
    transform_to_level(&(vf * vg), grid.level())
}

/// Pointwise product with every mode of fg retained exactly; the grid is
/// auto-sized from the factual bandwidths. Used where identities must hold
/// to round-off without projection.
pub fn exact_product(f: &SpectralField, g: &SpectralField) -> SpectralField {
    let bw = f.bandwidth() + g.bandwidth();
    let m = ((2 * bw + 1).max(4) as usize).next_power_of_two();
    let vf = synthesize(f, m).expect("auto-sized grid");
    let vg = synthesize(g, m).expect("auto-sized grid");
    transform(&(vf * vg))
        .expect("square grid")
        .truncate_to_level(covering_level(bw.max(1)))
}

/// ‖f‖_{L^p} by quadrature on an oversampled grid. Exact for even integer p
/// and band-limited f; a well-resolved approximation otherwise.
pub fn lp_norm(f: &SpectralField, p: f64) -> f64 {
    let bw = f.bandwidth().max(1) as usize;
    let m = ((p.ceil() as usize + 1) * bw + 1)
        .next_power_of_two()
        .max(8);
    let v = synthesize(f, m).expect("auto-sized grid");
    let m2 = (m * m) as f64;
    let mean: f64 = v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / m2;
    (TORUS_AREA * mean).powf(1.0 / p)
}
