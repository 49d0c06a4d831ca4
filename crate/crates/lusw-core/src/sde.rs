//! Time integration of the projected system by explicit Euler-Maruyama,
//! reproducible Brownian driving shared across resolutions, blow-up
//! detection, the exact constant-σ transport oracle, and the Cauchy
//! refinement study.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::model::{self, ModelParams, State};
use crate::noise::{build_basis, NoiseBasis, NoiseSpec};
use crate::spectral::{ops, synthesize, GridSpec, SpectralField};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent per-realization seed derived from a master seed.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ (index as u64 + 1).wrapping_mul(0xA24B_AED4_963E_E407))
}

/// Brownian increments Δβ^n_i ~ N(0, dt) on a fixed grid of steps and modes.
///
/// Mode n draws from its own counter-derived stream, so the increments of
/// mode n are identical for every n_modes ≥ n+1 (prefix property), and the
/// same path object can drive every resolution of a study.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    pub seed: u64,
    pub dt: f64,
    increments: Array2<f64>,
}

impl BrownianPath {
    pub fn sample(seed: u64, dt: f64, n_steps: usize, n_modes: usize) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::config("brownian path needs dt > 0"));
        }
        let sqrt_dt = dt.sqrt();
        let mut increments = Array2::zeros((n_steps, n_modes));
        for mode in 0..n_modes {
            let stream_seed = splitmix64(seed ^ splitmix64(mode as u64));
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
            for step in 0..n_steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                increments[(step, mode)] = sqrt_dt * z;
            }
        }
        Ok(BrownianPath {
            seed,
            dt,
            increments,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.increments.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.increments.ncols()
    }

    /// Increments of all modes at one step.
    pub fn step_increments(&self, step: usize) -> &[f64] {
        self.increments
            .row(step)
            .to_slice()
            .expect("row-major layout")
    }

    /// Same Brownian motion on a grid coarsened by an integer factor:
    /// consecutive increments are summed pairwise (groupwise).
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || !self.n_steps().is_multiple_of(factor) {
            return Err(Error::config(format!(
                "cannot coarsen {} steps by factor {factor}",
                self.n_steps()
            )));
        }
        let n_coarse = self.n_steps() / factor;
        let mut increments = Array2::zeros((n_coarse, self.n_modes()));
        for i in 0..n_coarse {
            for j in 0..self.n_modes() {
                let mut sum = 0.0;
                for s in 0..factor {
                    sum += self.increments[(i * factor + s, j)];
                }
                increments[(i, j)] = sum;
            }
        }
        Ok(BrownianPath {
            seed: self.seed,
            dt: self.dt * factor as f64,
            increments,
        })
    }

    /// B_T of one mode: the summed increments.
    pub fn endpoint(&self, mode: usize) -> f64 {
        self.increments.column(mode).sum()
    }
}

/// One Euler-Maruyama step of the projected system:
/// X′ = X + drift(X)·dt − Σ_n Δβ^n (Φ_n·∇)X, all terms inside B_N.
pub fn em_step(
    x: &State,
    _t: f64,
    dt: f64,
    params: &ModelParams,
    basis: &NoiseBasis,
    increments: &[f64],
    grid: &GridSpec,
) -> Result<State> {
    let next = model::em_assemble(x, params, basis, increments, dt, grid)?;
    if !next.is_finite() {
        return Err(Error::Integration(
            "non-finite state after Euler-Maruyama step".into(),
        ));
    }
    Ok(next)
}

/// Why a trajectory ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// First passage of ‖X‖_{k,2} above the stopping threshold; the discrete
    /// stand-in for the blow-up time of the maximal solution.
    Stopped {
        tau: f64,
    },
    /// Non-finite values; the last finite state is retained.
    Error {
        message: String,
    },
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub stop_threshold: f64,
    /// Record Γ_{2^j} per shell in every diagnostics row.
    pub record_flux: bool,
    /// Evaluate the cancellation identities in every row. Runs that only
    /// consume norms/energy (refinement and oracle studies) switch this off;
    /// the identity columns then read 0.
    pub identity_diagnostics: bool,
    /// Assemble a diagnostics row at every step. Studies that only consume
    /// the endpoint switch this off and get rows for the first and final
    /// step only.
    pub per_step_records: bool,
    pub cfl_safety: f64,
}

impl RunSettings {
    pub fn new(t_end: f64, dt: f64, stop_threshold: f64) -> Self {
        RunSettings {
            t_end,
            dt,
            snapshot_stride: usize::MAX,
            stop_threshold,
            record_flux: false,
            identity_diagnostics: true,
            per_step_records: true,
            cfl_safety: 0.5,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// A completed (or stopped) integration: per-step diagnostics, state
/// snapshots at the configured stride, and the termination record.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, State)>,
    pub termination: Termination,
    pub final_state: State,
}

impl Trajectory {
    pub fn tau_hit(&self) -> Option<f64> {
        match self.termination {
            Termination::Stopped { tau } => Some(tau),
            _ => None,
        }
    }

    pub fn max_norm_sum(&self, k: f64) -> f64 {
        self.snapshots
            .iter()
            .map(|(_, s)| s.norm_sum(k))
            .fold(0.0, f64::max)
    }
}

/// Advance X₀ to T (or to first passage of the stopping threshold),
/// recording diagnostics at every step.
pub fn run_trajectory(
    x0: &State,
    settings: &RunSettings,
    params: &ModelParams,
    basis: &NoiseBasis,
    path: &BrownianPath,
    grid: &GridSpec,
) -> Result<Trajectory> {
    params
        .validate()
        .map_err(|e| Error::config(e.to_string()))?;
    let k = params.k as f64;
    if settings.stop_threshold <= x0.norm_sum(k) {
        return Err(Error::config(
            "stopping threshold must exceed the initial composite norm",
        ));
    }
    let n_steps = settings.n_steps();
    if path.n_steps() < n_steps {
        return Err(Error::config(format!(
            "brownian path has {} steps, run needs {n_steps}",
            path.n_steps()
        )));
    }
    if (path.dt - settings.dt).abs() > 1e-12 * settings.dt {
        return Err(Error::config("brownian path dt does not match run dt"));
    }
    if basis.is_active() && path.n_modes() < basis.mode_count() {
        return Err(Error::config(format!(
            "brownian path carries {} modes, basis needs {}",
            path.n_modes(),
            basis.mode_count()
        )));
    }
    cfl_warning(x0, settings, grid)?;

    let flux_levels = settings.record_flux.then_some(grid.level());
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let mut sup_l2_sq = 0.0f64;
    let mut dissipation = 0.0f64;
    let mut termination = Termination::Completed;

    for step in 0..=n_steps {
        let t = step as f64 * settings.dt;
        if settings.per_step_records || step == 0 || step == n_steps {
            let l2 = x.l2_norm();
            sup_l2_sq = sup_l2_sq.max(l2 * l2);
            let record = diagnostics::step_record(
                t,
                &x,
                params,
                basis,
                sup_l2_sq + dissipation,
                flux_levels,
                settings.identity_diagnostics,
            );
            records.push(record);
        }
        if step % settings.snapshot_stride == 0 || step == n_steps {
            snapshots.push((t, x.clone()));
        }
        if step == n_steps {
            break;
        }

        // left-endpoint quadrature of the 2γ-weighted gradient integral
        if settings.per_step_records {
            dissipation += settings.dt
                * (2.0 * params.nu * x.u_sobolev_norm(1.0).powi(2)
                    + 2.0 * params.eta * x.h.sobolev_norm(1.0).powi(2));
        }

        let incs = &path.step_increments(step)[..basis.mode_count()];
        match em_step(&x, t, settings.dt, params, basis, incs, grid) {
            Ok(next) => {
                if next.norm_sum(k) >= settings.stop_threshold {
                    termination = Termination::Stopped {
                        tau: t + settings.dt,
                    };
                    break;
                }
                x = next;
            }
            Err(e) => {
                termination = Termination::Error {
                    message: e.to_string(),
                };
                break;
            }
        }
    }
    if snapshots.last().map(|(t, _)| *t) != records.last().map(|r| r.t) {
        if let Some(last) = records.last() {
            snapshots.push((last.t, x.clone()));
        }
    }
    Ok(Trajectory {
        records,
        snapshots,
        termination,
        final_state: x,
    })
}

// Step-size guard dt ≤ c·Δx/‖u‖∞; advisory only.
fn cfl_warning(x0: &State, settings: &RunSettings, grid: &GridSpec) -> Result<()> {
    let m = grid.points();
    let u1 = synthesize(&x0.u[0], m)?;
    let u2 = synthesize(&x0.u[1], m)?;
    let umax = u1
        .iter()
        .zip(u2.iter())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .fold(0.0f64, f64::max);
    if umax > 0.0 {
        let limit = settings.cfl_safety * grid.spacing() / umax;
        if settings.dt > limit {
            log::warn!(
                "dt = {} exceeds the advective guard {:.3e} (|u|max = {:.3})",
                settings.dt,
                limit,
                umax
            );
        }
    }
    Ok(())
}

/// Exact pathwise solution of dq + c·∇q dB = ½(c·∇)²q dt for constant c:
/// q(t, x) = q₀(x − c B_t), a pure spectral phase shift.
pub fn exact_transport_oracle(q0: &SpectralField, c: (f64, f64), b_t: f64) -> SpectralField {
    ops::translate(q0, (c.0 * b_t, c.1 * b_t))
}

/// Least-squares slope of log₂(err) against log₂(dt); the observed order.
pub fn fit_order(dts: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(dts.len(), errors.len());
    let n = dts.len() as f64;
    let xs: Vec<f64> = dts.iter().map(|d| d.log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Configuration of a resolution refinement study: the same initial state,
/// parameters, noise and Brownian path across every dyadic level.
#[derive(Debug, Clone)]
pub struct CauchyStudy {
    pub levels: Vec<u32>,
    pub params: ModelParams,
    pub noise: NoiseSpec,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CauchyPair {
    pub coarse_level: u32,
    pub fine_level: u32,
    /// sup_t ‖X^N − X^{2N}‖₂ with the coarse state injected into the finer
    /// coefficient space.
    pub sup_l2: f64,
    /// (∫₀ᵀ ‖X^N − X^{2N}‖²₁,₂ dt)^{1/2}.
    pub w12_integral: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyReport {
    pub pairs: Vec<CauchyPair>,
    pub strictly_decreasing: bool,
    /// log₂ ratios of consecutive sup distances.
    pub rates: Vec<f64>,
}

/// Integrate every level in lockstep under one Brownian path and measure
/// pairwise distances between consecutive resolutions.
pub fn cauchy_study(study: &CauchyStudy, x0: &State) -> Result<CauchyReport> {
    if study.levels.len() < 2 {
        return Err(Error::config("cauchy study needs at least two levels"));
    }
    if !study.levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::config(
            "cauchy study levels must be strictly ascending",
        ));
    }
    study
        .params
        .validate()
        .map_err(|e| Error::config(e.to_string()))?;
    let coarsest = study.levels[0];
    if study.noise.max_wavenumber() > (1i64 << coarsest) {
        return Err(Error::config(
            "noise wavenumbers must lie in the block of the coarsest level",
        ));
    }
    let n_steps = (study.t_end / study.dt).round() as usize;
    let path = BrownianPath::sample(study.seed, study.dt, n_steps, study.noise.mode_count())?;

    let grids: Vec<GridSpec> = study
        .levels
        .iter()
        .map(|&j| GridSpec::with_default_points(j))
        .collect();
    let bases: Vec<NoiseBasis> = grids
        .iter()
        .map(|g| build_basis(&study.noise, g))
        .collect::<Result<_>>()?;
    let mut states: Vec<State> = study.levels.iter().map(|&j| x0.project(j)).collect();

    let n_pairs = study.levels.len() - 1;
    let mut sup = vec![0.0f64; n_pairs];
    let mut w12_sq = vec![0.0f64; n_pairs];

    let measure = |states: &[State], sup: &mut [f64], w12_sq: &mut [f64], dt_weight: f64| {
        for p in 0..n_pairs {
            let d = states[p].l2_distance(&states[p + 1]);
            sup[p] = sup[p].max(d);
            let dw = states[p].weighted_distance(&states[p + 1], 1.0);
            w12_sq[p] += dt_weight * dw * dw;
        }
    };

    measure(&states, &mut sup, &mut w12_sq, 0.0);
    for step in 0..n_steps {
        let t = step as f64 * study.dt;
        let incs = path.step_increments(step);
        for (i, state) in states.iter_mut().enumerate() {
            *state = em_step(
                state,
                t,
                study.dt,
                &study.params,
                &bases[i],
                incs,
                &grids[i],
            )?;
        }
        measure(&states, &mut sup, &mut w12_sq, study.dt);
    }

    let pairs: Vec<CauchyPair> = (0..n_pairs)
        .map(|p| CauchyPair {
            coarse_level: study.levels[p],
            fine_level: study.levels[p + 1],
            sup_l2: sup[p],
            w12_integral: w12_sq[p].sqrt(),
        })
        .collect();
    let strictly_decreasing = pairs.windows(2).all(|w| w[0].sup_l2 > w[1].sup_l2);
    let rates = pairs
        .windows(2)
        .map(|w| (w[0].sup_l2 / w[1].sup_l2).log2())
        .collect();
    Ok(CauchyReport {
        pairs,
        strictly_decreasing,
        rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Regime;

    #[test]
    fn brownian_path_is_reproducible() {
        let a = BrownianPath::sample(42, 0.01, 64, 4).unwrap();
        let b = BrownianPath::sample(42, 0.01, 64, 4).unwrap();
        assert_eq!(a.increments, b.increments);
        let c = BrownianPath::sample(43, 0.01, 64, 4).unwrap();
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn brownian_prefix_property() {
        let small = BrownianPath::sample(7, 0.05, 32, 4).unwrap();
        let large = BrownianPath::sample(7, 0.05, 32, 8).unwrap();
        for step in 0..32 {
            assert_eq!(
                &large.step_increments(step)[..4],
                small.step_increments(step)
            );
        }
    }

    #[test]
    fn brownian_sample_mean() {
        let dt = 0.01;
        let n = 1_000_000usize;
        let path = BrownianPath::sample(1234, dt, n, 1).unwrap();
        let mean = path.increments.column(0).sum() / n as f64;
        let bound = 4.0 * (dt / n as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn coarsening_sums_pairs() {
        let fine = BrownianPath::sample(5, 0.01, 16, 2).unwrap();
        let coarse = fine.coarsen(2).unwrap();
        assert_eq!(coarse.n_steps(), 8);
        assert!((coarse.dt - 0.02).abs() < 1e-15);
        for i in 0..8 {
            for j in 0..2 {
                let sum = fine.increments[(2 * i, j)] + fine.increments[(2 * i + 1, j)];
                assert_eq!(coarse.increments[(i, j)], sum);
            }
        }
        assert!((coarse.endpoint(0) - fine.endpoint(0)).abs() < 1e-12);
    }

    fn quiet_basis(grid: &GridSpec) -> NoiseBasis {
        build_basis(&NoiseSpec::constant((1.0, 0.0), 0.0), grid).unwrap()
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let grid = GridSpec::with_default_points(3);
        let basis = quiet_basis(&grid);
        let mut p = ModelParams::strong(1, 1.0);
        p.f = 0.0;
        let x = State::zeros(3);
        let next = em_step(&x, 0.0, 0.01, &p, &basis, &[0.0], &grid).unwrap();
        assert_eq!(next.l2_norm(), 0.0);
    }

    #[test]
    fn viscous_decay_single_step() {
        // shear u = (cos y, 0): nonlinearity vanishes, one explicit step is
        // (1 − ν dt)·u, within O(dt²) of the exact heat factor e^{−ν dt}.
        let grid = GridSpec::with_default_points(3);
        let basis = quiet_basis(&grid);
        let mut p = ModelParams::strong(1, 1e9);
        p.f = 0.0;
        p.g = 0.0;
        p.nu = 0.3;
        let x = State {
            u: [
                SpectralField::cosine((0, 1), 1.0).resize_block(3),
                SpectralField::zeros(3),
            ],
            h: SpectralField::zeros(3),
        };
        let dt = 1e-3;
        let next = em_step(&x, 0.0, dt, &p, &basis, &[0.0], &grid).unwrap();
        let euler = x.u[0].scale(1.0 - p.nu * dt);
        assert!(next.u[0].l2_distance(&euler) < 1e-13);
        let exact = x.u[0].scale((-p.nu * dt).exp());
        let err = next.u[0].l2_distance(&exact);
        assert!(err < 1.0 * dt * dt, "one-step heat error {err}");
    }

    #[test]
    fn transport_step_error_is_first_order() {
        // single constant mode: one EM step differs from the exact phase
        // shift at O(dt) strong error.
        let grid = GridSpec::with_default_points(4);
        let basis = build_basis(&NoiseSpec::constant((0.5, 0.0), 1.0), &grid).unwrap();
        let mut p = ModelParams::strong(1, 1e9);
        p.f = 0.0;
        p.g = 0.0;
        p.nu = 0.0;
        p.eta = 0.0;
        let h0 = SpectralField::cosine((1, 0), 1.0).resize_block(4);
        let x = State {
            u: [SpectralField::zeros(4), SpectralField::zeros(4)],
            h: h0.clone(),
        };
        let mut errs = Vec::new();
        for &dt in &[1e-2f64, 5e-3, 2.5e-3] {
            let db = 0.7 * dt.sqrt();
            let next = em_step(&x, 0.0, dt, &p, &basis, &[db], &grid).unwrap();
            let oracle = exact_transport_oracle(&h0, (0.5, 0.0), db);
            errs.push(next.h.l2_distance(&oracle));
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        // ‖q(t)‖₂ is conserved by the oracle
        let oracle = exact_transport_oracle(&h0, (0.5, 0.0), std::f64::consts::PI);
        assert!((oracle.l2_norm() - h0.l2_norm()).abs() < 1e-13);
        let same = exact_transport_oracle(&h0, (1.0, 0.0), 0.0);
        assert!(same.l2_distance(&h0) == 0.0);
        // cos(x − π) = −cos x
        let flipped = exact_transport_oracle(&h0, (1.0, 0.0), std::f64::consts::PI);
        assert!(flipped.l2_distance(&h0.scale(-1.0)) < 1e-13);
    }

    #[test]
    fn trajectory_stops_at_threshold() {
        let grid = GridSpec::with_default_points(4);
        let basis = build_basis(
            &NoiseSpec::stream_function(vec![(1, 0), (0, 1)], 2.0, 0.4),
            &grid,
        )
        .unwrap();
        let mut p = ModelParams::strong(2, 1e9);
        p.nu = 0.01;
        p.eta = 0.01;
        let x0 = State::random(3, 4, 8, 0.3, 1.0);
        let k = p.k as f64;
        let threshold = x0.norm_sum(k) * 1.0001;
        let mut settings = RunSettings::new(0.5, 1e-3, threshold);
        settings.snapshot_stride = 50;
        let path = BrownianPath::sample(11, 1e-3, 500, 4).unwrap();
        let traj = run_trajectory(&x0, &settings, &p, &basis, &path, &grid).unwrap();
        match traj.termination {
            Termination::Stopped { tau } => assert!(tau <= 0.5),
            ref other => panic!("expected stop, got {other:?}"),
        }
        assert!(traj.max_norm_sum(k) <= threshold);
        assert!(traj.tau_hit().is_some());
    }

    #[test]
    fn trajectory_determinism() {
        let grid = GridSpec::with_default_points(3);
        let basis =
            build_basis(&NoiseSpec::stream_function(vec![(1, 0)], 2.0, 0.3), &grid).unwrap();
        let mut p = ModelParams::weak();
        p.g = 1.0;
        let x0 = State::random(9, 3, 6, 0.2, 1.0);
        let settings = RunSettings::new(0.05, 1e-3, 1e6);
        let path = BrownianPath::sample(21, 1e-3, 50, 2).unwrap();
        let a = run_trajectory(&x0, &settings, &p, &basis, &path, &grid).unwrap();
        let b = run_trajectory(&x0, &settings, &p, &basis, &path, &grid).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.energy, rb.energy);
            assert_eq!(ra.l2, rb.l2);
        }
    }

    #[test]
    fn projection_closure_along_trajectory() {
        let grid = GridSpec::with_default_points(3);
        let basis =
            build_basis(&NoiseSpec::stream_function(vec![(1, 0)], 2.0, 0.3), &grid).unwrap();
        let mut p = ModelParams::weak();
        p.g = 1.0;
        let x0 = State::random(13, 3, 8, 0.2, 1.0);
        let settings = RunSettings::new(0.02, 1e-3, 1e6);
        let path = BrownianPath::sample(5, 1e-3, 20, 2).unwrap();
        let traj = run_trajectory(&x0, &settings, &p, &basis, &path, &grid).unwrap();
        let x = &traj.final_state;
        assert_eq!(crate::spectral::lp::project(&x.h, 3), x.h);
        assert_eq!(x.level(), 3);
    }

    #[test]
    fn dt_refinement_under_shared_path() {
        // halving dt with pairwise-summed increments shrinks the difference
        // from the finest trajectory
        let grid = GridSpec::with_default_points(3);
        let basis = build_basis(
            &NoiseSpec::stream_function(vec![(1, 0), (0, 1)], 2.0, 0.3),
            &grid,
        )
        .unwrap();
        let mut p = ModelParams::weak();
        p.g = 1.0;
        let x0 = State::random(17, 3, 6, 0.2, 1.0);
        let t_end = 0.1;
        let fine_dt = t_end / 256.0;
        let fine_path = BrownianPath::sample(33, fine_dt, 256, 4).unwrap();
        let mut finals = Vec::new();
        for factor in [1usize, 2, 4] {
            let path = fine_path.coarsen(factor).unwrap();
            let settings = RunSettings::new(t_end, fine_dt * factor as f64, 1e6);
            let traj = run_trajectory(&x0, &settings, &p, &basis, &path, &grid).unwrap();
            finals.push(traj.final_state);
        }
        let d_half = finals[1].l2_distance(&finals[0]);
        let d_quarter = finals[2].l2_distance(&finals[0]);
        assert!(
            d_quarter > d_half,
            "coarser dt should sit farther from the reference: {d_half} vs {d_quarter}"
        );
    }

    #[test]
    fn cauchy_identical_levels_width_zero() {
        // trivial check on the distance bookkeeping: a pair of equal states
        let x = State::random(3, 4, 8, 0.2, 1.0);
        let injected = x.resize_block(5);
        assert_eq!(x.l2_distance(&injected), 0.0);
    }

    #[test]
    fn weak_regime_guard() {
        let p = ModelParams::weak();
        assert_eq!(p.regime, Regime::UntruncatedWeak);
        assert!(p.validate().is_ok());
    }
}
