//! Study orchestration: initial states, ensembles of realizations, the
//! refinement studies, the snapshot replay audit, and the noise report.
//! Everything here is deterministic given (config, seed): realizations get
//! independent streams derived from the master seed and write independent
//! artifacts, so parallel scheduling cannot change any output byte.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::{InitProfile, RunConfig, StudyKind};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::io;
use crate::model::State;
use crate::noise::{build_basis, NoiseFamily};
use crate::sde::{
    self, cauchy_study, fit_order, realization_seed, BrownianPath, CauchyReport, CauchyStudy,
    RunSettings, Termination,
};
use crate::spectral::{ops, synthesize, SpectralField};

fn init_seed(master: u64) -> u64 {
    realization_seed(master ^ 0x494e_4954, 0)
}

/// Worker pool capped by LUSW_THREADS (0 or unset = automatic).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = std::env::var("LUSW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))
}

/// Build the initial state of a config at the given block level.
pub fn initial_state(cfg: &RunConfig, level: u32) -> Result<State> {
    let seed = init_seed(cfg.rng.seed);
    let bw = cfg.init.bandwidth.min(1i64 << level);
    let tau = std::f64::consts::TAU;
    let state = match cfg.init.profile {
        InitProfile::SmoothRandom => {
            let psi = SpectralField::random_smooth(seed, level, bw, 2.5);
            let mut u = ops::perp_gradient(&psi);
            let norm = (u[0].l2_norm().powi(2) + u[1].l2_norm().powi(2))
                .sqrt()
                .max(1e-300);
            let factor = cfg.init.amplitude * tau / norm;
            u = [u[0].scale(factor), u[1].scale(factor)];
            let h = height_with_mean(seed ^ 1, level, bw, cfg.init.h_amplitude, cfg.init.h_mean);
            State { u, h }
        }
        InitProfile::Shear => {
            let u = [
                SpectralField::sine((0, 1), cfg.init.amplitude).resize_block(level),
                SpectralField::zeros(level),
            ];
            let mut h = SpectralField::cosine((1, 0), cfg.init.h_amplitude).resize_block(level);
            h.scaled_add(1.0, &SpectralField::constant(cfg.init.h_mean));
            State {
                u,
                h: h.resize_block(level),
            }
        }
        InitProfile::Transport => {
            let u = [
                SpectralField::constant(cfg.init.u_const.0).resize_block(level),
                SpectralField::constant(cfg.init.u_const.1).resize_block(level),
            ];
            let h = height_with_mean(seed ^ 2, level, bw, cfg.init.h_amplitude, cfg.init.h_mean);
            State { u, h }
        }
    };
    Ok(state)
}

fn height_with_mean(seed: u64, level: u32, bw: i64, amplitude: f64, mean: f64) -> SpectralField {
    let mut pert = SpectralField::random_smooth(seed, level, bw, 2.5);
    let norm = pert.l2_norm().max(1e-300);
    pert = pert.scale(amplitude * std::f64::consts::TAU / norm);
    pert.scaled_add(1.0, &SpectralField::constant(mean));
    pert.resize_block(level)
}

fn run_settings(cfg: &RunConfig, x0: &State) -> RunSettings {
    let threshold = cfg
        .stop_threshold
        .unwrap_or_else(|| 1e3 * x0.norm_sum(cfg.params.k as f64).max(1e-12));
    RunSettings {
        t_end: cfg.time.t_end,
        dt: cfg.time.dt,
        snapshot_stride: if cfg.time.snapshot_stride == 0 {
            usize::MAX
        } else {
            cfg.time.snapshot_stride
        },
        stop_threshold: threshold,
        record_flux: cfg.record_flux,
        identity_diagnostics: true,
        per_step_records: true,
        cfl_safety: 0.5,
    }
}

#[derive(Debug, Clone)]
pub struct RealizationSummary {
    pub index: usize,
    pub seed: u64,
    pub termination: Termination,
    pub steps: usize,
    pub nan_in_csv: bool,
    pub csv_path: PathBuf,
    pub snapshots_written: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub realizations: Vec<RealizationSummary>,
}

impl RunOutcome {
    pub fn any_error(&self) -> bool {
        self.realizations
            .iter()
            .any(|r| matches!(r.termination, Termination::Error { .. }) || r.nan_in_csv)
    }
}

/// Integrate every realization of the ensemble and write its artifacts.
pub fn execute_run(cfg: &RunConfig) -> Result<RunOutcome> {
    let x0 = initial_state(cfg, cfg.grid.level())?;
    let basis = build_basis(&cfg.noise, &cfg.grid)?;
    let settings = run_settings(cfg, &x0);
    let n_steps = settings.n_steps();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let digest = cfg.digest();

    let pool = thread_pool()?;
    let summaries: Vec<Result<RealizationSummary>> = pool.install(|| {
        (0..cfg.rng.realizations)
            .into_par_iter()
            .map(|idx| {
                let seed = realization_seed(cfg.rng.seed, idx);
                let path =
                    BrownianPath::sample(seed, cfg.time.dt, n_steps, cfg.noise.mode_count())?;
                let traj =
                    sde::run_trajectory(&x0, &settings, &cfg.params, &basis, &path, &cfg.grid)?;
                let csv_path = cfg.output_dir.join(format!("diagnostics_r{idx:03}.csv"));
                let summary = io::write_diagnostics(&traj.records, &csv_path)?;
                let mut snapshots_written = 0;
                if cfg.time.snapshot_stride > 0 {
                    for (t, state) in &traj.snapshots {
                        let step = (t / cfg.time.dt).round() as usize;
                        let snap_path = cfg
                            .output_dir
                            .join(format!("snap_r{idx:03}_s{step:06}.bin"));
                        io::write_snapshot(&snap_path, state, &cfg.grid, *t, digest)?;
                        snapshots_written += 1;
                    }
                }
                Ok(RealizationSummary {
                    index: idx,
                    seed,
                    termination: traj.termination.clone(),
                    steps: traj.records.len().saturating_sub(1),
                    nan_in_csv: summary.nan_present,
                    csv_path,
                    snapshots_written,
                })
            })
            .collect()
    });
    let mut realizations = Vec::with_capacity(summaries.len());
    for s in summaries {
        realizations.push(s?);
    }
    realizations.sort_by_key(|r| r.index);
    Ok(RunOutcome { realizations })
}

/// Run the refinement study of a cauchy config and write its table.
pub fn execute_cauchy(cfg: &RunConfig) -> Result<CauchyReport> {
    if cfg.study != StudyKind::Cauchy {
        return Err(Error::config("config study.kind is not cauchy"));
    }
    let finest = *cfg.cauchy_levels.last().unwrap();
    let x0 = initial_state(cfg, finest)?;
    let study = CauchyStudy {
        levels: cfg.cauchy_levels.clone(),
        params: cfg.params,
        noise: cfg.noise.clone(),
        t_end: cfg.time.t_end,
        dt: cfg.time.dt,
        seed: cfg.rng.seed,
    };
    let report = cauchy_study(&study, &x0)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("cauchy.csv"), cauchy_csv(&report))?;
    Ok(report)
}

pub fn cauchy_csv(report: &CauchyReport) -> String {
    let mut s = String::from("level_coarse,level_fine,sup_l2,w12_integral\n");
    for p in &report.pairs {
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e}\n",
            p.coarse_level, p.fine_level, p.sup_l2, p.w12_integral
        ));
    }
    s
}

#[derive(Debug, Clone)]
pub struct OracleRow {
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub noise_on: bool,
    pub rows: Vec<OracleRow>,
    pub fitted_order: f64,
}

pub fn oracle_csv(report: &OracleReport) -> String {
    let mut s = String::from("dt,endpoint_error\n");
    for row in &report.rows {
        s.push_str(&format!("{:.16e},{:.16e}\n", row.dt, row.error));
    }
    s.push_str(&format!("# fitted_order = {:.6}\n", report.fitted_order));
    s
}

/// Integrate the transport configuration across dt halvings under one
/// Brownian motion and compare endpoints against the closed-form solution.
///
/// With noise on (one constant mode c, g = 0, u ≡ 0) the oracle is
/// q₀(x − cB_T); with noise off (constant velocity, g = f = 0) it is the
/// exact Fourier multiplier of advection-diffusion.
pub fn execute_oracle_transport(cfg: &RunConfig) -> Result<OracleReport> {
    let noise_on = cfg.noise.scale > 0.0;
    if cfg.params.g != 0.0 {
        return Err(Error::config(
            "oracle-transport requires params.g = 0 (gravity couples u and h)",
        ));
    }
    let c = if noise_on {
        match cfg.noise.family {
            NoiseFamily::ConstantVector { direction } => {
                if cfg.init.u_const != (0.0, 0.0) {
                    return Err(Error::config(
                        "oracle-transport with noise requires init.u = 0,0",
                    ));
                }
                if cfg.params.nu != 0.0 || cfg.params.eta != 0.0 {
                    return Err(Error::config(
                        "oracle-transport with noise requires nu = eta = 0",
                    ));
                }
                (direction.0 * cfg.noise.scale, direction.1 * cfg.noise.scale)
            }
            _ => {
                return Err(Error::config(
                    "oracle-transport noise must be the constant family",
                ))
            }
        }
    } else {
        if cfg.params.f != 0.0 {
            return Err(Error::config(
                "deterministic oracle-transport requires params.f = 0",
            ));
        }
        cfg.init.u_const
    };

    let x0 = initial_state(cfg, cfg.grid.level())?;
    let basis = build_basis(&cfg.noise, &cfg.grid)?;
    let halvings = cfg.oracle_halvings;
    let base_steps = (cfg.time.t_end / cfg.time.dt).round() as usize;
    let fine_factor = 1usize << halvings;
    let fine_dt = cfg.time.dt / fine_factor as f64;
    let n_realizations = cfg.rng.realizations;

    let pool = thread_pool()?;
    let rows: Vec<OracleRow> = pool.install(|| {
        (0..=halvings)
            .into_par_iter()
            .map(|level| -> Result<OracleRow> {
                let factor = 1usize << (halvings - level);
                let dt = fine_dt * factor as f64;
                let sq_sum: f64 = (0..n_realizations)
                    .into_par_iter()
                    .map(|idx| -> Result<f64> {
                        let seed = realization_seed(cfg.rng.seed, idx);
                        let fine_path = BrownianPath::sample(
                            seed,
                            fine_dt,
                            base_steps * fine_factor,
                            cfg.noise.mode_count(),
                        )?;
                        let path = fine_path.coarsen(factor)?;
                        let mut settings = run_settings(cfg, &x0);
                        settings.dt = dt;
                        settings.identity_diagnostics = false;
                        settings.per_step_records = false;
                        let traj = sde::run_trajectory(
                            &x0,
                            &settings,
                            &cfg.params,
                            &basis,
                            &path,
                            &cfg.grid,
                        )?;
                        if traj.termination != Termination::Completed {
                            return Err(Error::Integration(format!(
                                "oracle run did not complete: {:?}",
                                traj.termination
                            )));
                        }
                        let oracle = if noise_on {
                            sde::exact_transport_oracle(
                                &x0.h,
                                c,
                                path.endpoint(0) / cfg.noise.scale,
                            )
                        } else {
                            advection_diffusion_oracle(&x0.h, c, cfg.params.eta, cfg.time.t_end)
                        };
                        let err = traj.final_state.h.l2_distance(&oracle);
                        Ok(err * err)
                    })
                    .try_reduce(|| 0.0, |a, b| Ok(a + b))?;
                Ok(OracleRow {
                    dt,
                    error: (sq_sum / n_realizations as f64).sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let dts: Vec<f64> = rows.iter().map(|r| r.dt).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let fitted_order = fit_order(&dts, &errs);
    std::fs::create_dir_all(&cfg.output_dir)?;
    let report = OracleReport {
        noise_on,
        rows,
        fitted_order,
    };
    std::fs::write(cfg.output_dir.join("oracle.csv"), oracle_csv(&report))?;
    Ok(report)
}

/// Exact solution multipliers of dq = −U·∇q dt + ηΔq dt.
fn advection_diffusion_oracle(
    q0: &SpectralField,
    velocity: (f64, f64),
    eta: f64,
    t: f64,
) -> SpectralField {
    q0.map_multiplier(|l| {
        let k2 = (l.0 * l.0 + l.1 * l.1) as f64;
        let phase = -(l.0 as f64 * velocity.0 + l.1 as f64 * velocity.1) * t;
        num_complex::Complex64::from_polar((-eta * k2 * t).exp(), phase)
    })
}

#[derive(Debug, Clone)]
pub struct AuditRow {
    pub t: f64,
    pub energy: f64,
    pub l2: f64,
    pub cancel1: f64,
    pub cancel2: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyAuditReport {
    pub rows: Vec<AuditRow>,
    /// max_t |E(t) − E(0)| / |E(0)|.
    pub energy_drift_rel: f64,
    pub max_cancel1: f64,
    pub max_cancel2: f64,
}

pub fn audit_csv(report: &EnergyAuditReport) -> String {
    let mut s = String::from("t,E_swe,l2,cancel1,cancel2\n");
    for row in &report.rows {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.t, row.energy, row.l2, row.cancel1, row.cancel2
        ));
    }
    s
}

/// Replay the snapshot series of realization 0 and recompute the conserved
/// quantities and identities.
pub fn execute_energy_audit(cfg: &RunConfig) -> Result<EnergyAuditReport> {
    let digest = cfg.digest();
    let basis = build_basis(&cfg.noise, &cfg.grid)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&cfg.output_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("snap_r000_") && n.ends_with(".bin"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::config(format!(
            "no snapshots 'snap_r000_*.bin' under {}",
            cfg.output_dir.display()
        )));
    }
    let mut rows = Vec::new();
    for p in &paths {
        let (header, state) = io::read_snapshot(p, Some(digest))?;
        let (c1, c2) = diagnostics::cancellation_residuals(&state, &basis);
        rows.push(AuditRow {
            t: header.time,
            energy: diagnostics::swe_energy(&state, &cfg.params),
            l2: state.l2_norm(),
            cancel1: c1,
            cancel2: c2,
        });
    }
    let e0 = rows[0].energy;
    let energy_drift_rel = rows
        .iter()
        .map(|r| (r.energy - e0).abs() / e0.abs().max(1e-300))
        .fold(0.0f64, f64::max);
    let max_cancel1 = rows.iter().map(|r| r.cancel1.abs()).fold(0.0f64, f64::max);
    let max_cancel2 = rows.iter().map(|r| r.cancel2.abs()).fold(0.0f64, f64::max);
    Ok(EnergyAuditReport {
        rows,
        energy_drift_rel,
        max_cancel1,
        max_cancel2,
    })
}

/// Mode table and covariance statistics as CSV text.
pub fn noise_info_csv(cfg: &RunConfig) -> Result<String> {
    let basis = build_basis(&cfg.noise, &cfg.grid)?;
    let m = cfg.grid.points();
    let mut s = String::from("n,wavenumber_1,wavenumber_2,lambda_n,phi_l2\n");
    for (i, mode) in basis.modes.iter().enumerate() {
        let (w1, w2) = mode.wavenumber.unwrap_or((0, 0));
        let phi_l2 = (mode.phi[0].l2_norm().powi(2) + mode.phi[1].l2_norm().powi(2)).sqrt();
        s.push_str(&format!(
            "{},{},{},{:.16e},{:.16e}\n",
            i + 1,
            w1,
            w2,
            mode.amplitude * mode.amplitude,
            phi_l2
        ));
    }
    let (tr_min, tr_max, tr_mean) = basis.covariance.trace_stats(m);
    let us_l2 = (basis.isd[0].l2_norm().powi(2) + basis.isd[1].l2_norm().powi(2)).sqrt();
    let us1 = synthesize(&basis.isd[0], m)?;
    let us2 = synthesize(&basis.isd[1], m)?;
    let us_linf = us1
        .iter()
        .zip(us2.iter())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .fold(0.0f64, f64::max);
    let min_eig = basis.covariance.min_eigenvalue(m);
    s.push('\n');
    s.push_str("stat,value\n");
    for (k, v) in [
        ("trace_a_min", tr_min),
        ("trace_a_max", tr_max),
        ("trace_a_mean", tr_mean),
        ("min_eigenvalue_a", min_eig),
        ("u_s_l2", us_l2),
        ("u_s_linf", us_linf),
    ] {
        s.push_str(&format!("{k},{v:.16e}\n"));
    }
    Ok(s)
}
