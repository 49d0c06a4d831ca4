//! Acceptance suite: one test per criterion, printing one PASS/FAIL line
//! each. Run with `cargo test -p lusw-core --test acceptance -- --nocapture`
//! to see the lines of passing criteria as well.

use lusw_core::config::parse_config;
use lusw_core::diagnostics::{
    cancellation_residuals, energy_flux, energy_flux_triad, l2_energy_balance, weak_bound_monitor,
};
use lusw_core::model::{ModelParams, State};
use lusw_core::noise::{build_basis, NoiseSpec};
use lusw_core::runner;
use lusw_core::sde::{
    self, cauchy_study, fit_order, realization_seed, BrownianPath, CauchyStudy, RunSettings,
    Termination,
};
use lusw_core::spectral::{lp, ops, SpectralField};
use lusw_core::GridSpec;

fn report<F: FnOnce() + std::panic::UnwindSafe>(name: &str, body: F) {
    let start = std::time::Instant::now();
    match std::panic::catch_unwind(body) {
        Ok(()) => println!(
            "acceptance {name}: PASS ({:.1}s)",
            start.elapsed().as_secs_f64()
        ),
        Err(cause) => {
            println!(
                "acceptance {name}: FAIL ({:.1}s)",
                start.elapsed().as_secs_f64()
            );
            std::panic::resume_unwind(cause);
        }
    }
}

#[test]
fn criterion_1_littlewood_paley_algebra() {
    report("1 (littlewood-paley algebra)", || {
        // exact block orthogonality and partition
        for seed in 0..5u64 {
            let f = SpectralField::random_smooth(seed, 5, 32, 0.6);
            let mut sum = SpectralField::zeros(5);
            for j in 0..=5u32 {
                sum.scaled_add(1.0, &lp::block(&f, j));
                for j2 in 0..=5u32 {
                    if j != j2 {
                        let twice = lp::block(&lp::block(&f, j), j2);
                        assert!(twice.nonzero_modes().is_empty(), "J_{j2} J_{j} f != 0");
                    }
                }
            }
            assert_eq!(sum, f, "block partition must reassemble f exactly");
        }

        // spectral tail bound over 100 random smooth fields, k in {0,1,2}
        for seed in 0..100u64 {
            let f = SpectralField::random_smooth(seed, 5, 32, 1.1);
            for k in [0.0f64, 1.0, 2.0] {
                for j in 1..=4u32 {
                    let n = (1u64 << j) as f64;
                    let tail = &f - &lp::project(&f, j);
                    let lhs = tail.sobolev_norm(k).powi(2);
                    let rhs = f.sobolev_norm(k + 1.0).powi(2) / n;
                    assert!(
                        lhs <= rhs * (1.0 + 1e-12),
                        "tail bound failed: seed {seed} k {k} j {j}: {lhs} > {rhs}"
                    );
                }
            }
        }

        // two-sided Bernstein with the sharp shell constants:
        // on B_j \ B_{j-1} (j >= 1) the modulus lies in (2^{j-1}, sqrt2·2^j],
        // so 2^{-s} 2^{sj} ||J_j f|| <= ||J_j Λ^s f|| <= 2^{s/2} 2^{sj} ||J_j f||;
        // the j = 0 block (zero-mean) has modulus in [1, sqrt2].
        for seed in 100..120u64 {
            let f = SpectralField::random_smooth(seed, 5, 32, 0.4);
            for s in [0.5f64, 1.0, 2.0] {
                let lam = ops::fractional_laplacian(&f, s);
                for j in 0..=5u32 {
                    let base = lp::block(&f, j).l2_norm();
                    if base == 0.0 {
                        continue;
                    }
                    let deriv = lp::block(&lam, j).l2_norm();
                    let (lo, hi) = if j == 0 {
                        (1.0, 2.0f64.powf(0.5 * s))
                    } else {
                        let two_sj = 2.0f64.powf(s * j as f64);
                        (two_sj * 2.0f64.powf(-s), two_sj * 2.0f64.powf(0.5 * s))
                    };
                    assert!(
                        deriv >= lo * base * (1.0 - 1e-12),
                        "bernstein lower: seed {seed} s {s} j {j}"
                    );
                    assert!(
                        deriv <= hi * base * (1.0 + 1e-12),
                        "bernstein upper: seed {seed} s {s} j {j}"
                    );
                }
            }
        }
    });
}

#[test]
fn criterion_2_cancellation_identities() {
    report("2 (cancellation identities)", || {
        let grid = GridSpec::with_default_points(5);
        let specs = [
            NoiseSpec::constant((1.0, 0.0), 0.3),
            NoiseSpec::stream_function(vec![(1, 0), (0, 1)], 2.0, 0.5),
            NoiseSpec::stream_function(vec![(1, 1), (2, 1), (1, 2)], 3.0, 0.4),
        ];
        for (si, spec) in specs.iter().enumerate() {
            let basis = build_basis(spec, &grid).unwrap();
            for seed in 0..50u64 {
                let x = State::random(seed, 5, 24, 0.4, 1.0);
                let (r1, r2) = cancellation_residuals(&x, &basis);
                assert!(r1.abs() < 1e-10, "cancel1 spec {si} seed {seed}: {r1:e}");
                assert!(r2.abs() < 1e-10, "cancel2 spec {si} seed {seed}: {r2:e}");
                let balance = l2_energy_balance(&x.h, &basis);
                assert!(
                    balance.abs() < 1e-10,
                    "l2 balance spec {si} seed {seed}: {balance:e}"
                );
            }
        }
    });
}

#[test]
fn criterion_3_oracle_equivalence() {
    report("3 (oracle equivalence)", || {
        // transport noise on: strong order 1/2 against the phase-shift oracle
        let noise_on = parse_config(
            "grid.j = 5
params.regime = truncated-strong
params.alpha = -1.0
params.beta = 0.0
params.nu = 0.0
params.eta = 0.0
params.g = 0.0
params.f = 0.0
params.k = 1
params.r = 1e9
noise.family = constant
noise.c = 0.2, 0.1
noise.scale = 1.0
time.t_end = 0.5
time.dt = 0.015625
rng.seed = 13
rng.realizations = 16
init.profile = transport
init.u = 0, 0
init.h_amplitude = 0.5
init.h_mean = 0.0
init.bandwidth = 4
study.kind = oracle-transport
study.halvings = 4
output.dir = target/acceptance/oracle-noise
",
        )
        .unwrap();
        let report_on = runner::execute_oracle_transport(&noise_on).unwrap();
        for w in report_on.rows.windows(2) {
            assert!(
                w[0].error > w[1].error,
                "noise-on error must decrease: {:?}",
                report_on.rows
            );
        }
        assert!(
            (0.4..=0.6).contains(&report_on.fitted_order),
            "noise-on fitted order {} outside [0.4, 0.6]",
            report_on.fitted_order
        );

        // noise off: explicit Euler order 1 against the exact multiplier
        let noise_off = parse_config(
            "grid.j = 5
params.regime = truncated-strong
params.alpha = -1.0
params.beta = 0.0
params.nu = 0.0
params.eta = 0.02
params.g = 0.0
params.f = 0.0
params.k = 1
params.r = 1e9
noise.family = constant
noise.scale = 0.0
time.t_end = 0.5
time.dt = 0.015625
rng.seed = 11
rng.realizations = 1
init.profile = transport
init.u = 0.3, 0.0
init.h_amplitude = 0.5
init.h_mean = 0.0
init.bandwidth = 4
study.kind = oracle-transport
study.halvings = 4
output.dir = target/acceptance/oracle-det
",
        )
        .unwrap();
        let report_off = runner::execute_oracle_transport(&noise_off).unwrap();
        for w in report_off.rows.windows(2) {
            assert!(w[0].error > w[1].error, "noise-off error must decrease");
        }
        assert!(
            (0.9..=1.1).contains(&report_off.fitted_order),
            "noise-off fitted order {} outside [0.9, 1.1]",
            report_off.fitted_order
        );
    });
}

fn inviscid_energy_config() -> lusw_core::config::RunConfig {
    parse_config(
        "grid.j = 5
params.regime = truncated-strong
params.alpha = -1.0
params.beta = 0.0
params.nu = 0.0
params.eta = 0.0
params.g = 9.81
params.f = 1e-4
params.k = 1
params.r = 1e9
noise.family = stream-function
noise.wavenumbers = 1,0; 0,1
noise.decay = 2.0
noise.scale = 0.01
noise.require_solenoidal_isd = true
time.t_end = 0.25
time.dt = 1e-3
rng.seed = 3
init.profile = smooth-random
init.amplitude = 0.05
init.h_mean = 1.0
init.bandwidth = 3
study.kind = run
output.dir = target/acceptance/energy
",
    )
    .unwrap()
}

#[test]
fn criterion_4_pathwise_energy() {
    report("4 (pathwise energy)", || {
        let cfg = inviscid_energy_config();
        let grid = cfg.grid;
        let basis = build_basis(&cfg.noise, &grid).unwrap();
        let x0 = runner::initial_state(&cfg, grid.level()).unwrap();
        let n_modes = cfg.noise.mode_count();

        // instantaneous drift residual at every step of the dt = 1e-3 run
        let dt = 1e-3;
        let n_steps = 250usize;
        let path = BrownianPath::sample(77, dt, n_steps, n_modes).unwrap();
        let mut x = x0.clone();
        for step in 0..n_steps {
            let rep =
                lusw_core::diagnostics::swe_energy_drift(&x, &cfg.params, &basis, &grid).unwrap();
            assert!(
                rep.relative_residual() < 1e-9,
                "step {step}: energy drift residual {:e}",
                rep.relative_residual()
            );
            assert!(
                rep.relative_martingale() < 1e-9,
                "step {step}: martingale residual {:e}",
                rep.relative_martingale()
            );
            let t = step as f64 * dt;
            x = sde::em_step(
                &x,
                t,
                dt,
                &cfg.params,
                &basis,
                path.step_increments(step),
                &grid,
            )
            .unwrap();
        }

        // integrated |E(T) − E(0)|/E(0) converging at observed order >= 1
        let fine = BrownianPath::sample(77, dt / 4.0, 4 * n_steps, n_modes).unwrap();
        let mut dts = Vec::new();
        let mut errs = Vec::new();
        for factor in [4usize, 2, 1] {
            let path = fine.coarsen(4 / factor).unwrap();
            let run_dt = dt / factor as f64;
            let mut settings = RunSettings::new(0.25, run_dt, 1e9);
            settings.identity_diagnostics = false;
            settings.per_step_records = false;
            let traj =
                sde::run_trajectory(&x0, &settings, &cfg.params, &basis, &path, &grid).unwrap();
            assert_eq!(traj.termination, Termination::Completed);
            let e0 = traj.records.first().unwrap().energy;
            let et = traj.records.last().unwrap().energy;
            dts.push(run_dt);
            errs.push((et - e0).abs() / e0);
        }
        assert!(errs[0] < errs[1] && errs[1] < errs[2], "errors {errs:?}");
        let order = fit_order(&dts, &errs);
        assert!(order >= 1.0, "integrated energy order {order} < 1");
    });
}

#[test]
fn criterion_5_weak_regime_bound() {
    report("5 (weak-regime global bound)", || {
        use rayon::prelude::*;
        let cfg = parse_config(
            "grid.j = 5
params.regime = untruncated-weak
params.alpha = -0.5
params.beta = -0.5
params.nu = 0.05
params.eta = 0.05
params.g = 9.81
params.f = 1e-4
noise.family = stream-function
noise.wavenumbers = 1,0; 0,1
noise.decay = 2.0
noise.scale = 0.02
noise.require_solenoidal_isd = true
time.t_end = 1.0
time.dt = 2e-3
rng.seed = 42
rng.realizations = 8
init.profile = smooth-random
init.amplitude = 0.1
init.h_mean = 1.0
init.bandwidth = 4
study.kind = run
output.dir = target/acceptance/weak
",
        )
        .unwrap();
        let grid = cfg.grid;
        let basis = build_basis(&cfg.noise, &grid).unwrap();
        let x0 = runner::initial_state(&cfg, grid.level()).unwrap();
        let threshold = 1e3 * x0.norm_sum(0.0);

        let ratios: Vec<(f64, f64)> = (0..cfg.rng.realizations)
            .into_par_iter()
            .map(|idx| {
                let seed = realization_seed(cfg.rng.seed, idx);
                let fine = BrownianPath::sample(seed, 1e-3, 1000, 4).unwrap();
                let mut pair = (0.0, 0.0);
                for (slot, factor) in [2usize, 1].into_iter().enumerate() {
                    let path = fine.coarsen(factor).unwrap();
                    let dt = 1e-3 * factor as f64;
                    let mut settings = RunSettings::new(1.0, dt, threshold);
                    settings.identity_diagnostics = false;
                    let traj =
                        sde::run_trajectory(&x0, &settings, &cfg.params, &basis, &path, &grid)
                            .unwrap();
                    assert_eq!(
                        traj.termination,
                        Termination::Completed,
                        "realization {idx} must not stop"
                    );
                    let rep = weak_bound_monitor(&traj, &cfg.params, None).unwrap();
                    assert!(rep.max_ratio.is_finite() && rep.max_ratio > 0.0);
                    if slot == 0 {
                        pair.0 = rep.max_ratio; // dt
                    } else {
                        pair.1 = rep.max_ratio; // dt/2
                    }
                }
                pair
            })
            .collect();
        for (idx, (coarse, fine)) in ratios.iter().enumerate() {
            let variation = (coarse - fine).abs() / fine;
            assert!(
                variation < 0.05,
                "realization {idx}: ratio varies {variation:.4} between dt and dt/2"
            );
        }
    });
}

#[test]
fn criterion_6_cauchy_refinement() {
    report("6 (cauchy refinement)", || {
        use rayon::prelude::*;
        let results: Vec<(u64, bool, Vec<f64>)> = [1u64, 2, 3]
            .into_par_iter()
            .map(|seed| {
                let study = CauchyStudy {
                    levels: vec![3, 4, 5, 6],
                    params: {
                        let mut p = ModelParams::strong(2, 1e6);
                        p.nu = 0.02;
                        p.eta = 0.02;
                        p
                    },
                    noise: NoiseSpec {
                        family: lusw_core::noise::NoiseFamily::StreamFunction {
                            wavenumbers: vec![(1, 0), (0, 1)],
                            decay: 2.0,
                        },
                        scale: 0.05,
                        require_solenoidal_isd: true,
                    },
                    t_end: 0.1,
                    dt: 1e-3,
                    seed,
                };
                let x0 = State::random(seed ^ 0xabc, 6, 24, 0.15, 1.0);
                let report = cauchy_study(&study, &x0).unwrap();
                let sups = report.pairs.iter().map(|p| p.sup_l2).collect();
                (seed, report.strictly_decreasing, sups)
            })
            .collect();
        for (seed, decreasing, sups) in results {
            assert!(
                decreasing,
                "seed {seed}: sup distances not strictly decreasing: {sups:?}"
            );
            assert!(sups.iter().all(|d| d.is_finite() && *d > 0.0));
        }
    });
}

#[test]
fn criterion_7_stopping_logic() {
    report("7 (stopping logic)", || {
        let grid = GridSpec::with_default_points(4);
        let basis = build_basis(
            &NoiseSpec::stream_function(vec![(1, 0), (0, 1)], 2.0, 0.4),
            &grid,
        )
        .unwrap();
        let mut params = ModelParams::strong(2, 1e9);
        params.nu = 0.01;
        params.eta = 0.01;
        let x0 = State::random(3, 4, 8, 0.3, 1.0);
        let k = params.k as f64;
        let threshold = x0.norm_sum(k) * 1.0001;
        let mut settings = RunSettings::new(0.5, 1e-3, threshold);
        settings.snapshot_stride = 25;
        let path = BrownianPath::sample(11, 1e-3, 500, 4).unwrap();
        let traj = sde::run_trajectory(&x0, &settings, &params, &basis, &path, &grid).unwrap();
        let tau = match traj.termination {
            Termination::Stopped { tau } => tau,
            ref other => panic!("expected stopped termination, got {other:?}"),
        };
        assert!(tau <= 0.5, "tau {tau} per the run horizon");
        assert_eq!(traj.tau_hit(), Some(tau));
        // the retained trajectory stays below the threshold
        let sup_records = traj
            .records
            .iter()
            .map(|r| r.u_k2 + r.h_k2)
            .fold(0.0f64, f64::max);
        assert!(sup_records <= threshold, "records exceed threshold");
        assert!(
            traj.max_norm_sum(k) <= threshold,
            "snapshots exceed threshold"
        );
    });
}

#[test]
fn criterion_8_energy_flux() {
    report("8 (energy flux)", || {
        use rand::{Rng, SeedableRng};
        // Γ_N against the direct triad sum on random 32-mode fields
        for seed in 0..5u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut build = |salt: u64| {
                let mut f = SpectralField::zeros(5);
                let _ = salt;
                for _ in 0..32 {
                    let l1 = rng.gen_range(-16i64..=16);
                    let l2 = rng.gen_range(-16i64..=16);
                    if (l1, l2) == (0, 0) {
                        continue;
                    }
                    let c = num_complex::Complex64::new(
                        rng.gen_range(-0.2..0.2),
                        rng.gen_range(-0.2..0.2),
                    );
                    f.set((l1, l2), c);
                    f.set((-l1, -l2), c.conj());
                }
                f
            };
            let u = [build(0), build(1)];
            for j in [2u32, 3, 4] {
                let fast = energy_flux(&u, j);
                let slow = energy_flux_triad(&u, j);
                assert!(
                    (fast - slow).abs() <= 1e-10 * (1.0 + slow.abs()),
                    "seed {seed} j {j}: pseudo-spectral {fast:e} vs triad {slow:e}"
                );
            }
        }
        // Γ_N = 0 for divergence-free u supported inside B_N
        for seed in 10..15u64 {
            let psi = SpectralField::random_smooth(seed, 3, 6, 1.0).scale(0.1);
            let u = ops::perp_gradient(&psi);
            let gamma = energy_flux(&u, 4);
            assert!(gamma.abs() <= 1e-12, "seed {seed}: gamma {gamma:e}");
        }
    });
}

#[test]
fn criterion_9_determinism_and_io() {
    report("9 (determinism and i/o)", || {
        let dir = tempfile::tempdir().unwrap();
        let base = format!(
            "grid.j = 3
params.regime = untruncated-weak
params.nu = 0.05
params.eta = 0.05
params.g = 1.0
noise.family = stream-function
noise.wavenumbers = 1,0
noise.scale = 0.05
time.t_end = 0.01
time.dt = 1e-3
time.snapshot_stride = 5
rng.seed = 9
rng.realizations = 2
init.amplitude = 0.1
output.dir = {}
",
            dir.path().join("a").display()
        );
        let cfg_a = parse_config(&base).unwrap();
        let mut cfg_b = cfg_a.clone();
        cfg_b.output_dir = dir.path().join("b");
        let out_a = runner::execute_run(&cfg_a).unwrap();
        let out_b = runner::execute_run(&cfg_b).unwrap();
        assert!(!out_a.any_error());
        for (ra, rb) in out_a.realizations.iter().zip(&out_b.realizations) {
            let a = std::fs::read(&ra.csv_path).unwrap();
            let b = std::fs::read(&rb.csv_path).unwrap();
            assert_eq!(a, b, "diagnostics CSV must be bit-identical");
        }

        // snapshot payload round trip is bit-identical; state reconstruction
        // is exact to 1e-12 in coefficients
        let grid = GridSpec::with_default_points(4);
        let state = State::random(5, 4, 12, 0.4, 1.0);
        let p1 = dir.path().join("s1.bin");
        let p2 = dir.path().join("s2.bin");
        lusw_core::io::write_snapshot(&p1, &state, &grid, 0.5, 0xabcd).unwrap();
        let (header, payload) = lusw_core::io::read_snapshot_raw(&p1, Some(0xabcd)).unwrap();
        lusw_core::io::write_snapshot_raw(&p2, header.j, header.time, header.digest, &payload)
            .unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let (_, back) = lusw_core::io::read_snapshot(&p1, Some(0xabcd)).unwrap();
        assert!(state.l2_distance(&back) < 1e-12);

        // config validation rejects each encoded invariant violation
        let rejected = [
            "params.regime = untruncated-weak\nparams.alpha = 0.0\n",
            "params.regime = untruncated-weak\nparams.k = 1\n",
            "params.regime = truncated-strong\nparams.alpha = -1\nparams.beta = 0\nparams.k = 0\n",
            "time.dt = 0\n",
            "time.t_end = -1\n",
            "grid.j = 0\n",
            "grid.j = 4\ngrid.m = 48\n",
            "unknown.key = 1\n",
            "rng.realizations = 0\n",
            "stopping.threshold = -2\n",
            "study.kind = cauchy\n",
            "study.kind = cauchy\nstudy.levels = 5\n",
            "study.kind = cauchy\nstudy.levels = 5,4\n",
            "noise.family = stream-function\nnoise.wavenumbers = 0,0\n",
            "noise.family = stream-function\nnoise.decay = 0.5\n",
            "noise.family = constant\nnoise.c = 0,0\nnoise.scale = 0.1\n",
            "params.rho = 0\n",
            "init.bandwidth = 0\n",
        ];
        for text in rejected {
            assert!(
                parse_config(text).is_err(),
                "config should have been rejected: {text:?}"
            );
        }
    });
}
