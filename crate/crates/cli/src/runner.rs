//! Command implementations: single runs, parallel ensembles, the
//! diagnostics suite, the invariant-measure suite, and the self test.
//!
//! Determinism contract: `(config, seed)` fixes every output byte. Paths are
//! independent streams keyed by `(seed, path_id)`; parallel results are
//! merged in path order, so the thread count never shows in the output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use ecnv_core::diagnostics::{
    commutator_corpus, gronwall_continuity, moment_report, required_c0, ChargeL2Budget,
    ChargeL4Budget, MomentTracker, VelocityH1Budget,
};
use ecnv_core::dynamics::{step_with_increment, steps_to, SimParams, SimState};
use ecnv_core::forcing::{NoiseIncrement, WienerDriver};
use ecnv_core::measure::{
    kb_convergence, tightness_scan, transition_kernel_mc, feller_probe, Observable, TimeAverage,
};
use ecnv_core::norms::{norms, script_h_distance_sq};
use ecnv_core::{Error as CoreError, Grid64, NormReport64, SimState64};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{diagnostics_header, diagnostics_row, fmt_f64, histogram_csv};
use crate::snapshot::{self, SnapshotMeta};

type Result<T> = std::result::Result<T, CliError>;

/// Builds the rayon pool honoring `ECNV_THREADS`, then runs the closure in
/// it. Outputs do not depend on the pool size.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(threads) = std::env::var("ECNV_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| CliError::Config(format!("ECNV_THREADS must be an integer, got '{threads}'")))?;
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathOutcome {
    Completed,
    BlowUp { t: f64 },
}

/// Everything one path produces; merging happens strictly by path order.
pub struct PathProduct {
    pub path_id: u64,
    pub csv_rows: String,
    pub snapshots: Vec<(u64, Vec<u8>)>,
    pub tracker: MomentTracker<f64>,
    pub last_state: SimState64,
    pub outcome: PathOutcome,
}

/// Runs one path with norm sampling, optional budgets and snapshots.
pub fn simulate_path(grid: &Grid64, cfg: &RunConfig, path_id: u64) -> Result<PathProduct> {
    let bank = cfg.build_bank(grid)?;
    let params = cfg.sim_params();
    params.validate().map_err(CliError::from)?;
    let mut driver = WienerDriver::new(cfg.seed, path_id, bank.n_noise());

    let mut b2 = cfg
        .budget_l2_q
        .then(|| ChargeL2Budget::new(grid, &bank, &params))
        .transpose()?;
    let mut b4 = cfg
        .budget_l4_q
        .then(|| ChargeL4Budget::new(grid, &bank, &params))
        .transpose()?;
    let mut bu = cfg
        .budget_h1_u
        .then(|| VelocityH1Budget::new(grid, &bank, &params))
        .transpose()?;

    let mut state = cfg.initial_state(grid)?;
    let mut tracker = MomentTracker::new(cfg.sample_every as usize);
    let mut csv_rows = String::new();
    let mut snapshots = Vec::new();

    let n_steps = steps_to(state.t, params.t_end, params.dt);
    for step_idx in 1..=n_steps {
        let inc = driver.sample_increment(params.dt)?;
        let out = match step_with_increment(grid, &state, &bank, &inc, &params) {
            Ok(out) => out,
            Err(CoreError::BlowUp { t, .. }) => {
                return Ok(PathProduct {
                    path_id,
                    csv_rows,
                    snapshots,
                    tracker,
                    last_state: state,
                    outcome: PathOutcome::BlowUp { t },
                });
            }
            Err(e) => return Err(e.into()),
        };

        let res_l2 = b2
            .as_mut()
            .map(|b| b.step(grid, &state, &out.state, &out.noise_q, &params).residual);
        let res_l4 = match b4.as_mut() {
            Some(b) => Some(
                b.step(grid, &state, &out.state, &out.noise_q, &params)?
                    .record
                    .residual,
            ),
            None => None,
        };
        let res_h1 = match bu.as_mut() {
            Some(b) => Some(
                b.step(grid, &state, &out.state, &out.noise_u, &params)?
                    .record
                    .residual,
            ),
            None => None,
        };

        state = out.state;
        tracker.update(grid, &state, params.dt)?;

        if step_idx % cfg.sample_every as u64 == 0 {
            let report = norms(grid, &state.q, &state.u)?;
            csv_rows.push_str(&diagnostics_row(state.t, &report, res_l2, res_l4, res_h1));
        }
        if cfg.snapshot_every > 0 && step_idx % cfg.snapshot_every as u64 == 0 {
            let meta = SnapshotMeta {
                n_modes: grid.n() as u32,
                alpha: params.alpha,
                t: state.t,
                path_id,
            };
            snapshots.push((step_idx, snapshot::encode(&meta, &state.q, &state.u)));
        }
    }

    Ok(PathProduct {
        path_id,
        csv_rows,
        snapshots,
        tracker,
        last_state: state,
        outcome: PathOutcome::Completed,
    })
}

fn write_blowup_snapshot(out_dir: &Path, cfg: &RunConfig, product: &PathProduct) -> Result<PathBuf> {
    let path = out_dir.join(format!("blowup_path{:03}.snap", product.path_id));
    let meta = SnapshotMeta {
        n_modes: cfg.n as u32,
        alpha: cfg.alpha,
        t: product.last_state.t,
        path_id: product.path_id,
    };
    snapshot::write_file(&path, &meta, &product.last_state.q, &product.last_state.u)?;
    Ok(path)
}

fn moments_csv(trackers: &[MomentTracker<f64>]) -> Result<Option<String>> {
    if trackers.is_empty() || trackers[0].samples().len() < 8 {
        return Ok(None);
    }
    let report = moment_report(trackers)?;
    let mut csv = String::from("name,final_mean,slope_second_half,slope_q3,slope_q4,slope_drift_rel\n");
    for q in &report.quantities {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            q.name,
            fmt_f64(q.final_mean),
            fmt_f64(q.slope_second_half),
            fmt_f64(q.slope_q3),
            fmt_f64(q.slope_q4),
            fmt_f64(q.slope_drift_rel)
        );
    }
    Ok(Some(csv))
}

/// Shared body of `run` (one path) and `ensemble` (`cfg.paths` paths).
fn run_paths(cfg: &RunConfig, out_dir: &Path, n_paths: u64) -> Result<()> {
    let grid = cfg.grid()?;
    fs::create_dir_all(out_dir)?;

    let products: Vec<Result<PathProduct>> = with_thread_pool(|| {
        (0..n_paths)
            .into_par_iter()
            .map(|path_id| simulate_path(&grid, cfg, path_id))
            .collect()
    })?;

    let mut merged = diagnostics_header(cfg.budget_l2_q, cfg.budget_l4_q, cfg.budget_h1_u);
    let mut trackers = Vec::new();
    for product in products {
        let product = product?;
        if let PathOutcome::BlowUp { t } = product.outcome {
            let snap = write_blowup_snapshot(out_dir, cfg, &product)?;
            return Err(CliError::BlowUp {
                t,
                path_id: product.path_id,
                snapshot: snap.display().to_string(),
            });
        }
        merged.push_str(&product.csv_rows);
        for (step_idx, bytes) in &product.snapshots {
            let name = format!("state_path{:03}_step{:08}.snap", product.path_id, step_idx);
            fs::write(out_dir.join(name), bytes)?;
        }
        trackers.push(product.tracker);
    }
    fs::write(out_dir.join("diagnostics.csv"), merged)?;
    if let Some(csv) = moments_csv(&trackers)? {
        fs::write(out_dir.join("moments.csv"), csv)?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    run_paths(cfg, out_dir, 1)
}

pub fn cmd_ensemble(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    run_paths(cfg, out_dir, cfg.paths)
}

/// Budget dt-halving study, Gronwall continuity with pilot-calibrated c0,
/// and the commutator corpus.
pub fn cmd_diagnose(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    let grid = cfg.grid()?;
    fs::create_dir_all(out_dir)?;
    let bank = cfg.build_bank(&grid)?;

    // --- coupled dt-halving of the three budget residuals ---
    let fine_dt = cfg.dt / 2.0;
    let mut fine_params = cfg.sim_params();
    fine_params.dt = fine_dt;
    let coarse_params = cfg.sim_params();
    let state0 = cfg.initial_state(&grid)?;

    let mut driver = WienerDriver::new(cfg.seed, 0, bank.n_noise());
    let n_fine = steps_to(0.0, cfg.t_end, fine_dt);
    let fine_incs: Vec<NoiseIncrement<f64>> = (0..n_fine)
        .map(|_| driver.sample_increment(fine_dt))
        .collect::<std::result::Result<_, _>>()?;
    let coarse_incs: Vec<NoiseIncrement<f64>> = fine_incs
        .chunks(2)
        .map(|pair| {
            if pair.len() == 2 {
                pair[0].merged(&pair[1])
            } else {
                pair[0].clone()
            }
        })
        .collect();

    let cumulative = |params: &SimParams<f64>, incs: &[NoiseIncrement<f64>]| -> Result<[f64; 3]> {
        let mut b2 = ChargeL2Budget::new(&grid, &bank, params)?;
        let mut b4 = ChargeL4Budget::new(&grid, &bank, params)?;
        let mut bu = VelocityH1Budget::new(&grid, &bank, params)?;
        let mut state = state0.clone();
        for inc in incs {
            let out = step_with_increment(&grid, &state, &bank, inc, params)?;
            b2.step(&grid, &state, &out.state, &out.noise_q, params);
            b4.step(&grid, &state, &out.state, &out.noise_q, params)?;
            bu.step(&grid, &state, &out.state, &out.noise_u, params)?;
            state = out.state;
        }
        Ok([
            b2.cumulative().abs(),
            b4.cumulative().abs(),
            bu.cumulative().abs(),
        ])
    };
    let coarse = cumulative(&coarse_params, &coarse_incs)?;
    let fine = cumulative(&fine_params, &fine_incs)?;
    let mut csv = String::from("budget,cumulative_coarse,cumulative_fine,ratio\n");
    for (name, c, f) in [
        ("l2_q", coarse[0], fine[0]),
        ("l4_q", coarse[1], fine[1]),
        ("h1_u", coarse[2], fine[2]),
    ] {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            name,
            fmt_f64(c),
            fmt_f64(f),
            fmt_f64(c / f)
        );
        println!(
            "budget {name}: cumulative residual {:.3e} -> {:.3e} on dt halving (ratio {:.2})",
            c,
            f,
            c / f
        );
    }
    fs::write(out_dir.join("budget_convergence.csv"), csv)?;

    // --- pathwise continuity: pilot-calibrate c0, verify on a fresh path ---
    let perturbation = {
        let mut q = state0.q.clone();
        let bump = ecnv_core::synth::random_scalar(&grid, cfg.seed ^ PERTURBATION_STREAM, 2.0);
        q.axpy(1e-6, &bump);
        SimState::new(&grid, q, state0.u.clone(), 0.0)?
    };
    let h0 = script_h_distance_sq(
        &grid,
        &state0.q,
        &state0.u,
        &perturbation.q,
        &perturbation.u,
    );
    let mut pilot_driver = WienerDriver::new(cfg.seed, 0, bank.n_noise());
    let pilot = gronwall_continuity(
        &grid,
        state0.clone(),
        perturbation.clone(),
        &bank,
        &mut pilot_driver,
        &coarse_params,
        0.0,
    )?;
    let c0 = required_c0(&pilot, h0) * 1.25;
    let mut verify_driver = WienerDriver::new(cfg.seed, 1, bank.n_noise());
    let traces = gronwall_continuity(
        &grid,
        state0.clone(),
        perturbation,
        &bank,
        &mut verify_driver,
        &coarse_params,
        c0,
    )?;
    let violations = traces.iter().filter(|tr| tr.violation).count();
    let mut csv = String::from("t,c_integrand,r_cum,h_dist_sq,bound,violation\n");
    for tr in &traces {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(tr.t),
            fmt_f64(tr.c_integrand),
            fmt_f64(tr.r_cum),
            fmt_f64(tr.h_dist_sq),
            fmt_f64(tr.bound),
            tr.violation
        );
    }
    fs::write(out_dir.join("gronwall.csv"), csv)?;
    println!(
        "gronwall: pilot-calibrated c0 = {c0:.4}, violations on verification path: {violations}"
    );

    // --- commutator corpus ---
    let kmax = (cfg.n / 3) as i32;
    let ratios = commutator_corpus(&grid, 100, cfg.seed, kmax)?;
    let max_ratio = ratios.iter().copied().fold(0.0f64, f64::max);
    let mut csv = String::from("pair,ratio\n");
    for (i, r) in ratios.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i, fmt_f64(*r));
    }
    fs::write(out_dir.join("commutator.csv"), csv)?;
    println!(
        "commutator: {} pairs, max ratio {:.4}",
        ratios.len(),
        max_ratio
    );
    Ok(())
}

/// Seed offset separating the synthetic perturbation from the noise streams.
const PERTURBATION_STREAM: u64 = 0x65636e76;

/// Krylov-Bogoliubov averages at nested horizons, kernel estimates,
/// tightness scan, Feller probe, histograms.
pub fn cmd_measure(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    if !cfg.phi_modes.is_empty() && !cfg.zero_potential {
        return Err(CliError::Config(
            "measure runs require the zero-potential system: set physics.zero_potential = true \
             or drop [forcing.phi]"
                .into(),
        ));
    }
    let grid = cfg.grid()?;
    fs::create_dir_all(out_dir)?;
    let bank = cfg.build_bank(&grid)?;
    let params = cfg.sim_params();
    ecnv_core::measure::check_invariant_measure_regime(&bank, &params)?;

    let t_base = cfg.t_end / 4.0;
    let t_burn = cfg.burn_frac * t_base;
    let observables: Vec<Observable<f64>> = cfg.observables.iter().map(|o| o.build()).collect();

    // one pass: KB horizon snapshots, norm samples, observable histories
    let mut averages: Vec<TimeAverage<f64>> = observables
        .iter()
        .map(|o| TimeAverage::new(o.clone(), t_burn))
        .collect();
    let mut horizon_snaps: Vec<Vec<TimeAverage<f64>>> = vec![Vec::new(); observables.len()];
    let mut histories: Vec<Vec<f64>> = vec![Vec::new(); observables.len()];
    let mut samples: Vec<NormReport64> = Vec::new();

    let state0 = cfg.initial_state(&grid)?;
    let mut driver = WienerDriver::new(cfg.seed, 0, bank.n_noise());
    let mut state = state0.clone();
    let n_steps = steps_to(state.t, cfg.t_end, cfg.dt);
    let mut next_horizon = t_base;
    for step_idx in 1..=n_steps {
        state = match ecnv_core::dynamics::step(&grid, &state, &bank, &mut driver, &params) {
            Ok(s) => s,
            Err(CoreError::BlowUp { t, .. }) => {
                return Err(CliError::BlowUp {
                    t,
                    path_id: 0,
                    snapshot: "<measure pass holds no snapshot>".into(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        for avg in averages.iter_mut() {
            avg.accumulate(&grid, &state, cfg.dt);
        }
        if state.t >= next_horizon - 0.5 * cfg.dt && horizon_snaps[0].len() < 2 {
            for (snaps, avg) in horizon_snaps.iter_mut().zip(&averages) {
                snaps.push(avg.clone());
            }
            next_horizon *= 2.0;
        }
        if step_idx % cfg.sample_every as u64 == 0 {
            samples.push(norms(&grid, &state.q, &state.u)?);
            for (hist, obs) in histories.iter_mut().zip(&observables) {
                hist.push(obs.eval(&grid, &state));
            }
        }
    }

    // KB report
    let mut kb_csv = String::from("observable,mean_t,mean_2t,mean_4t,gap_first,gap_second,converged\n");
    for (i, obs) in observables.iter().enumerate() {
        let [a, b] = [&horizon_snaps[i][0], &horizon_snaps[i][1]];
        let c = &averages[i];
        let report = kb_convergence(a, b, c)?;
        let _ = writeln!(
            kb_csv,
            "{},{},{},{},{},{},{}",
            obs.name,
            fmt_f64(a.mean()),
            fmt_f64(b.mean()),
            fmt_f64(c.mean()),
            fmt_f64(report.gap_first),
            fmt_f64(report.gap_second),
            report.converged
        );
        println!(
            "kb {}: gaps {:.3e} -> {:.3e} (converged: {})",
            obs.name, report.gap_first, report.gap_second, report.converged
        );
    }
    fs::write(out_dir.join("kb.csv"), kb_csv)?;

    // tightness scan over radii scaled to the observed mean
    let mean_sq = samples
        .iter()
        .map(|r| r.q_h_three_half_sq + r.u_h2_sq)
        .sum::<f64>()
        / samples.len().max(1) as f64;
    let base_radius = mean_sq.max(1e-12).sqrt();
    let radii: Vec<f64> = [0.5, 1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|c| c * base_radius)
        .collect();
    let reports = tightness_scan(&samples, &radii)?;
    let mut csv = String::from("radius,fraction_inside,time_avg_norm_sq\n");
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(r.radius),
            fmt_f64(r.fraction_inside),
            fmt_f64(r.time_avg_norm_sq)
        );
    }
    fs::write(out_dir.join("tightness.csv"), csv)?;

    // transition kernel estimates for nested sublevel events of script-H,
    // all thresholds evaluated on one shared set of paths
    let ref_level = {
        let avg = samples.iter().map(|r| r.script_h_sq).sum::<f64>() / samples.len().max(1) as f64;
        avg.max(1e-12)
    };
    let t_kernel = t_base.min(5.0);
    let mut csv = String::from("threshold,probability,ci_low,ci_high,hits,paths\n");
    for factor in [0.5, 1.0, 2.0, 4.0] {
        let threshold = factor * ref_level;
        let est = with_thread_pool(|| {
            transition_kernel_mc(
                &grid,
                &state0,
                t_kernel,
                |r: &NormReport64| r.script_h_sq <= threshold,
                cfg.kernel_paths,
                &bank,
                &params,
                cfg.seed,
            )
        })??;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            fmt_f64(threshold),
            fmt_f64(est.probability),
            fmt_f64(est.ci_low),
            fmt_f64(est.ci_high),
            est.hits,
            est.paths
        );
    }
    fs::write(out_dir.join("kernel.csv"), csv)?;

    // Feller probe with common random numbers
    let bounded = observables
        .iter()
        .find(|o| o.is_bounded())
        .cloned()
        .unwrap_or_else(|| Observable::tanh_mode(1, 0));
    let perturb = |amp: f64| -> Result<SimState64> {
        let mut q = state0.q.clone();
        let bump = ecnv_core::SpectralScalar64::from_modes(
            &grid,
            &[ecnv_core::TrigMode {
                k1: 1,
                k2: 0,
                cos_amp: amp,
                sin_amp: 0.0,
            }],
        )?;
        q.axpy(1.0, &bump);
        Ok(SimState::new(&grid, q, state0.u.clone(), 0.0)?)
    };
    let perturbed = vec![perturb(1e-2)?, perturb(1e-3)?, perturb(1e-4)?];
    let feller_t = t_base.min(1.0);
    let feller_paths = (cfg.kernel_paths / 8).max(4);
    let rows = with_thread_pool(|| {
        feller_probe(
            &grid,
            &state0,
            &perturbed,
            &bounded,
            feller_t,
            &bank,
            &params,
            feller_paths,
            cfg.seed ^ 0xfe11e4,
        )
    })??;
    let mut csv = String::from("h_distance,mean_abs_diff,std_error\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(r.h_distance),
            fmt_f64(r.mean_abs_diff),
            fmt_f64(r.std_error)
        );
    }
    fs::write(out_dir.join("feller.csv"), csv)?;

    // histograms
    for (obs, hist) in observables.iter().zip(&histories) {
        let name = format!("hist_{}.csv", obs.name);
        fs::write(out_dir.join(name), histogram_csv(hist, 32))?;
    }
    Ok(())
}

/// Built-in verification: operator exactness, transforms, cancellations,
/// steady state, determinism, and the Ornstein-Uhlenbeck variance oracle.
pub fn cmd_selftest() -> Result<()> {
    let checks = crate::selftest::all_checks();
    let mut failures = 0usize;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("ok    {name}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL  {name}: {msg}");
            }
        }
    }
    if failures > 0 {
        return Err(CliError::SelfTest { failures });
    }
    println!("selftest passed");
    Ok(())
}
