//! Built-in checks behind `ecnv selftest`: the spectral operator unit suite
//! plus a short Ornstein-Uhlenbeck stationary-variance comparison.

use ecnv_core::dynamics::{run, step, SimParams, SimState};
use ecnv_core::forcing::{ForcingBank, WienerDriver};
use ecnv_core::measure::{ou_mode_variance_oracle, Dissipation};
use ecnv_core::norms::{l2_sq, l2_sq_vec, quadrature_l2_sq, sobolev_sq};
use ecnv_core::ops;
use ecnv_core::synth::{random_div_free, random_scalar};
use ecnv_core::{Grid64, SpectralScalar64, SpectralVector64, TrigMode64};

type Check = (&'static str, Box<dyn Fn() -> Result<(), String>>);

fn grid(n: usize) -> Result<Grid64, String> {
    Grid64::new(n).map_err(|e| e.to_string())
}

fn cosm(g: &Grid64, k1: i32, k2: i32, amp: f64) -> SpectralScalar64 {
    SpectralScalar64::from_modes(
        g,
        &[TrigMode64 {
            k1,
            k2,
            cos_amp: amp,
            sin_amp: 0.0,
        }],
    )
    .expect("mode")
}

fn coeff_close(a: &SpectralScalar64, b: &SpectralScalar64, tol: f64) -> Result<(), String> {
    let worst = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    if worst <= tol {
        Ok(())
    } else {
        Err(format!("coefficient defect {worst:e} above {tol:e}"))
    }
}

fn check_single_mode_operators() -> Result<(), String> {
    let g = grid(32)?;
    let q = cosm(&g, 1, 0, 1.0);
    coeff_close(
        &ops::fractional_laplacian(&g, &q, 1.0).map_err(|e| e.to_string())?,
        &q,
        1e-12,
    )?;
    coeff_close(
        &ops::fractional_laplacian(&g, &cosm(&g, 2, 0, 1.0), 2.0).map_err(|e| e.to_string())?,
        &cosm(&g, 2, 0, 4.0),
        1e-12,
    )?;
    coeff_close(
        &ops::inv_lambda(&g, &cosm(&g, 2, 0, 1.0)).map_err(|e| e.to_string())?,
        &cosm(&g, 2, 0, 0.5),
        1e-12,
    )?;
    let r = ops::riesz(&g, &q).map_err(|e| e.to_string())?;
    let g2 = ops::gradient(&g, &q).map_err(|e| e.to_string())?;
    coeff_close(r.comp1(), g2.comp1(), 1e-12)?;
    Ok(())
}

fn check_roundtrip_and_parseval() -> Result<(), String> {
    let g = grid(64)?;
    for seed in 0..5 {
        let q = random_scalar(&g, seed, 1.7);
        let phys = q.to_physical(&g).map_err(|e| e.to_string())?;
        let back = SpectralScalar64::from_physical(&g, &phys).map_err(|e| e.to_string())?;
        coeff_close(&q, &back, 1e-12)?;
        let quad = quadrature_l2_sq(&g, &phys);
        let spectral = l2_sq(&q);
        if (quad - spectral).abs() > 1e-12 * spectral {
            return Err(format!("Parseval defect: {quad} vs {spectral}"));
        }
    }
    Ok(())
}

fn check_riesz_divergence_identity() -> Result<(), String> {
    let g = grid(64)?;
    for seed in 0..20 {
        let q = random_scalar(&g, seed + 50, 1.5);
        let div_r = ops::divergence(&g, &ops::riesz(&g, &q).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let mut minus_lam = ops::fractional_laplacian(&g, &q, 1.0).map_err(|e| e.to_string())?;
        minus_lam.scale(-1.0);
        coeff_close(&div_r, &minus_lam, 1e-12)?;
    }
    Ok(())
}

fn check_leray_and_cancellation() -> Result<(), String> {
    let g = grid(32)?;
    let phi = random_scalar(&g, 7, 2.0);
    let grad = ops::gradient(&g, &phi).map_err(|e| e.to_string())?;
    let proj = ops::leray_project(&g, &grad).map_err(|e| e.to_string())?;
    if l2_sq_vec(&proj).sqrt() > 1e-12 * l2_sq_vec(&grad).sqrt() {
        return Err("Leray projection does not annihilate gradients".into());
    }
    let u = random_div_free(&g, 8, 2.0);
    let q = random_scalar(&g, 9, 2.0);
    let adv = ops::advect_scalar(&g, &u, &q).map_err(|e| e.to_string())?;
    let pairing = ecnv_core::norms::l2_inner(&adv, &q).abs();
    let scale = l2_sq_vec(&u).sqrt() * sobolev_sq(&g, &q, 1.0).sqrt() * l2_sq(&q).sqrt();
    if pairing > 1e-10 * scale {
        return Err(format!("advection pairing {pairing:e} vs scale {scale:e}"));
    }
    Ok(())
}

fn check_steady_state() -> Result<(), String> {
    let g = grid(32)?;
    let phi = cosm(&g, 1, 0, 1.0);
    let mut q0 = ops::fractional_laplacian(&g, &phi, 1.0).map_err(|e| e.to_string())?;
    q0.scale(-1.0);
    let bank = ForcingBank::new(&g, phi, SpectralVector64::zeros(32), vec![], vec![])
        .map_err(|e| e.to_string())?;
    let params = SimParams::new(1.0, 0.0, 1e-3, 1.0);
    let mut driver = WienerDriver::new(0, 0, 0);
    let state0 = SimState::new(&g, q0.clone(), SpectralVector64::zeros(32), 0.0)
        .map_err(|e| e.to_string())?;
    let mut state = state0;
    for _ in 0..100 {
        state = step(&g, &state, &bank, &mut driver, &params).map_err(|e| e.to_string())?;
    }
    let dq = state.q.minus(&q0);
    let drift = (sobolev_sq(&g, &dq, 0.0) + l2_sq_vec(&state.u)).sqrt();
    if drift > 1e-10 {
        return Err(format!("steady state drifted by {drift:e} over 0.1 time units"));
    }
    Ok(())
}

fn check_driver_determinism() -> Result<(), String> {
    let mut a = WienerDriver::new(5, 3, 4);
    let mut b = WienerDriver::new(5, 3, 4);
    for _ in 0..100 {
        let ia = a.sample_increment::<f64>(0.01).map_err(|e| e.to_string())?;
        let ib = b.sample_increment::<f64>(0.01).map_err(|e| e.to_string())?;
        if ia != ib {
            return Err("identical drivers diverged".into());
        }
    }
    Ok(())
}

fn check_ou_variance() -> Result<(), String> {
    let g = grid(16)?;
    let bank = ForcingBank::new(
        &g,
        SpectralScalar64::zeros(16),
        SpectralVector64::zeros(16),
        vec![cosm(&g, 1, 0, 1.0)],
        vec![SpectralVector64::zeros(16)],
    )
    .map_err(|e| e.to_string())?;
    let mut params = SimParams::new(1.0, 0.0, 1e-2, 300.0);
    params.linear = true;
    params.zero_potential = true;
    let oracle = ou_mode_variance_oracle(&g, (1, 0), 1.0, Dissipation::Fractional, &bank)
        .map_err(|e| e.to_string())?;
    let expect = oracle.discrete(params.dt);
    let mut driver = WienerDriver::new(2024, 0, 1);
    let mut sum = 0.0;
    let mut count = 0u64;
    let mut obs = |state: &SimState<f64>| {
        if state.t > 10.0 {
            sum += state.q.coeff(&g, 1, 0).norm_sqr();
            count += 1;
        }
    };
    run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut [&mut obs])
        .map_err(|e| e.to_string())?;
    let empirical = sum / count as f64;
    let se = expect * (2.0f64 / (oracle.rate * 290.0)).sqrt();
    if (empirical - expect).abs() > 3.0 * se {
        return Err(format!(
            "OU variance {empirical:.5e} vs oracle {expect:.5e} (3σ = {:.2e})",
            3.0 * se
        ));
    }
    Ok(())
}

pub fn all_checks() -> Vec<Check> {
    vec![
        ("single-mode operators", Box::new(check_single_mode_operators)),
        ("transform round trip and Parseval", Box::new(check_roundtrip_and_parseval)),
        ("div(riesz) = -lambda", Box::new(check_riesz_divergence_identity)),
        ("Leray projection and advection cancellation", Box::new(check_leray_and_cancellation)),
        ("potential-balance steady state", Box::new(check_steady_state)),
        ("Wiener driver determinism", Box::new(check_driver_determinism)),
        ("Ornstein-Uhlenbeck variance oracle", Box::new(check_ou_variance)),
    ]
}
