//! Discrete counterparts of the energy identities and a-priori bounds obeyed
//! by the continuum system, evaluated along simulated trajectories.
//!
//! Budgets follow the stepper's own quadrature. The energy difference is
//! factored exactly through the midpoint test function (`Δ‖q‖² = 2(q̄, δq)`
//! with `q̄ = (q + q')/2`), dissipation keeps the implicitly solved field,
//! the martingale term sits at the Itô left point, and the Itô correction is
//! the *realized* quadratic variation of the step's noise field rather than
//! its expectation. With these choices the deterministic part of every
//! residual is O(dt²) per step, so cumulative residuals on a fixed horizon
//! halve when dt is halved on noise-coupled runs.

use crate::dynamics::{step_with_increment, SimParams, SimState};
use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::forcing::{ForcingBank, WienerDriver};
use crate::grid::{pow_alpha, Grid};
use crate::norms::{
    h1_inner_vec, h2_inner_vec, l2_inner, l2_sq_vec, l4_pow4, quad_inner, script_h_distance_sq,
    sobolev_sq,
    sobolev_sq_vec,
};
use crate::ops;
use crate::scalar::{real, Real};
use crate::synth;

/// One step of one budget identity: `residual = lhs - rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetRecord<T> {
    pub t: T,
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    pub cumulative_residual: T,
}

fn parseval<T: Real>() -> T {
    let two_pi = real::<T>(2.0) * T::PI();
    two_pi * two_pi
}

/// Spectral pairing `(Λ^s a, b)` over derivative wavenumbers.
fn lambda_pairing<T: Real>(grid: &Grid<T>, a: &SpectralScalar<T>, b: &SpectralScalar<T>, s: T) -> T {
    let mut acc = T::zero();
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        if m == T::zero() {
            continue;
        }
        let x = a.coeffs()[idx];
        let y = b.coeffs()[idx];
        acc += pow_alpha(m, s) * (x.re * y.re + x.im * y.im);
    }
    acc * parseval()
}

/// Budget of `‖q‖²_{L²}`: dissipation `2(Λ^α q', q)` (plus the eps
/// viscosity) against the potential source, the realized Itô correction and
/// the martingale term.
pub struct ChargeL2Budget<T: Real> {
    delta_phi: SpectralScalar<T>,
    cumulative: T,
}

impl<T: Real> ChargeL2Budget<T> {
    pub fn new(grid: &Grid<T>, bank: &ForcingBank<T>, params: &SimParams<T>) -> Result<Self> {
        let delta_phi = if params.zero_potential {
            SpectralScalar::zeros(grid.n())
        } else {
            ops::laplacian_scalar(grid, bank.phi())?
        };
        Ok(Self {
            delta_phi,
            cumulative: T::zero(),
        })
    }

    pub fn step(
        &mut self,
        grid: &Grid<T>,
        prev: &SimState<T>,
        next: &SimState<T>,
        noise: &SpectralScalar<T>,
        params: &SimParams<T>,
    ) -> BudgetRecord<T> {
        let dt = params.dt;
        let two = real::<T>(2.0);
        let half = real::<T>(0.5);
        let mut q_mid = prev.q.clone();
        q_mid.axpy(T::one(), &next.q);
        q_mid.scale(half);

        let d_energy = l2_inner(&next.q, &next.q) - l2_inner(&prev.q, &prev.q);
        let dissipation = two * dt * lambda_pairing(grid, &next.q, &q_mid, params.alpha);
        let viscous = two * dt * params.eps * lambda_pairing(grid, &next.q, &q_mid, two);
        let lhs = d_energy + dissipation + viscous;

        let source = two * dt * l2_inner(&self.delta_phi, &q_mid);
        let ito = l2_inner(noise, noise);
        let martingale = two * l2_inner(noise, &prev.q);
        let rhs = source + ito + martingale;

        let residual = lhs - rhs;
        self.cumulative += residual;
        BudgetRecord {
            t: next.t,
            lhs,
            rhs,
            residual,
            cumulative_residual: self.cumulative,
        }
    }

    pub fn cumulative(&self) -> T {
        self.cumulative
    }
}

/// L⁴ budget record together with the nonlinear Poincaré ratio
/// `(Λ^α q, q³)/‖q‖⁴_{L⁴}` of the new state (`None` on the zero state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L4BudgetRecord<T> {
    pub record: BudgetRecord<T>,
    pub poincare_ratio: Option<T>,
}

/// Budget of `‖q‖⁴_{L⁴}`, evaluated entirely in physical-space quadrature.
pub struct ChargeL4Budget<T: Real> {
    delta_phi_phys: Vec<T>,
    cumulative: T,
}

impl<T: Real> ChargeL4Budget<T> {
    pub fn new(grid: &Grid<T>, bank: &ForcingBank<T>, params: &SimParams<T>) -> Result<Self> {
        let delta_phi_phys = if params.zero_potential {
            vec![T::zero(); grid.len()]
        } else {
            ops::laplacian_scalar(grid, bank.phi())?.to_physical(grid)?
        };
        Ok(Self {
            delta_phi_phys,
            cumulative: T::zero(),
        })
    }

    pub fn step(
        &mut self,
        grid: &Grid<T>,
        prev: &SimState<T>,
        next: &SimState<T>,
        noise: &SpectralScalar<T>,
        params: &SimParams<T>,
    ) -> Result<L4BudgetRecord<T>> {
        let dt = params.dt;
        let four = real::<T>(4.0);
        let six = real::<T>(6.0);

        let qp = prev.q.to_physical(grid)?;
        let qn = next.q.to_physical(grid)?;
        let np = noise.to_physical(grid)?;
        let q3: Vec<T> = qp.iter().map(|&v| v * v * v).collect();
        // symmetric cubic: a⁴ - b⁴ = (a - b)(a³ + a²b + ab² + b³)
        let quarter = real::<T>(0.25);
        let s3: Vec<T> = qn
            .iter()
            .zip(&qp)
            .map(|(&a, &b)| (a * a * a + a * a * b + a * b * b + b * b * b) * quarter)
            .collect();

        let lam_qn = ops::fractional_laplacian(grid, &next.q, params.alpha)?.to_physical(grid)?;
        let mut diss = four * dt * quad_inner(grid, &lam_qn, &s3);
        if params.eps > T::zero() {
            let mut neg_lap = ops::laplacian_scalar(grid, &next.q)?;
            neg_lap.scale(-T::one());
            let neg_lap = neg_lap.to_physical(grid)?;
            diss += four * dt * params.eps * quad_inner(grid, &neg_lap, &s3);
        }

        let w = grid.quad_weight();
        let d_energy = qn
            .iter()
            .zip(&qp)
            .map(|(&a, &b)| a * a * a * a - b * b * b * b)
            .sum::<T>()
            * w;
        let lhs = d_energy + diss;

        let source = four * dt * quad_inner(grid, &self.delta_phi_phys, &s3);
        // realized quadratic variation of x ↦ x⁴ along this step's noise
        let ito = qp
            .iter()
            .zip(&np)
            .map(|(&q, &n)| six * q * q * n * n + four * q * n * n * n + n * n * n * n)
            .sum::<T>()
            * w;
        let martingale = four * quad_inner(grid, &np, &q3);
        let rhs = source + ito + martingale;

        let residual = lhs - rhs;
        self.cumulative += residual;

        let l4 = qn.iter().map(|&v| v * v * v * v).sum::<T>() * w;
        let poincare_ratio = if l4 > T::zero() {
            let qn3: Vec<T> = qn.iter().map(|&v| v * v * v).collect();
            Some(quad_inner(grid, &lam_qn, &qn3) / l4)
        } else {
            None
        };

        Ok(L4BudgetRecord {
            record: BudgetRecord {
                t: next.t,
                lhs,
                rhs,
                residual,
                cumulative_residual: self.cumulative,
            },
            poincare_ratio,
        })
    }

    pub fn cumulative(&self) -> T {
        self.cumulative
    }
}

/// H¹ velocity budget record with the drivers of the corresponding
/// differential inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H1BudgetRecord<T> {
    pub record: BudgetRecord<T>,
    pub q_l4_pow4: T,
    pub f_sq: T,
    pub grad_g_sq: T,
}

/// Budget of `‖∇u‖²`: dissipation `2(Δu', Δu)` against the electrical and
/// body forces, the realized Itô correction and the martingale term, all in
/// the H¹ pairing. The 2D identity `(u·∇u, Δu) = 0` is used exactly as in
/// the continuum balance; it holds to roundoff for dealiased fields.
pub struct VelocityH1Budget<T: Real> {
    grad_phi: Option<SpectralVector<T>>,
    body_force: SpectralVector<T>,
    f_sq: T,
    grad_g_sq: T,
    cumulative: T,
}

impl<T: Real> VelocityH1Budget<T> {
    pub fn new(grid: &Grid<T>, bank: &ForcingBank<T>, params: &SimParams<T>) -> Result<Self> {
        let grad_phi = if params.zero_potential || !bank.has_potential() {
            None
        } else {
            Some(ops::gradient(grid, bank.phi())?)
        };
        let f_sq = l2_sq_vec(bank.body_force());
        let grad_g_sq = bank
            .g()
            .iter()
            .map(|gl| sobolev_sq_vec(grid, gl, T::one()))
            .sum();
        Ok(Self {
            grad_phi,
            body_force: bank.body_force().clone(),
            f_sq,
            grad_g_sq,
            cumulative: T::zero(),
        })
    }

    pub fn step(
        &mut self,
        grid: &Grid<T>,
        prev: &SimState<T>,
        next: &SimState<T>,
        noise: &SpectralVector<T>,
        params: &SimParams<T>,
    ) -> Result<H1BudgetRecord<T>> {
        let dt = params.dt;
        let two = real::<T>(2.0);
        let half = real::<T>(0.5);
        let mut u_mid = prev.u.clone();
        u_mid.axpy(T::one(), &next.u);
        u_mid.scale(half);

        let d_energy = h1_inner_vec(grid, &next.u, &next.u) - h1_inner_vec(grid, &prev.u, &prev.u);
        let dissipation = two * dt * h2_inner_vec(grid, &next.u, &u_mid);
        let lhs = d_energy + dissipation;

        // f + qE recomputed at the previous state, exactly as the stepper
        // assembled it
        let mut force = self.body_force.clone();
        if !params.linear {
            let mut e = ops::riesz(grid, &prev.q)?;
            if let Some(gp) = &self.grad_phi {
                e.axpy(T::one(), gp);
            }
            e.scale(-T::one());
            force.axpy(T::one(), &ops::scalar_times_vector(grid, &prev.q, &e)?);
        }
        let source = two * dt * h1_inner_vec(grid, &force, &u_mid);
        let ito = h1_inner_vec(grid, noise, noise);
        let martingale = two * h1_inner_vec(grid, noise, &prev.u);
        let rhs = source + ito + martingale;

        let residual = lhs - rhs;
        self.cumulative += residual;
        Ok(H1BudgetRecord {
            record: BudgetRecord {
                t: next.t,
                lhs,
                rhs,
                residual,
                cumulative_residual: self.cumulative,
            },
            q_l4_pow4: l4_pow4(grid, &prev.q)?,
            f_sq: self.f_sq,
            grad_g_sq: self.grad_g_sq,
        })
    }

    pub fn cumulative(&self) -> T {
        self.cumulative
    }
}

/// Commutator ratio `‖[Λ^{-1/2}, v·∇]ρ‖ / (‖Δv‖‖ρ‖)`.
///
/// Returns `None` when either denominator vanishes.
pub fn commutator_check<T: Real>(
    grid: &Grid<T>,
    v: &SpectralVector<T>,
    rho: &SpectralScalar<T>,
) -> Result<Option<T>> {
    if !v.div_free() {
        return Err(Error::InvariantViolation(
            "commutator_check requires a divergence-free velocity".into(),
        ));
    }
    if !rho.mean_zero() {
        return Err(Error::InvariantViolation(
            "commutator_check requires a mean-zero scalar".into(),
        ));
    }
    let delta_v_sq = sobolev_sq_vec(grid, v, real(2.0));
    let rho_sq = sobolev_sq(grid, rho, T::zero());
    if delta_v_sq <= T::zero() || rho_sq <= T::zero() {
        return Ok(None);
    }
    let half = real::<T>(0.5);
    let a = ops::lambda_pow(grid, &ops::advect_scalar(grid, v, rho)?, -half)?;
    let b = ops::advect_scalar(grid, v, &ops::lambda_pow(grid, rho, -half)?)?;
    let diff = a.minus(&b);
    let num = sobolev_sq(grid, &diff, T::zero()).sqrt();
    Ok(Some(num / (delta_v_sq.sqrt() * rho_sq.sqrt())))
}

/// Commutator ratios over a seeded corpus of random field pairs. The corpus
/// is band-limited to `|k_i| <= kmax`, so the same `(seed, kmax)` describes
/// the same functions at every resolution that resolves the band.
pub fn commutator_corpus<T: Real>(
    grid: &Grid<T>,
    n_pairs: usize,
    seed: u64,
    kmax: i32,
) -> Result<Vec<T>> {
    let mut ratios = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let v = synth::random_div_free_band(grid, seed.wrapping_add(2 * i as u64), 2.0, kmax);
        let rho = synth::random_scalar_band(grid, seed.wrapping_add(2 * i as u64 + 1), 2.0, kmax);
        if let Some(r) = commutator_check(grid, &v, &rho)? {
            ratios.push(r);
        }
    }
    Ok(ratios)
}

/// One sample of the pathwise continuity bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallTrace<T> {
    pub t: T,
    /// Bracketed integrand: `‖∇Φ‖²_∞ + ‖∇u₁‖² + ‖∇u₁‖ + ‖q₁‖²_{L⁴} +
    /// ‖q₁‖⁴_{L⁴} + ‖Δu₁‖²`.
    pub c_integrand: T,
    /// Running time integral of the integrand (without the constant).
    pub r_cum: T,
    /// `‖Λ^{-1/2}(q₁-q₂)‖² + ‖u₁-u₂‖²`.
    pub h_dist_sq: T,
    /// `exp(c0 · r_cum) · h_dist_sq(0)`.
    pub bound: T,
    pub violation: bool,
}

/// Evolves two states under one shared noise realization and traces the
/// coercive distance against its exponential envelope.
pub fn gronwall_continuity<T: Real>(
    grid: &Grid<T>,
    state1: SimState<T>,
    state2: SimState<T>,
    bank: &ForcingBank<T>,
    driver: &mut WienerDriver,
    params: &SimParams<T>,
    c0: T,
) -> Result<Vec<GronwallTrace<T>>> {
    params.validate()?;
    let h0 = script_h_distance_sq(grid, &state1.q, &state1.u, &state2.q, &state2.u);
    let grad_phi_linf_sq = if params.zero_potential || !bank.has_potential() {
        T::zero()
    } else {
        let (g1, g2) = ops::gradient(grid, bank.phi())?.to_physical(grid)?;
        g1.iter()
            .zip(&g2)
            .map(|(&a, &b)| a * a + b * b)
            .fold(T::zero(), T::max)
    };

    let n_steps = crate::dynamics::steps_to(state1.t, params.t_end, params.dt);
    let mut s1 = state1;
    let mut s2 = state2;
    let mut r_cum = T::zero();
    let mut traces = Vec::with_capacity(n_steps as usize);
    for _ in 0..n_steps {
        let grad_u1 = sobolev_sq_vec(grid, &s1.u, T::one());
        let delta_u1 = sobolev_sq_vec(grid, &s1.u, real(2.0));
        let l4 = l4_pow4(grid, &s1.q)?;
        let c_integrand = grad_phi_linf_sq + grad_u1 + grad_u1.sqrt() + l4.sqrt() + l4 + delta_u1;
        r_cum += c_integrand * params.dt;

        let inc = driver.sample_increment(params.dt)?;
        s1 = step_with_increment(grid, &s1, bank, &inc, params)?.state;
        s2 = step_with_increment(grid, &s2, bank, &inc, params)?.state;

        let h_dist_sq = script_h_distance_sq(grid, &s1.q, &s1.u, &s2.q, &s2.u);
        let bound = (c0 * r_cum).exp() * h0;
        traces.push(GronwallTrace {
            t: s1.t,
            c_integrand,
            r_cum,
            h_dist_sq,
            bound,
            violation: h_dist_sq > bound,
        });
    }
    Ok(traces)
}

/// Smallest constant that puts every traced distance under its envelope,
/// inferred from a pilot run.
pub fn required_c0<T: Real>(traces: &[GronwallTrace<T>], h0: T) -> T {
    let mut c0 = T::zero();
    if h0 <= T::zero() {
        return c0;
    }
    for tr in traces {
        if tr.r_cum > T::zero() && tr.h_dist_sq > h0 {
            c0 = c0.max((tr.h_dist_sq / h0).ln() / tr.r_cum);
        }
    }
    c0
}

/// Per-path running suprema and time integrals of the norms controlled by
/// the moment bounds, sampled into a series for growth-rate analysis.
#[derive(Debug, Clone)]
pub struct MomentTracker<T: Real> {
    pub sup_q_l2_sq: T,
    pub sup_q_l4_pow4: T,
    pub sup_u_h1_sq: T,
    pub int_q_h_half_sq: T,
    pub int_q_l4_pow4: T,
    pub int_u_h1_sq: T,
    pub int_u_h2_sq: T,
    pub int_q_h32_sq: T,
    samples: Vec<MomentSample<T>>,
    sample_every: usize,
    steps_seen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample<T> {
    pub t: T,
    pub integrals: [T; 5],
}

/// Names of the tracked integrals, in `MomentSample::integrals` order.
pub const MOMENT_INTEGRAL_NAMES: [&str; 5] = [
    "int_lambda_half_q_sq",
    "int_q_l4_pow4",
    "int_grad_u_sq",
    "int_delta_u_sq",
    "int_lambda_three_half_q_sq",
];

impl<T: Real> MomentTracker<T> {
    pub fn new(sample_every: usize) -> Self {
        let z = T::zero();
        Self {
            sup_q_l2_sq: z,
            sup_q_l4_pow4: z,
            sup_u_h1_sq: z,
            int_q_h_half_sq: z,
            int_q_l4_pow4: z,
            int_u_h1_sq: z,
            int_u_h2_sq: z,
            int_q_h32_sq: z,
            samples: Vec::new(),
            sample_every: sample_every.max(1),
            steps_seen: 0,
        }
    }

    pub fn update(&mut self, grid: &Grid<T>, state: &SimState<T>, dt: T) -> Result<()> {
        let q_l2 = sobolev_sq(grid, &state.q, T::zero());
        let q_l4 = l4_pow4(grid, &state.q)?;
        let u_h1 = sobolev_sq_vec(grid, &state.u, T::one());
        self.sup_q_l2_sq = self.sup_q_l2_sq.max(q_l2);
        self.sup_q_l4_pow4 = self.sup_q_l4_pow4.max(q_l4);
        self.sup_u_h1_sq = self.sup_u_h1_sq.max(u_h1);

        self.int_q_h_half_sq += sobolev_sq(grid, &state.q, real(0.5)) * dt;
        self.int_q_l4_pow4 += q_l4 * dt;
        self.int_u_h1_sq += u_h1 * dt;
        self.int_u_h2_sq += sobolev_sq_vec(grid, &state.u, real(2.0)) * dt;
        self.int_q_h32_sq += sobolev_sq(grid, &state.q, real(1.5)) * dt;

        self.steps_seen += 1;
        if self.steps_seen.is_multiple_of(self.sample_every) {
            self.samples.push(MomentSample {
                t: state.t,
                integrals: [
                    self.int_q_h_half_sq,
                    self.int_q_l4_pow4,
                    self.int_u_h1_sq,
                    self.int_u_h2_sq,
                    self.int_q_h32_sq,
                ],
            });
        }
        Ok(())
    }

    pub fn samples(&self) -> &[MomentSample<T>] {
        &self.samples
    }
}

#[derive(Debug, Clone)]
pub struct MomentQuantityReport<T> {
    pub name: &'static str,
    pub final_mean: T,
    pub slope_second_half: T,
    pub slope_q3: T,
    pub slope_q4: T,
    /// `|slope_q4 - slope_q3| / max(|slope_q3|, floor)`.
    pub slope_drift_rel: T,
}

#[derive(Debug, Clone)]
pub struct MomentReport<T> {
    pub quantities: Vec<MomentQuantityReport<T>>,
}

fn least_squares_slope<T: Real>(pts: &[(T, T)]) -> T {
    if pts.len() < 2 {
        return T::zero();
    }
    let n = real::<T>(pts.len() as f64);
    let mut st = T::zero();
    let mut sy = T::zero();
    for &(t, y) in pts {
        st += t;
        sy += y;
    }
    let (mt, my) = (st / n, sy / n);
    let mut num = T::zero();
    let mut den = T::zero();
    for &(t, y) in pts {
        num += (t - mt) * (y - my);
        den += (t - mt) * (t - mt);
    }
    if den == T::zero() {
        T::zero()
    } else {
        num / den
    }
}

/// Ensemble growth report: mean final integrals and least-squares slopes of
/// the ensemble-mean series over the second half of the run and its two
/// quarters. At-most-linear growth shows up as agreeing quarter slopes.
pub fn moment_report<T: Real>(trackers: &[MomentTracker<T>]) -> Result<MomentReport<T>> {
    let first = trackers
        .first()
        .ok_or_else(|| Error::InvalidParameter("moment_report needs at least one tracker".into()))?;
    let n_samples = first.samples.len();
    if trackers.iter().any(|tr| tr.samples.len() != n_samples) {
        return Err(Error::InvalidParameter(
            "moment_report requires synchronized trackers".into(),
        ));
    }
    if n_samples < 8 {
        return Err(Error::InvalidParameter(
            "moment_report needs at least 8 samples per tracker".into(),
        ));
    }
    let paths = real::<T>(trackers.len() as f64);
    let mut quantities = Vec::with_capacity(5);
    for (qi, name) in MOMENT_INTEGRAL_NAMES.iter().enumerate() {
        let series: Vec<(T, T)> = (0..n_samples)
            .map(|si| {
                let t = first.samples[si].t;
                let mean = trackers
                    .iter()
                    .map(|tr| tr.samples[si].integrals[qi])
                    .sum::<T>()
                    / paths;
                (t, mean)
            })
            .collect();
        let half = n_samples / 2;
        let q3_end = half + (n_samples - half) / 2;
        let slope_second_half = least_squares_slope(&series[half..]);
        let slope_q3 = least_squares_slope(&series[half..q3_end]);
        let slope_q4 = least_squares_slope(&series[q3_end..]);
        let floor = real::<T>(1e-30);
        let slope_drift_rel = (slope_q4 - slope_q3).abs() / slope_q3.abs().max(floor);
        quantities.push(MomentQuantityReport {
            name,
            final_mean: series[n_samples - 1].1,
            slope_second_half,
            slope_q3,
            slope_q4,
            slope_drift_rel,
        });
    }
    Ok(MomentReport { quantities })
}
