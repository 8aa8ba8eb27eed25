//! Drift assembly and time stepping.
//!
//! The integrator is a drift-implicit Euler-Maruyama scheme: the dissipative
//! multipliers `Λ^α + eps·Λ²` (charge) and `-Δ` (velocity) are solved
//! implicitly per mode, the nonlinear drift is explicit, and the additive
//! noise enters before the implicit solve. Pressure never appears; the
//! velocity drift is Leray-projected instead.

use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::forcing::{noise_fields, ForcingBank, NoiseIncrement, WienerDriver};
use crate::grid::{pow_alpha, Grid};
use crate::ops;
use crate::scalar::{real, Real};

/// Physical and discretization parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams<T> {
    /// Dissipation order of the charge equation (1 = critical, >1 subcritical).
    pub alpha: T,
    /// Mollifier width; doubles as the extra `-eps Δq` viscosity.
    pub eps: T,
    pub dt: T,
    pub t_end: T,
    /// Drops the potential terms (the zero-potential system).
    pub zero_potential: bool,
    /// Drops the advection and electrical coupling terms, leaving the
    /// decoupled linear system the Ornstein-Uhlenbeck oracles describe.
    pub linear: bool,
}

impl<T: Real> SimParams<T> {
    pub fn new(alpha: T, eps: T, dt: T, t_end: T) -> Self {
        Self {
            alpha,
            eps,
            dt,
            t_end,
            zero_potential: false,
            linear: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha < T::one() {
            return Err(Error::InvalidParameter(format!(
                "dissipation order must be at least 1, got {:?}",
                self.alpha
            )));
        }
        if self.eps < T::zero() {
            return Err(Error::InvalidParameter("mollifier width must be nonnegative".into()));
        }
        if self.dt <= T::zero() || self.dt > real(0.1) {
            return Err(Error::InvalidParameter(format!(
                "dt must lie in (0, 0.1] for drift accuracy, got {:?}",
                self.dt
            )));
        }
        if self.t_end < T::zero() {
            return Err(Error::InvalidParameter("t_end must be nonnegative".into()));
        }
        Ok(())
    }
}

/// One snapshot of the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T: Real> {
    pub q: SpectralScalar<T>,
    pub u: SpectralVector<T>,
    pub t: T,
}

impl<T: Real> SimState<T> {
    pub fn new(grid: &Grid<T>, q: SpectralScalar<T>, u: SpectralVector<T>, t: T) -> Result<Self> {
        q.check_grid(grid)?;
        u.comp1().check_grid(grid)?;
        if !q.mean_zero() {
            return Err(Error::InvariantViolation("charge density must be mean-zero".into()));
        }
        if !u.div_free() {
            return Err(Error::InvariantViolation("velocity must be divergence-free".into()));
        }
        Ok(Self { q, u, t })
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self {
            q: SpectralScalar::zeros(grid.n()),
            u: SpectralVector::zeros(grid.n()),
            t: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.u.is_finite() && self.t.is_finite()
    }
}

/// Explicit (non-stiff) part of the drift; the dissipative multipliers are
/// handled implicitly by the stepper and never materialize here.
#[derive(Debug, Clone)]
pub struct DriftEval<T: Real> {
    /// `-u·∇q + ΔΦ`, mean-zero.
    pub fq_nonlin: SpectralScalar<T>,
    /// `P(-u·∇u + qE + f)` with `E = -∇Φ - RQ`, divergence-free.
    pub fu_nonlin: SpectralVector<T>,
}

pub fn drift<T: Real>(
    grid: &Grid<T>,
    state: &SimState<T>,
    bank: &ForcingBank<T>,
    params: &SimParams<T>,
) -> Result<DriftEval<T>> {
    let with_potential = !params.zero_potential && bank.has_potential();

    let mut fq = SpectralScalar::zeros(grid.n());
    let mut force = SpectralVector::zeros(grid.n());

    if !params.linear {
        let (u1, u2) = ops::masked_physical_vec(grid, &state.u)?;
        let adv_q = ops::advect_scalar_with(grid, &u1, &u2, &state.q)?;
        fq.axpy(-T::one(), &adv_q);

        let adv_u = ops::advect_vector_with(grid, &u1, &u2, &state.u)?;
        force.axpy(-T::one(), &adv_u);

        // electric field E = -∇Φ - ∇Λ⁻¹q; the velocity is forced by qE
        let mut e = ops::riesz(grid, &state.q)?;
        if with_potential {
            e.axpy(T::one(), &ops::gradient(grid, bank.phi())?);
        }
        e.scale(-T::one());
        let qe = ops::scalar_times_vector(grid, &state.q, &e)?;
        force.axpy(T::one(), &qe);
    }

    if with_potential {
        fq.axpy(T::one(), &ops::laplacian_scalar(grid, bank.phi())?);
    }
    force.axpy(T::one(), bank.body_force());

    let fu = ops::leray_project(grid, &force)?;
    fq.pin_mean_zero();
    Ok(DriftEval {
        fq_nonlin: fq,
        fu_nonlin: fu,
    })
}

/// A completed step together with the noise fields that entered it (the
/// budget diagnostics need them).
#[derive(Debug, Clone)]
pub struct StepOutput<T: Real> {
    pub state: SimState<T>,
    pub noise_q: SpectralScalar<T>,
    pub noise_u: SpectralVector<T>,
}

/// Advances one step with an externally supplied increment.
pub fn step_with_increment<T: Real>(
    grid: &Grid<T>,
    state: &SimState<T>,
    bank: &ForcingBank<T>,
    inc: &NoiseIncrement<T>,
    params: &SimParams<T>,
) -> Result<StepOutput<T>> {
    let dt = inc.dt;
    let d = drift(grid, state, bank, params)?;
    let (mut nq, mut nu) = noise_fields(grid, bank, inc)?;
    if params.eps > T::zero() {
        nq = ops::mollify_scalar(grid, &nq, params.eps)?;
        nu = ops::mollify_vector(grid, &nu, params.eps)?;
    }

    let mut q_next = SpectralScalar::zeros(grid.n());
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        let denom = T::one() + dt * (pow_alpha(m, params.alpha) + params.eps * m * m);
        let rhs = state.q.coeffs()[idx] + d.fq_nonlin.coeffs()[idx] * dt + nq.coeffs()[idx];
        q_next.coeffs_mut()[idx] = rhs / denom;
    }
    q_next.pin_mean_zero();

    let mut u_next = SpectralVector::zeros(grid.n());
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        let denom = T::one() + dt * m * m;
        let rhs1 = state.u.comp1().coeffs()[idx] + d.fu_nonlin.comp1().coeffs()[idx] * dt
            + nu.comp1().coeffs()[idx];
        let rhs2 = state.u.comp2().coeffs()[idx] + d.fu_nonlin.comp2().coeffs()[idx] * dt
            + nu.comp2().coeffs()[idx];
        u_next.comp1.coeffs_mut()[idx] = rhs1 / denom;
        u_next.comp2.coeffs_mut()[idx] = rhs2 / denom;
    }
    // roundoff hygiene: keep the div-free subspace exact
    let u_next = ops::leray_project(grid, &u_next)?;

    let t_next = state.t + dt;
    let next = SimState {
        q: q_next,
        u: u_next,
        t: t_next,
    };
    if !next.is_finite() {
        return Err(Error::BlowUp {
            t: t_next.to_f64().unwrap_or(f64::NAN),
            field: if next.q.is_finite() { "velocity" } else { "charge" },
        });
    }
    Ok(StepOutput {
        state: next,
        noise_q: nq,
        noise_u: nu,
    })
}

/// Advances one step, drawing the increment from the driver.
pub fn step<T: Real>(
    grid: &Grid<T>,
    state: &SimState<T>,
    bank: &ForcingBank<T>,
    driver: &mut WienerDriver,
    params: &SimParams<T>,
) -> Result<SimState<T>> {
    let inc = driver.sample_increment(params.dt)?;
    Ok(step_with_increment(grid, state, bank, &inc, params)?.state)
}

/// Number of steps to reach `t_end` from `t0` (first time at or past it).
pub fn steps_to<T: Real>(t0: T, t_end: T, dt: T) -> u64 {
    if t_end <= t0 {
        return 0;
    }
    let span = (t_end - t0) / dt;
    let span = span.to_f64().unwrap_or(0.0);
    (span - 1e-9).ceil().max(0.0) as u64
}

/// Runs until the first `t >= t_end`, invoking every observer after each
/// step. Observers receive the state read-only and must not assume any
/// particular call ordering beyond step order.
pub fn run<T: Real>(
    grid: &Grid<T>,
    state0: SimState<T>,
    bank: &ForcingBank<T>,
    driver: &mut WienerDriver,
    params: &SimParams<T>,
    observers: &mut [&mut dyn FnMut(&SimState<T>)],
) -> Result<SimState<T>> {
    params.validate()?;
    let n_steps = steps_to(state0.t, params.t_end, params.dt);
    let mut state = state0;
    for _ in 0..n_steps {
        state = step(grid, &state, bank, driver, params)?;
        for obs in observers.iter_mut() {
            obs(&state);
        }
    }
    Ok(state)
}
