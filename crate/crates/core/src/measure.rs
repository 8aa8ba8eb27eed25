//! Invariant-measure machinery: time-averaged (Krylov-Bogoliubov) measures,
//! Monte Carlo estimates of the Markov transition kernels, Feller
//! continuity probes, tightness scans, and exact Ornstein-Uhlenbeck oracles
//! for the linearized system.

use rayon::prelude::*;

use crate::dynamics::{run, SimParams, SimState};
use crate::error::{Error, Result};
use crate::forcing::{ForcingBank, WienerDriver};
use crate::grid::Grid;
use crate::norms::{l2_sq_vec, norms, sobolev_sq, NormReport};
use crate::scalar::{real, Real};

/// Observable kinds, all inside the admissible growth class
/// `|h(q, u)| <= C (1 + ‖Λ^{-1/2}q‖² + ‖u‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableKind<T> {
    /// `min(‖Λ^{-1/2}q‖² + ‖u‖², clip)`.
    ScriptHClipped { clip: T },
    /// `Re q̂(k)`.
    ModeRe { k1: i32, k2: i32 },
    /// `Im q̂(k)`.
    ModeIm { k1: i32, k2: i32 },
    /// `tanh(Re q̂(k))`, a bounded cylinder function.
    TanhMode { k1: i32, k2: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable<T> {
    pub name: String,
    pub kind: ObservableKind<T>,
}

impl<T: Real> Observable<T> {
    pub fn script_h_clipped(clip: T) -> Self {
        Self {
            name: format!("script_h_clipped_{:?}", clip),
            kind: ObservableKind::ScriptHClipped { clip },
        }
    }

    pub fn mode_re(k1: i32, k2: i32) -> Self {
        Self {
            name: format!("mode_re_{k1}_{k2}"),
            kind: ObservableKind::ModeRe { k1, k2 },
        }
    }

    pub fn mode_im(k1: i32, k2: i32) -> Self {
        Self {
            name: format!("mode_im_{k1}_{k2}"),
            kind: ObservableKind::ModeIm { k1, k2 },
        }
    }

    pub fn tanh_mode(k1: i32, k2: i32) -> Self {
        Self {
            name: format!("tanh_mode_{k1}_{k2}"),
            kind: ObservableKind::TanhMode { k1, k2 },
        }
    }

    pub fn eval(&self, grid: &Grid<T>, state: &SimState<T>) -> T {
        match self.kind {
            ObservableKind::ScriptHClipped { clip } => {
                let h = sobolev_sq(grid, &state.q, -real::<T>(0.5)) + l2_sq_vec(&state.u);
                h.min(clip)
            }
            ObservableKind::ModeRe { k1, k2 } => state.q.coeff(grid, k1, k2).re,
            ObservableKind::ModeIm { k1, k2 } => state.q.coeff(grid, k1, k2).im,
            ObservableKind::TanhMode { k1, k2 } => state.q.coeff(grid, k1, k2).re.tanh(),
        }
    }

    /// The constant of the growth-class membership, `max(1, clip)`.
    pub fn growth_constant(&self) -> T {
        match self.kind {
            ObservableKind::ScriptHClipped { clip } => T::one().max(clip),
            _ => T::one(),
        }
    }

    /// Whether the observable is bounded (needed by the convergence flag).
    pub fn is_bounded(&self) -> bool {
        matches!(
            self.kind,
            ObservableKind::ScriptHClipped { .. } | ObservableKind::TanhMode { .. }
        )
    }
}

/// Running time average of an observable past a burn-in time.
///
/// The mean is accumulated incrementally (`mean += (h - mean)·dt/elapsed`),
/// which makes the average of a constant observable exactly that constant.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAverage<T: Real> {
    pub observable: Observable<T>,
    pub t_burn: T,
    mean: T,
    elapsed: T,
}

impl<T: Real> TimeAverage<T> {
    pub fn new(observable: Observable<T>, t_burn: T) -> Self {
        Self {
            observable,
            t_burn,
            mean: T::zero(),
            elapsed: T::zero(),
        }
    }

    /// Folds one post-step state into the average.
    pub fn accumulate(&mut self, grid: &Grid<T>, state: &SimState<T>, dt: T) {
        if state.t < self.t_burn {
            return;
        }
        let h = self.observable.eval(grid, state);
        self.elapsed += dt;
        self.mean += (h - self.mean) * (dt / self.elapsed);
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn elapsed(&self) -> T {
        self.elapsed
    }

    pub fn integral(&self) -> T {
        self.mean * self.elapsed
    }
}

/// Gate for invariant-measure runs: at critical dissipation the averaging
/// argument needs a vanishing potential.
pub fn check_invariant_measure_regime<T: Real>(
    bank: &ForcingBank<T>,
    params: &SimParams<T>,
) -> Result<()> {
    let critical = params.alpha == T::one();
    if critical && !params.zero_potential && bank.has_potential() {
        return Err(Error::InvalidParameter(
            "invariant-measure estimation at critical dissipation requires the zero-potential mode"
                .into(),
        ));
    }
    Ok(())
}

/// Exact stationary statistics of one linear (Ornstein-Uhlenbeck) mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuVariance<T> {
    /// Continuum stationary variance `σ²/(2λ)` of the complex coefficient.
    pub continuum: T,
    /// Relaxation rate λ of the mode.
    pub rate: T,
}

impl<T: Real> OuVariance<T> {
    /// Stationary variance of the drift-implicit scheme at step size dt:
    /// the AR(1) fixed point `σ²/(2λ) · 1/(1 + dt·λ/2)`.
    pub fn discrete(&self, dt: T) -> T {
        self.continuum / (T::one() + dt * self.rate / real(2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissipation {
    /// Charge equation, rate `|k|^α`.
    Fractional,
    /// Velocity equation, rate `|k|²`.
    Stokes,
}

/// Stationary variance of a single Fourier mode of the linearized system:
/// `Σ_l |ĝ̃_l(k)|² / (2|k|^α)` for the charge, `Σ_l |ĝ_l(k)|² / (2|k|²)`
/// for the velocity (both components summed).
pub fn ou_mode_variance_oracle<T: Real>(
    grid: &Grid<T>,
    k: (i32, i32),
    alpha: T,
    dissip: Dissipation,
    bank: &ForcingBank<T>,
) -> Result<OuVariance<T>> {
    if k == (0, 0) {
        return Err(Error::InvalidParameter(
            "the zero mode has no stationary variance".into(),
        ));
    }
    let ksq: T = real((k.0 * k.0 + k.1 * k.1) as f64);
    let rate = match dissip {
        Dissipation::Fractional => ksq.sqrt().powf(alpha),
        Dissipation::Stokes => ksq,
    };
    let sigma_sq: T = match dissip {
        Dissipation::Fractional => bank
            .g_tilde()
            .iter()
            .map(|gt| gt.coeff(grid, k.0, k.1).norm_sqr())
            .sum(),
        Dissipation::Stokes => bank
            .g()
            .iter()
            .map(|gl| {
                gl.comp1().coeff(grid, k.0, k.1).norm_sqr()
                    + gl.comp2().coeff(grid, k.0, k.1).norm_sqr()
            })
            .sum(),
    };
    Ok(OuVariance {
        continuum: sigma_sq / (real::<T>(2.0) * rate),
        rate,
    })
}

/// Gaps between time averages at nested horizons T, 2T, 4T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KbReport<T> {
    pub gap_first: T,
    pub gap_second: T,
    /// Set for bounded observables when the second gap is at most 0.7 of
    /// the first.
    pub converged: bool,
}

/// Compares the same observable averaged to horizons T, 2T and 4T.
pub fn kb_convergence<T: Real>(
    avg_t: &TimeAverage<T>,
    avg_2t: &TimeAverage<T>,
    avg_4t: &TimeAverage<T>,
) -> Result<KbReport<T>> {
    if avg_t.observable.name != avg_2t.observable.name
        || avg_t.observable.name != avg_4t.observable.name
    {
        return Err(Error::InvalidParameter(
            "kb_convergence needs averages of one observable".into(),
        ));
    }
    let gap_first = (avg_2t.mean() - avg_t.mean()).abs();
    let gap_second = (avg_4t.mean() - avg_2t.mean()).abs();
    let converged = avg_t.observable.is_bounded() && gap_second <= real::<T>(0.7) * gap_first;
    Ok(KbReport {
        gap_first,
        gap_second,
        converged,
    })
}

/// Runs one path to 4T and snapshots the running average at T, 2T and 4T.
pub fn kb_horizons<T: Real>(
    grid: &Grid<T>,
    state0: SimState<T>,
    bank: &ForcingBank<T>,
    driver: &mut WienerDriver,
    params: &SimParams<T>,
    observable: &Observable<T>,
    t_burn: T,
    t_base: T,
) -> Result<[TimeAverage<T>; 3]> {
    check_invariant_measure_regime(bank, params)?;
    if t_base <= t_burn {
        return Err(Error::InvalidParameter(
            "the first horizon must exceed the burn-in".into(),
        ));
    }
    let mut p = *params;
    p.t_end = real::<T>(4.0) * t_base;
    let mut avg = TimeAverage::new(observable.clone(), t_burn);
    let mut snapshots: Vec<TimeAverage<T>> = Vec::new();
    let two: T = real(2.0);
    {
        let mut next_horizon = t_base;
        let mut observer = |state: &SimState<T>| {
            avg.accumulate(grid, state, p.dt);
            while state.t >= next_horizon - p.dt * real(0.5) && snapshots.len() < 2 {
                snapshots.push(avg.clone());
                next_horizon *= two;
            }
        };
        run(grid, state0, bank, driver, &p, &mut [&mut observer])?;
    }
    if snapshots.len() != 2 {
        return Err(Error::InvalidParameter(
            "horizons not reached; check t_base against dt".into(),
        ));
    }
    let avg_2t = snapshots.pop().expect("two snapshots");
    let avg_t = snapshots.pop().expect("one snapshot");
    Ok([avg_t, avg_2t, avg])
}

/// Monte Carlo estimate of a transition kernel probability with a Wilson
/// 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEstimate<T> {
    pub probability: T,
    pub ci_low: T,
    pub ci_high: T,
    pub hits: usize,
    pub paths: usize,
}

/// `P_t(q0, u0, A) = P((q(t), u(t)) ∈ A)` by independent paths; the event is
/// a predicate on the final state's norms. Deterministic in the master seed
/// regardless of thread schedule.
pub fn transition_kernel_mc<T, F>(
    grid: &Grid<T>,
    state0: &SimState<T>,
    t: T,
    event: F,
    n_paths: usize,
    bank: &ForcingBank<T>,
    params: &SimParams<T>,
    master_seed: u64,
) -> Result<KernelEstimate<T>>
where
    T: Real,
    F: Fn(&NormReport<T>) -> bool + Sync,
{
    if n_paths < 2 {
        return Err(Error::InvalidParameter(
            "kernel estimation needs at least 2 paths".into(),
        ));
    }
    let mut p = *params;
    p.t_end = state0.t + t;
    let outcomes: Vec<Result<bool>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path_id| {
            let mut driver = WienerDriver::new(master_seed, path_id, bank.n_noise());
            let end = run(grid, state0.clone(), bank, &mut driver, &p, &mut [])?;
            Ok(event(&norms(grid, &end.q, &end.u)?))
        })
        .collect();
    let mut hits = 0usize;
    for o in outcomes {
        if o? {
            hits += 1;
        }
    }
    let n = real::<T>(n_paths as f64);
    let phat = real::<T>(hits as f64) / n;
    let z: T = real(1.959963984540054);
    let z2 = z * z;
    let denom = T::one() + z2 / n;
    let center = (phat + z2 / (real::<T>(2.0) * n)) / denom;
    let half = z * (phat * (T::one() - phat) / n + z2 / (real::<T>(4.0) * n * n)).sqrt() / denom;
    Ok(KernelEstimate {
        probability: phat,
        ci_low: (center - half).max(T::zero()),
        ci_high: (center + half).min(T::one()),
        hits,
        paths: n_paths,
    })
}

/// One row of the Feller continuity table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FellerRow<T> {
    /// Coercive distance of the perturbed initial data from the base.
    pub h_distance: T,
    /// `|E h(perturbed) - E h(base)|` under common noise.
    pub mean_abs_diff: T,
    /// Monte Carlo standard error of the difference estimate.
    pub std_error: T,
}

/// Estimates `E h` differences for a family of initial data converging to a
/// base state, using common random numbers across the compared runs.
pub fn feller_probe<T: Real>(
    grid: &Grid<T>,
    base: &SimState<T>,
    perturbed: &[SimState<T>],
    observable: &Observable<T>,
    t: T,
    bank: &ForcingBank<T>,
    params: &SimParams<T>,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<FellerRow<T>>> {
    let mut p = *params;
    p.t_end = base.t + t;
    let mut rows = Vec::with_capacity(perturbed.len());
    for pert in perturbed {
        let h_distance =
            crate::norms::script_h_distance_sq(grid, &base.q, &base.u, &pert.q, &pert.u).sqrt();
        let diffs: Vec<Result<T>> = (0..n_paths as u64)
            .into_par_iter()
            .map(|path_id| {
                let mut d1 = WienerDriver::new(master_seed, path_id, bank.n_noise());
                let mut d2 = WienerDriver::new(master_seed, path_id, bank.n_noise());
                let end_base = run(grid, base.clone(), bank, &mut d1, &p, &mut [])?;
                let end_pert = run(grid, pert.clone(), bank, &mut d2, &p, &mut [])?;
                Ok(observable.eval(grid, &end_pert) - observable.eval(grid, &end_base))
            })
            .collect();
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        for d in diffs {
            let d = d?;
            sum += d;
            sum_sq += d * d;
        }
        let n = real::<T>(n_paths as f64);
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(T::zero());
        rows.push(FellerRow {
            h_distance,
            mean_abs_diff: mean.abs(),
            std_error: (var / n).sqrt(),
        });
    }
    Ok(rows)
}

/// Occupation statistics of the compact balls used by the tightness
/// argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessReport<T> {
    pub radius: T,
    /// Fraction of samples with `‖q‖²_{H^{3/2}} + ‖u‖²_{H²} <= radius²`.
    pub fraction_inside: T,
    /// Time average of `‖q‖²_{H^{3/2}} + ‖u‖²_{H²}`.
    pub time_avg_norm_sq: T,
}

/// Scans escape fractions of sampled states over a list of radii.
pub fn tightness_scan<T: Real>(
    samples: &[NormReport<T>],
    radii: &[T],
) -> Result<Vec<TightnessReport<T>>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("tightness_scan needs samples".into()));
    }
    let values: Vec<T> = samples
        .iter()
        .map(|r| r.q_h_three_half_sq + r.u_h2_sq)
        .collect();
    let n = real::<T>(values.len() as f64);
    let avg = values.iter().copied().sum::<T>() / n;
    Ok(radii
        .iter()
        .map(|&radius| {
            let inside = values.iter().filter(|&&v| v <= radius * radius).count();
            TightnessReport {
                radius,
                fraction_inside: real::<T>(inside as f64) / n,
                time_avg_norm_sq: avg,
            }
        })
        .collect())
}

/// Growth-class bound on a finished average: `|ν_T(h)|` against
/// `max(1, clip)·(1 + time-averaged script-H norm²)`.
pub fn growth_bound_holds<T: Real>(avg: &TimeAverage<T>, time_avg_script_h_sq: T) -> bool {
    avg.mean().abs() <= avg.observable.growth_constant() * (T::one() + time_avg_script_h_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{SpectralScalar, SpectralVector, TrigMode};
    use crate::ops::perp_gradient;

    fn grid() -> Grid<f64> {
        Grid::new(32).unwrap()
    }

    fn cosm(g: &Grid<f64>, k1: i32, k2: i32, amp: f64) -> SpectralScalar<f64> {
        SpectralScalar::from_modes(
            g,
            &[TrigMode {
                k1,
                k2,
                cos_amp: amp,
                sin_amp: 0.0,
            }],
        )
        .unwrap()
    }

    fn ou_bank(g: &Grid<f64>) -> ForcingBank<f64> {
        ForcingBank::new(
            g,
            SpectralScalar::zeros(32),
            SpectralVector::zeros(32),
            vec![cosm(g, 1, 0, 1.0)],
            vec![perp_gradient(g, &cosm(g, 0, 1, 1.0)).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn constant_observable_averages_exactly() {
        let g = grid();
        let q = cosm(&g, 1, 0, 1.0);
        let state = SimState::new(&g, q, SpectralVector::zeros(32), 1.0).unwrap();

        // clip at 0 makes the observable the constant 0
        let mut avg = TimeAverage::new(Observable::script_h_clipped(0.0), 0.0);
        // a fixed state makes any observable constant along the "path"
        let mut avg2 = TimeAverage::new(Observable::tanh_mode(1, 0), 0.0);
        let h = avg2.observable.eval(&g, &state);
        for _ in 0..1000 {
            avg.accumulate(&g, &state, 0.01);
            avg2.accumulate(&g, &state, 0.01);
        }
        assert_eq!(avg.mean(), 0.0);
        assert_eq!(avg2.mean(), h);
    }

    #[test]
    fn clipped_norm_observable_is_bounded_by_clip() {
        let g = grid();
        let obs = Observable::script_h_clipped(0.5);
        let state = SimState::new(&g, cosm(&g, 1, 0, 10.0), SpectralVector::zeros(32), 0.0).unwrap();
        assert!(obs.eval(&g, &state) <= 0.5);
    }

    #[test]
    fn burn_in_is_respected() {
        let g = grid();
        let mut avg = TimeAverage::new(Observable::mode_re(1, 0), 5.0);
        let state = SimState::new(&g, cosm(&g, 1, 0, 1.0), SpectralVector::zeros(32), 1.0).unwrap();
        avg.accumulate(&g, &state, 0.01);
        assert_eq!(avg.elapsed(), 0.0);
    }

    #[test]
    fn ou_oracle_closed_forms() {
        let g = grid();
        let bank = ou_bank(&g);
        // ĝ̃(1,0) = 1/2 -> variance (1/2)²/(2·1) = 1/8
        let v = ou_mode_variance_oracle(&g, (1, 0), 1.0, Dissipation::Fractional, &bank).unwrap();
        assert!((v.continuum - 0.125).abs() < 1e-15);
        assert!((v.discrete(0.01) - 0.125 / 1.005).abs() < 1e-15);
        // no forcing at (2, 0)
        let v = ou_mode_variance_oracle(&g, (2, 0), 1.0, Dissipation::Fractional, &bank).unwrap();
        assert_eq!(v.continuum, 0.0);
        // α = 2 at |k| = 2: rate 4
        let v = ou_mode_variance_oracle(&g, (2, 0), 2.0, Dissipation::Fractional, &bank).unwrap();
        assert_eq!(v.rate, 4.0);
        // velocity oracle at the forced mode (0, 1): ĝ = (1/2, 0)
        let v = ou_mode_variance_oracle(&g, (0, 1), 1.0, Dissipation::Stokes, &bank).unwrap();
        assert!((v.continuum - 0.125).abs() < 1e-15);
        assert!(ou_mode_variance_oracle(&g, (0, 0), 1.0, Dissipation::Fractional, &bank).is_err());
    }

    #[test]
    fn empirical_ou_mode_variance_matches_oracle() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 400.0);
        params.linear = true;
        params.zero_potential = true;
        let oracle =
            ou_mode_variance_oracle(&g, (1, 0), 1.0, Dissipation::Fractional, &bank).unwrap();
        let expect = oracle.discrete(params.dt);

        let mut driver = WienerDriver::new(31337, 0, bank.n_noise());
        let mut sum = 0.0;
        let mut count = 0u64;
        let mut observer = |state: &SimState<f64>| {
            if state.t > 10.0 {
                sum += state.q.coeff(&g, 1, 0).norm_sqr();
                count += 1;
            }
        };
        run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut [&mut observer]).unwrap();
        let empirical = sum / count as f64;
        let t_eff = 390.0;
        let se = expect * (2.0 / (oracle.rate * t_eff)).sqrt();
        assert!(
            (empirical - expect).abs() < 3.0 * se,
            "empirical {empirical} vs oracle {expect} (3σ = {:.3e})",
            3.0 * se
        );
    }

    #[test]
    fn kernel_estimates_trivial_events() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 1.0);
        params.linear = true;
        let s0 = SimState::zero(&g);
        let always = transition_kernel_mc(&g, &s0, 0.5, |_| true, 16, &bank, &params, 1).unwrap();
        assert_eq!(always.probability, 1.0);
        let never = transition_kernel_mc(&g, &s0, 0.5, |_| false, 16, &bank, &params, 1).unwrap();
        assert_eq!(never.probability, 0.0);
        assert!(always.ci_low > 0.7 && never.ci_high < 0.3);

        // nested events are monotone on the same paths
        let small =
            transition_kernel_mc(&g, &s0, 0.5, |r| r.q_l2_sq <= 0.05, 32, &bank, &params, 7)
                .unwrap();
        let large =
            transition_kernel_mc(&g, &s0, 0.5, |r| r.q_l2_sq <= 0.5, 32, &bank, &params, 7)
                .unwrap();
        assert!(small.probability <= large.probability);
    }

    #[test]
    fn kernel_symmetry_of_gaussian_mode() {
        // linear OU from zero data: Re q̂(1,0) is symmetric, so the event
        // {Re q̂ <= 0} has probability 1/2
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 2.0);
        params.linear = true;
        params.zero_potential = true;
        let mut hits = 0usize;
        let n_paths = 200u64;
        for path_id in 0..n_paths {
            let mut driver = WienerDriver::new(99, path_id, bank.n_noise());
            let end = run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut []).unwrap();
            if end.q.coeff(&g, 1, 0).re <= 0.0 {
                hits += 1;
            }
        }
        let phat = hits as f64 / n_paths as f64;
        assert!((phat - 0.5).abs() < 3.0 * 0.5 / (n_paths as f64).sqrt());
    }

    #[test]
    fn feller_zero_offset_gives_zero_difference() {
        let g = grid();
        let bank = ou_bank(&g);
        let params = SimParams::new(1.0, 0.0, 1e-2, 1.0);
        let base = SimState::zero(&g);
        let rows = feller_probe(
            &g,
            &base,
            std::slice::from_ref(&base),
            &Observable::tanh_mode(1, 0),
            0.5,
            &bank,
            &params,
            4,
            5,
        )
        .unwrap();
        assert_eq!(rows[0].h_distance, 0.0);
        assert_eq!(rows[0].mean_abs_diff, 0.0);
    }

    #[test]
    fn feller_difference_scales_linearly_for_the_linear_flow() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 1.0);
        params.linear = true;
        let base = SimState::zero(&g);
        let pert = |amp: f64| {
            SimState::new(&g, cosm(&g, 1, 0, amp), SpectralVector::zeros(32), 0.0).unwrap()
        };
        let rows = feller_probe(
            &g,
            &base,
            &[pert(1e-2), pert(1e-3)],
            &Observable::mode_re(1, 0),
            0.5,
            &bank,
            &params,
            2,
            5,
        )
        .unwrap();
        // linear flow: the difference is exactly linear in the offset
        let ratio = rows[0].mean_abs_diff / rows[1].mean_abs_diff;
        assert!((ratio - 10.0).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn tightness_scan_monotone_and_trivial_on_zero() {
        let zero = NormReport::<f64>::zero();
        let reports = tightness_scan(&[zero; 8], &[0.5, 1.0, 2.0]).unwrap();
        assert!(reports.iter().all(|r| r.fraction_inside == 1.0));
        assert_eq!(reports[0].time_avg_norm_sq, 0.0);

        let mut samples = Vec::new();
        for i in 0..10 {
            let mut r = NormReport::<f64>::zero();
            r.q_h_three_half_sq = i as f64;
            samples.push(r);
        }
        let reports = tightness_scan(&samples, &[1.0, 2.0, 3.0]).unwrap();
        assert!(reports
            .windows(2)
            .all(|w| w[0].fraction_inside <= w[1].fraction_inside));
    }

    #[test]
    fn measure_gate_rejects_critical_with_potential() {
        let g = grid();
        let bank = ForcingBank::new(
            &g,
            cosm(&g, 1, 0, 1.0),
            SpectralVector::zeros(32),
            vec![cosm(&g, 1, 0, 1.0)],
            vec![SpectralVector::zeros(32)],
        )
        .unwrap();
        let params = SimParams::new(1.0, 0.0, 1e-2, 1.0);
        assert!(check_invariant_measure_regime(&bank, &params).is_err());
        let mut ok = params;
        ok.zero_potential = true;
        assert!(check_invariant_measure_regime(&bank, &ok).is_ok());
        let mut subcritical = params;
        subcritical.alpha = 1.5;
        assert!(check_invariant_measure_regime(&bank, &subcritical).is_ok());
    }

    #[test]
    fn growth_bound_on_averages() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 20.0);
        params.linear = true;
        params.zero_potential = true;
        let mut avg = TimeAverage::new(Observable::script_h_clipped(100.0), 0.0);
        let mut avg_h = TimeAverage::new(Observable::script_h_clipped(f64::INFINITY), 0.0);
        let mut driver = WienerDriver::new(12, 0, bank.n_noise());
        let mut obs = |state: &SimState<f64>| {
            avg.accumulate(&g, state, params.dt);
            avg_h.accumulate(&g, state, params.dt);
        };
        run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut [&mut obs]).unwrap();
        assert!(growth_bound_holds(&avg, avg_h.mean()));
    }

    #[test]
    fn single_mode_average_of_ou_vanishes_within_band() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 200.0);
        params.linear = true;
        params.zero_potential = true;
        let mut avg = TimeAverage::new(Observable::mode_re(1, 0), 10.0);
        let mut driver = WienerDriver::new(2718, 0, bank.n_noise());
        let mut obs = |state: &SimState<f64>| avg.accumulate(&g, state, params.dt);
        run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut [&mut obs]).unwrap();
        let oracle =
            ou_mode_variance_oracle(&g, (1, 0), 1.0, Dissipation::Fractional, &bank).unwrap();
        let sigma = (2.0 * oracle.discrete(params.dt) / (oracle.rate * avg.elapsed())).sqrt();
        assert!(
            avg.mean().abs() <= 3.0 * sigma,
            "mean {:.3e} vs 3σ {:.3e}",
            avg.mean(),
            3.0 * sigma
        );
    }

    #[test]
    fn tightness_time_average_matches_weighted_oracle_sum() {
        // linear OU: the time-averaged ‖q‖²_{H^{3/2}} + ‖u‖²_{H²} is the
        // oracle variance sum weighted |k|³ (charge) and |k|⁴ (velocity),
        // with a factor 2 per conjugate mode pair
        let g: Grid<f64> = Grid::new(16).unwrap();
        let amp = 1.0;
        let bank = ForcingBank::new(
            &g,
            SpectralScalar::zeros(16),
            SpectralVector::zeros(16),
            vec![cosm(&g, 1, 0, amp), cosm(&g, 1, 1, amp)],
            vec![
                {
                    let c1 = cosm(&g, 0, 1, amp);
                    SpectralVector::from_components(&g, c1, SpectralScalar::zeros(16), true)
                        .unwrap()
                },
                {
                    let c2 = cosm(&g, 2, 0, amp);
                    SpectralVector::from_components(&g, SpectralScalar::zeros(16), c2, true)
                        .unwrap()
                },
            ],
        )
        .unwrap();
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 2000.0);
        params.linear = true;
        params.zero_potential = true;

        let mut samples: Vec<NormReport<f64>> = Vec::new();
        let mut driver = WienerDriver::new(31415, 0, bank.n_noise());
        let mut count = 0u64;
        let mut obs = |state: &SimState<f64>| {
            count += 1;
            if state.t > 20.0 && count.is_multiple_of(10) {
                samples.push(norms(&g, &state.q, &state.u).unwrap());
            }
        };
        run(&g, SimState::zero(&g), &bank, &mut driver, &params, &mut [&mut obs]).unwrap();

        let parseval = (2.0 * std::f64::consts::PI).powi(2);
        let mut expect = 0.0;
        for (k, weight) in [((1, 0), 1.0f64), ((1, 1), 2.0f64.sqrt().powi(3))] {
            let v = ou_mode_variance_oracle(&g, k, 1.0, Dissipation::Fractional, &bank).unwrap();
            expect += parseval * weight * v.discrete(params.dt) * 2.0;
        }
        for (k, weight) in [((0, 1), 1.0f64), ((2, 0), 16.0f64)] {
            let v = ou_mode_variance_oracle(&g, k, 1.0, Dissipation::Stokes, &bank).unwrap();
            expect += parseval * weight * v.discrete(params.dt) * 2.0;
        }

        let reports = tightness_scan(&samples, &[expect.sqrt()]).unwrap();
        let measured = reports[0].time_avg_norm_sq;
        assert!(
            (measured - expect).abs() <= 0.05 * expect,
            "time-averaged strong norm {measured:.5e} vs oracle sum {expect:.5e}"
        );
    }

    #[test]
    fn kb_gaps_on_ou_run() {
        let g = grid();
        let bank = ou_bank(&g);
        let mut params = SimParams::new(1.0, 0.0, 1e-2, 1.0);
        params.linear = true;
        params.zero_potential = true;
        let mut driver = WienerDriver::new(77, 0, bank.n_noise());
        let [a, b, c] = kb_horizons(
            &g,
            SimState::zero(&g),
            &bank,
            &mut driver,
            &params,
            &Observable::tanh_mode(1, 0),
            1.0,
            25.0,
        )
        .unwrap();
        assert!(a.elapsed() < b.elapsed() && b.elapsed() < c.elapsed());
        let report = kb_convergence(&a, &b, &c).unwrap();
        assert!(report.gap_first.is_finite() && report.gap_second.is_finite());
        // mode average of the zero-mean OU tends to 0: both gaps small
        assert!(report.gap_first < 0.2 && report.gap_second < 0.2);
    }
}
