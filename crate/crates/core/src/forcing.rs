//! Static forcing data and the Wiener increment source.
//!
//! The bank holds the potential, the body force and the two noise shape
//! families; everything is validated once at load time and immutable
//! afterwards. Increments are produced by a counter-based generator, so a
//! stream is a pure function of `(seed, path_id, step_index)`.

use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::Grid;
use crate::rng::standard_normal;
use crate::scalar::{real, Real};

/// Immutable noise shapes and deterministic forcing fields.
#[derive(Debug, Clone)]
pub struct ForcingBank<T: Real> {
    g_tilde: Vec<SpectralScalar<T>>,
    g: Vec<SpectralVector<T>>,
    phi: SpectralScalar<T>,
    f: SpectralVector<T>,
}

impl<T: Real> ForcingBank<T> {
    /// Validates and freezes the bank. Charge shapes must be mean-zero,
    /// velocity shapes and the body force divergence-free; violations are
    /// rejected here, never projected away.
    pub fn new(
        grid: &Grid<T>,
        phi: SpectralScalar<T>,
        f: SpectralVector<T>,
        g_tilde: Vec<SpectralScalar<T>>,
        g: Vec<SpectralVector<T>>,
    ) -> Result<Self> {
        if g_tilde.len() != g.len() {
            return Err(Error::InvalidParameter(format!(
                "noise bank needs matching shape counts, got {} charge and {} velocity shapes",
                g_tilde.len(),
                g.len()
            )));
        }
        phi.check_grid(grid)?;
        if !phi.mean_zero() {
            return Err(Error::InvariantViolation(
                "potential must be stored mean-zero (its mean is unobservable)".into(),
            ));
        }
        f.comp1().check_grid(grid)?;
        if !f.div_free() {
            return Err(Error::InvariantViolation("body force must be divergence-free".into()));
        }
        if !f.mean_zero() {
            return Err(Error::InvariantViolation("body force must have zero mean".into()));
        }
        for (l, gt) in g_tilde.iter().enumerate() {
            gt.check_grid(grid)?;
            if !gt.mean_zero() {
                return Err(Error::InvariantViolation(format!(
                    "charge noise shape {} must have zero mean",
                    l + 1
                )));
            }
        }
        for (l, gl) in g.iter().enumerate() {
            gl.comp1().check_grid(grid)?;
            if !gl.div_free() {
                return Err(Error::InvariantViolation(format!(
                    "velocity noise shape {} must be divergence-free",
                    l + 1
                )));
            }
        }
        Ok(Self { g_tilde, g, phi, f })
    }

    /// Bank with no noise and no deterministic forcing.
    pub fn quiet(grid: &Grid<T>) -> Self {
        Self {
            g_tilde: Vec::new(),
            g: Vec::new(),
            phi: SpectralScalar::zeros(grid.n()),
            f: SpectralVector::zeros(grid.n()),
        }
    }

    /// Number of Wiener processes n.
    #[inline]
    pub fn n_noise(&self) -> usize {
        self.g_tilde.len()
    }

    #[inline]
    pub fn phi(&self) -> &SpectralScalar<T> {
        &self.phi
    }

    #[inline]
    pub fn body_force(&self) -> &SpectralVector<T> {
        &self.f
    }

    #[inline]
    pub fn g_tilde(&self) -> &[SpectralScalar<T>] {
        &self.g_tilde
    }

    #[inline]
    pub fn g(&self) -> &[SpectralVector<T>] {
        &self.g
    }

    pub fn has_potential(&self) -> bool {
        self.phi.coeffs().iter().any(|c| c.norm_sqr() > T::zero())
    }
}

/// Reproducible source of Brownian increments for one path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WienerDriver {
    seed: u64,
    path_id: u64,
    step_index: u64,
    n_noise: usize,
}

impl WienerDriver {
    pub fn new(seed: u64, path_id: u64, n_noise: usize) -> Self {
        Self {
            seed,
            path_id,
            step_index: 0,
            n_noise,
        }
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn path_id(&self) -> u64 {
        self.path_id
    }

    #[inline]
    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    #[inline]
    pub fn n_noise(&self) -> usize {
        self.n_noise
    }

    /// Draws `ΔW_l ~ N(0, dt)` for every l and advances the step counter.
    pub fn sample_increment<T: Real>(&mut self, dt: T) -> Result<NoiseIncrement<T>> {
        if dt <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {:?}",
                dt
            )));
        }
        let sqrt_dt = dt.sqrt();
        let dw = (0..self.n_noise)
            .map(|l| {
                let z: T = real(standard_normal(self.seed, self.path_id, self.step_index, l as u64));
                z * sqrt_dt
            })
            .collect();
        self.step_index += 1;
        Ok(NoiseIncrement { dw, dt })
    }
}

/// The `ΔW` vector of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseIncrement<T> {
    pub dw: Vec<T>,
    pub dt: T,
}

impl<T: Real> NoiseIncrement<T> {
    /// Pairwise sum of two consecutive increments (coupling for dt-halving
    /// studies: the coarse increment over `2 dt` is the sum of the fine two).
    pub fn merged(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dw.len(), other.dw.len());
        NoiseIncrement {
            dw: self
                .dw
                .iter()
                .zip(&other.dw)
                .map(|(&a, &b)| a + b)
                .collect(),
            dt: self.dt + other.dt,
        }
    }
}

/// Assembles the step's additive noise fields `(Σ g̃_l ΔW_l, Σ g_l ΔW_l)`.
pub fn noise_fields<T: Real>(
    grid: &Grid<T>,
    bank: &ForcingBank<T>,
    inc: &NoiseIncrement<T>,
) -> Result<(SpectralScalar<T>, SpectralVector<T>)> {
    if inc.dw.len() != bank.n_noise() {
        return Err(Error::InvalidParameter(format!(
            "increment has {} entries but bank holds {} noise shapes",
            inc.dw.len(),
            bank.n_noise()
        )));
    }
    let mut nq = SpectralScalar::zeros(grid.n());
    let mut nu = SpectralVector::zeros(grid.n());
    for (l, &w) in inc.dw.iter().enumerate() {
        nq.axpy(w, &bank.g_tilde()[l]);
        nu.axpy(w, &bank.g()[l]);
    }
    nq.pin_mean_zero();
    nu.set_div_free_flag(true);
    Ok((nq, nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TrigMode;
    use crate::ops::perp_gradient;

    fn grid() -> Grid<f64> {
        Grid::new(16).unwrap()
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

    fn bank2(g: &Grid<f64>) -> ForcingBank<f64> {
        let g1 = perp_gradient(g, &cosm(g, 1, 0, 1.0)).unwrap();
        let g2 = perp_gradient(g, &cosm(g, 0, 1, 1.0)).unwrap();
        ForcingBank::new(
            g,
            SpectralScalar::zeros(16),
            SpectralVector::zeros(16),
            vec![cosm(g, 1, 0, 1.0), cosm(g, 1, 1, 0.5)],
            vec![g1, g2],
        )
        .unwrap()
    }

    #[test]
    fn increments_are_deterministic_and_sized() {
        let g = grid();
        let bank = bank2(&g);
        let mut d1 = WienerDriver::new(9, 2, bank.n_noise());
        let mut d2 = WienerDriver::new(9, 2, bank.n_noise());
        for _ in 0..50 {
            let a = d1.sample_increment::<f64>(0.01).unwrap();
            let b = d2.sample_increment::<f64>(0.01).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.dw.len(), 2);
        }
        assert!(d1.sample_increment::<f64>(0.0).is_err());
    }

    #[test]
    fn empty_bank_yields_empty_increment() {
        let g = grid();
        let bank = ForcingBank::<f64>::quiet(&g);
        let mut d = WienerDriver::new(0, 0, bank.n_noise());
        let inc = d.sample_increment::<f64>(1.0).unwrap();
        assert!(inc.dw.is_empty());
        let (nq, nu) = noise_fields(&g, &bank, &inc).unwrap();
        assert!(nq.coeffs().iter().all(|c| c.norm_sqr() == 0.0));
        assert!(nu.comp1().coeffs().iter().all(|c| c.norm_sqr() == 0.0));
    }

    #[test]
    fn noise_fields_superpose_linearly() {
        let g = grid();
        let bank = bank2(&g);
        let inc = NoiseIncrement {
            dw: vec![0.3, -1.7],
            dt: 0.01,
        };
        let (nq, nu) = noise_fields(&g, &bank, &inc).unwrap();
        assert!(nq.mean_zero());
        assert!(nu.div_free());
        // a·(g̃₁,g₁) + b·(g̃₂,g₂) assembled by hand
        let mut expect_q = SpectralScalar::zeros(16);
        expect_q.axpy(0.3, &bank.g_tilde()[0]);
        expect_q.axpy(-1.7, &bank.g_tilde()[1]);
        let diff: f64 = nq
            .coeffs()
            .iter()
            .zip(expect_q.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14);

        // unit weight on a single shape returns that shape exactly
        let inc1 = NoiseIncrement {
            dw: vec![1.0, 0.0],
            dt: 0.01,
        };
        let (nq1, _) = noise_fields(&g, &bank, &inc1).unwrap();
        assert_eq!(nq1.coeffs(), bank.g_tilde()[0].coeffs());
    }

    #[test]
    fn bank_rejects_invalid_shapes() {
        let g = grid();
        let mut not_mean_zero = cosm(&g, 1, 0, 1.0);
        not_mean_zero
            .set_coeff(&g, 0, 0, num_complex::Complex::new(1.0, 0.0))
            .unwrap();
        let err = ForcingBank::new(
            &g,
            SpectralScalar::zeros(16),
            SpectralVector::zeros(16),
            vec![not_mean_zero],
            vec![SpectralVector::zeros(16)],
        );
        assert!(err.is_err());

        let not_div_free = SpectralVector::from_components(
            &g,
            cosm(&g, 1, 0, 1.0),
            SpectralScalar::zeros(16),
            false,
        )
        .unwrap();
        let err = ForcingBank::new(
            &g,
            SpectralScalar::zeros(16),
            SpectralVector::zeros(16),
            vec![cosm(&g, 1, 0, 1.0)],
            vec![not_div_free],
        );
        assert!(err.is_err());
    }

    #[test]
    fn chi_square_variance_at_one_percent() {
        // Σ z² over 10⁴ draws against the χ² 1% two-sided band.
        let n = 10_000usize;
        let mut stat = 0.0;
        for i in 0..n {
            let z = standard_normal(123, 0, i as u64, 0);
            stat += z * z;
        }
        let half_width = 2.5758293035489004 * (2.0 * n as f64).sqrt();
        assert!(stat > n as f64 - half_width && stat < n as f64 + half_width);
    }

    #[test]
    fn paths_are_uncorrelated() {
        let n = 10_000usize;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let a = standard_normal(5, 0, i as u64, 0);
            let b = standard_normal(5, 1, i as u64, 0);
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.05);
    }
}
