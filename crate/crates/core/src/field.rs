//! Field representations: real periodic scalars and vectors stored as
//! Fourier coefficients.
//!
//! Hermitian symmetry (`coeff(-k) = conj(coeff(k))`) is an enforced
//! invariant: constructors symmetrize, and every operator multiplier is
//! chosen to preserve it. The `mean_zero` / `div_free` flags are part of the
//! data and are required by the operators that need them.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::{real, Real};

/// One trigonometric mode, `cos_amp·cos(k·x) + sin_amp·sin(k·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigMode<T> {
    pub k1: i32,
    pub k2: i32,
    pub cos_amp: T,
    pub sin_amp: T,
}

/// Mean-zero-capable periodic scalar field in coefficient space.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalar<T: Real> {
    n: usize,
    coeffs: Vec<Complex<T>>,
    mean_zero: bool,
}

impl<T: Real> SpectralScalar<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![Complex::new(T::zero(), T::zero()); n * n],
            mean_zero: true,
        }
    }

    /// Builds a field from a finite list of trigonometric modes.
    pub fn from_modes(grid: &Grid<T>, modes: &[TrigMode<T>]) -> Result<Self> {
        let mut field = Self::zeros(grid.n());
        let half = T::one() / real::<T>(2.0);
        for m in modes {
            let idx = grid.index_of(m.k1, m.k2).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "mode ({}, {}) not representable on an n = {} grid",
                    m.k1,
                    m.k2,
                    grid.n()
                ))
            })?;
            if m.k1 == 0 && m.k2 == 0 {
                field.coeffs[idx] += Complex::new(m.cos_amp, T::zero());
                if m.cos_amp != T::zero() {
                    field.mean_zero = false;
                }
                continue;
            }
            // cos -> (1/2, 1/2) at ±k, sin -> (-i/2, i/2) at ±k.
            let amp = Complex::new(m.cos_amp * half, -m.sin_amp * half);
            field.coeffs[idx] += amp;
            field.coeffs[grid.conjugate_index(idx)] += amp.conj();
        }
        Ok(field)
    }

    /// Forward transform of real grid values. The result is symmetrized; the
    /// `mean_zero` flag is only set when the DC coefficient is exactly zero.
    pub fn from_physical(grid: &Grid<T>, values: &[T]) -> Result<Self> {
        let coeffs = grid.spectral_from_physical(values)?;
        let mut field = Self {
            n: grid.n(),
            coeffs,
            mean_zero: false,
        };
        field.symmetrize(grid);
        field.mean_zero = field.coeffs[0] == Complex::new(T::zero(), T::zero());
        Ok(field)
    }

    /// Inverse transform to real values on the n×n grid.
    pub fn to_physical(&self, grid: &Grid<T>) -> Result<Vec<T>> {
        self.check_grid(grid)?;
        grid.physical_from_spectral(&self.coeffs)
    }

    pub(crate) fn check_grid(&self, grid: &Grid<T>) -> Result<()> {
        if self.n != grid.n() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: self.n * self.n,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    #[inline]
    pub fn mean_zero(&self) -> bool {
        self.mean_zero
    }

    pub(crate) fn set_mean_zero_flag(&mut self, flag: bool) {
        self.mean_zero = flag;
    }

    /// Coefficient at wavenumber `k`, zero if not representable.
    pub fn coeff(&self, grid: &Grid<T>, k1: i32, k2: i32) -> Complex<T> {
        grid.index_of(k1, k2)
            .map(|i| self.coeffs[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn set_coeff(&mut self, grid: &Grid<T>, k1: i32, k2: i32, value: Complex<T>) -> Result<()> {
        let idx = grid.index_of(k1, k2).ok_or_else(|| {
            Error::InvalidParameter(format!("wavenumber ({k1}, {k2}) out of range"))
        })?;
        self.coeffs[idx] = value;
        if k1 == 0 && k2 == 0 {
            self.mean_zero = value == Complex::new(T::zero(), T::zero());
        }
        Ok(())
    }

    /// Pins the DC coefficient to exactly zero and records the flag.
    pub fn pin_mean_zero(&mut self) {
        self.coeffs[0] = Complex::new(T::zero(), T::zero());
        self.mean_zero = true;
    }

    /// Worst deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self, grid: &Grid<T>) -> T {
        let mut worst = T::zero();
        for idx in 0..self.coeffs.len() {
            let partner = grid.conjugate_index(idx);
            if partner < idx {
                continue;
            }
            let d = self.coeffs[idx] - self.coeffs[partner].conj();
            worst = worst.max(d.norm_sqr().sqrt());
        }
        worst
    }

    /// Projects onto the Hermitian-symmetric subspace (realness of the field).
    pub fn symmetrize(&mut self, grid: &Grid<T>) {
        let half = T::one() / real::<T>(2.0);
        for idx in 0..self.coeffs.len() {
            let partner = grid.conjugate_index(idx);
            if partner < idx {
                continue;
            }
            if partner == idx {
                self.coeffs[idx] = Complex::new(self.coeffs[idx].re, T::zero());
            } else {
                let avg = (self.coeffs[idx] + self.coeffs[partner].conj()) * half;
                self.coeffs[idx] = avg;
                self.coeffs[partner] = avg.conj();
            }
        }
    }

    /// Copy with all modes outside the 2/3 dealias mask removed.
    pub fn masked(&self, grid: &Grid<T>) -> Self {
        let mask = grid.dealias_mask();
        let coeffs = self
            .coeffs
            .iter()
            .zip(mask)
            .map(|(&z, &keep)| if keep { z } else { Complex::new(T::zero(), T::zero()) })
            .collect();
        Self {
            n: self.n,
            coeffs,
            mean_zero: self.mean_zero,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `self += a · x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.n, x.n);
        for (s, &v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *s += v * a;
        }
        self.mean_zero = self.mean_zero && x.mean_zero;
    }

    pub fn scale(&mut self, a: T) {
        for s in &mut self.coeffs {
            *s *= a;
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a - b)
            .collect();
        Self {
            n: self.n,
            coeffs,
            mean_zero: self.mean_zero && other.mean_zero,
        }
    }
}

/// Periodic vector field; `div_free` asserts `k·v̂(k) = 0` for every mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVector<T: Real> {
    pub(crate) comp1: SpectralScalar<T>,
    pub(crate) comp2: SpectralScalar<T>,
    div_free: bool,
}

impl<T: Real> SpectralVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            comp1: SpectralScalar::zeros(n),
            comp2: SpectralScalar::zeros(n),
            div_free: true,
        }
    }

    /// Assembles a vector field from components, checking the stated flag.
    pub fn from_components(
        grid: &Grid<T>,
        comp1: SpectralScalar<T>,
        comp2: SpectralScalar<T>,
        div_free: bool,
    ) -> Result<Self> {
        let v = Self {
            comp1,
            comp2,
            div_free,
        };
        v.comp1.check_grid(grid)?;
        v.comp2.check_grid(grid)?;
        if div_free {
            let defect = v.div_defect(grid);
            let scale = v.linf_coeff().max(T::min_positive_value());
            if defect > real::<T>(1e-12) * scale {
                return Err(Error::InvariantViolation(format!(
                    "vector field flagged div_free has divergence defect {:e}",
                    defect.to_f64().unwrap_or(f64::NAN)
                )));
            }
        }
        Ok(v)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.comp1.n()
    }

    #[inline]
    pub fn comp1(&self) -> &SpectralScalar<T> {
        &self.comp1
    }

    #[inline]
    pub fn comp2(&self) -> &SpectralScalar<T> {
        &self.comp2
    }

    #[inline]
    pub fn div_free(&self) -> bool {
        self.div_free
    }

    pub(crate) fn set_div_free_flag(&mut self, flag: bool) {
        self.div_free = flag;
    }

    pub fn mean_zero(&self) -> bool {
        self.comp1.mean_zero() && self.comp2.mean_zero()
    }

    /// Largest `|k·v̂(k)|` over all modes (derivative wavenumbers).
    pub fn div_defect(&self, grid: &Grid<T>) -> T {
        let mut worst = T::zero();
        for idx in 0..grid.len() {
            let [d1, d2] = grid.k_deriv(idx);
            let dot = self.comp1.coeffs()[idx] * d1 + self.comp2.coeffs()[idx] * d2;
            worst = worst.max(dot.norm_sqr().sqrt());
        }
        worst
    }

    /// Largest coefficient magnitude across both components.
    pub fn linf_coeff(&self) -> T {
        let mut worst = T::zero();
        for z in self.comp1.coeffs().iter().chain(self.comp2.coeffs()) {
            worst = worst.max(z.norm_sqr().sqrt());
        }
        worst
    }

    pub fn to_physical(&self, grid: &Grid<T>) -> Result<(Vec<T>, Vec<T>)> {
        Ok((self.comp1.to_physical(grid)?, self.comp2.to_physical(grid)?))
    }

    pub fn masked(&self, grid: &Grid<T>) -> Self {
        Self {
            comp1: self.comp1.masked(grid),
            comp2: self.comp2.masked(grid),
            div_free: self.div_free,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comp1.is_finite() && self.comp2.is_finite()
    }

    pub fn axpy(&mut self, a: T, x: &Self) {
        self.comp1.axpy(a, &x.comp1);
        self.comp2.axpy(a, &x.comp2);
        self.div_free = self.div_free && x.div_free;
    }

    pub fn scale(&mut self, a: T) {
        self.comp1.scale(a);
        self.comp2.scale(a);
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self {
            comp1: self.comp1.minus(&other.comp1),
            comp2: self.comp2.minus(&other.comp2),
            div_free: self.div_free && other.div_free,
        }
    }

    pub fn hermitian_defect(&self, grid: &Grid<T>) -> T {
        self.comp1
            .hermitian_defect(grid)
            .max(self.comp2.hermitian_defect(grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(n).unwrap()
    }

    #[test]
    fn cos_mode_coefficients() {
        let g = grid(16);
        let f = SpectralScalar::from_modes(
            &g,
            &[TrigMode {
                k1: 1,
                k2: 0,
                cos_amp: 1.0,
                sin_amp: 0.0,
            }],
        )
        .unwrap();
        assert_eq!(f.coeff(&g, 1, 0), Complex::new(0.5, 0.0));
        assert_eq!(f.coeff(&g, -1, 0), Complex::new(0.5, 0.0));
        assert!(f.mean_zero());
        assert_eq!(f.hermitian_defect(&g), 0.0);
    }

    #[test]
    fn sin_mode_matches_pointwise_values() {
        let g = grid(16);
        let f = SpectralScalar::from_modes(
            &g,
            &[TrigMode {
                k1: 2,
                k2: -1,
                cos_amp: 0.0,
                sin_amp: 1.5,
            }],
        )
        .unwrap();
        let vals = f.to_physical(&g).unwrap();
        let n = g.n();
        for r in 0..n {
            for c in 0..n {
                let x1 = 2.0 * std::f64::consts::PI * r as f64 / n as f64;
                let x2 = 2.0 * std::f64::consts::PI * c as f64 / n as f64;
                let expect = 1.5 * (2.0 * x1 - x2).sin();
                assert!((vals[r * n + c] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn div_free_flag_is_checked_not_assumed() {
        let g = grid(16);
        let mode = |k1, k2, c| TrigMode {
            k1,
            k2,
            cos_amp: c,
            sin_amp: 0.0,
        };
        // (cos x2, 0) is divergence-free; (cos x1, 0) is not.
        let ok = SpectralVector::from_components(
            &g,
            SpectralScalar::from_modes(&g, &[mode(0, 1, 1.0)]).unwrap(),
            SpectralScalar::zeros(16),
            true,
        );
        assert!(ok.is_ok());
        let bad = SpectralVector::from_components(
            &g,
            SpectralScalar::from_modes(&g, &[mode(1, 0, 1.0)]).unwrap(),
            SpectralScalar::zeros(16),
            true,
        );
        assert!(matches!(bad, Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn masked_removes_high_modes_only() {
        let g = grid(12); // cutoff 4
        let f = SpectralScalar::from_modes(
            &g,
            &[
                TrigMode {
                    k1: 2,
                    k2: 0,
                    cos_amp: 1.0,
                    sin_amp: 0.0,
                },
                TrigMode {
                    k1: 5,
                    k2: 0,
                    cos_amp: 1.0,
                    sin_amp: 0.0,
                },
            ],
        )
        .unwrap();
        let m = f.masked(&g);
        assert_eq!(m.coeff(&g, 2, 0), Complex::new(0.5, 0.0));
        assert_eq!(m.coeff(&g, 5, 0), Complex::new(0.0, 0.0));
    }
}
