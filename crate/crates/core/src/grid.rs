//! Fourier grid on the 2π-periodic square torus.
//!
//! Coefficients are stored in FFT order, row-major: index `r * n + c` holds
//! the mode `k = (k1(r), k2(c))` with `k(i) = i` for `i < n/2` and `i - n`
//! otherwise, so each component runs over `{-n/2, ..., n/2 - 1}`. The field
//! convention is `q(x) = Σ_k q̂(k) e^{i k·x}`, hence `cos(x1)` has the two
//! coefficients `q̂(±1, 0) = 1/2`.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Wavenumber tables, dealias mask and cached transform plans for one
/// resolution. Cheap to clone (plans are shared); safe to use from many
/// threads concurrently.
#[derive(Clone)]
pub struct Grid<T: Real> {
    n: usize,
    k_of_index: Vec<i32>,
    // Per-mode tables, length n*n. Odd (derivative-type) multipliers use
    // `k_deriv`, where a Nyquist component is replaced by zero so that every
    // operator maps real fields to real fields; the true |k|^2 is kept
    // separately for norms and the heat-kernel mollifier.
    k_deriv: Vec<[T; 2]>,
    k_mod: Vec<T>,
    k_sq_true: Vec<T>,
    dealias: Vec<bool>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Grid<T> {
    /// Builds the grid for `n` modes per dimension (`n` even, at least 4).
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "grid size must be even and at least 4, got {n}"
            )));
        }
        let half = (n / 2) as i32;
        let k_of_index: Vec<i32> = (0..n as i32)
            .map(|i| if i < half { i } else { i - n as i32 })
            .collect();

        let len = n * n;
        let mut k_deriv = Vec::with_capacity(len);
        let mut k_mod = Vec::with_capacity(len);
        let mut k_sq_true = Vec::with_capacity(len);
        let mut dealias = Vec::with_capacity(len);
        let cutoff = (n / 3) as i32;
        for r in 0..n {
            let k1 = k_of_index[r];
            for c in 0..n {
                let k2 = k_of_index[c];
                let d1 = if k1 == -half { 0 } else { k1 };
                let d2 = if k2 == -half { 0 } else { k2 };
                let d1t: T = real(d1 as f64);
                let d2t: T = real(d2 as f64);
                k_deriv.push([d1t, d2t]);
                k_mod.push((d1t * d1t + d2t * d2t).sqrt());
                k_sq_true.push(real((k1 * k1 + k2 * k2) as f64));
                dealias.push(k1.abs() <= cutoff && k2.abs() <= cutoff);
            }
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        Ok(Self {
            n,
            k_of_index,
            k_deriv,
            k_mod,
            k_sq_true,
            dealias,
            fwd,
            inv,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored modes (and physical grid points), `n * n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight per physical node, `(2π/n)²`.
    #[inline]
    pub fn quad_weight(&self) -> T {
        let h = real::<T>(2.0) * T::PI() / real(self.n as f64);
        h * h
    }

    /// Integer wavenumber of the flat index.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> (i32, i32) {
        (self.k_of_index[idx / self.n], self.k_of_index[idx % self.n])
    }

    /// Flat index of a wavenumber, if representable on this grid.
    pub fn index_of(&self, k1: i32, k2: i32) -> Option<usize> {
        let half = (self.n / 2) as i32;
        if k1 < -half || k1 >= half || k2 < -half || k2 >= half {
            return None;
        }
        let r = if k1 >= 0 { k1 } else { k1 + self.n as i32 } as usize;
        let c = if k2 >= 0 { k2 } else { k2 + self.n as i32 } as usize;
        Some(r * self.n + c)
    }

    /// Index of the conjugate partner mode `-k` (mod n in each component).
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let (r, c) = (idx / self.n, idx % self.n);
        let rp = (self.n - r) % self.n;
        let cp = (self.n - c) % self.n;
        rp * self.n + cp
    }

    /// Derivative wavenumber (Nyquist components zeroed).
    #[inline]
    pub fn k_deriv(&self, idx: usize) -> [T; 2] {
        self.k_deriv[idx]
    }

    /// Modulus of the derivative wavenumber.
    #[inline]
    pub fn k_mod(&self, idx: usize) -> T {
        self.k_mod[idx]
    }

    /// True `|k|²` (Nyquist included), used by norms and the mollifier.
    #[inline]
    pub fn k_sq_true(&self, idx: usize) -> T {
        self.k_sq_true[idx]
    }

    #[inline]
    pub fn dealias_mask(&self) -> &[bool] {
        &self.dealias
    }

    #[inline]
    pub fn in_mask(&self, idx: usize) -> bool {
        self.dealias[idx]
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    fn fft2(&self, buf: &mut [Complex<T>], plan: &Arc<dyn Fft<T>>) {
        plan.process(buf);
        transpose_square(buf, self.n);
        plan.process(buf);
        transpose_square(buf, self.n);
    }

    /// Inverse transform of raw coefficients to real point values.
    pub fn physical_from_spectral(&self, coeffs: &[Complex<T>]) -> Result<Vec<T>> {
        self.check_len(coeffs.len())?;
        let mut buf = coeffs.to_vec();
        self.fft2(&mut buf, &self.inv);
        Ok(buf.iter().map(|z| z.re).collect())
    }

    /// Forward transform of real point values to coefficients (with the
    /// `1/n²` normalization that makes the DC coefficient the mean).
    pub fn spectral_from_physical(&self, values: &[T]) -> Result<Vec<Complex<T>>> {
        self.check_len(values.len())?;
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fft2(&mut buf, &self.fwd);
        let scale = T::one() / real::<T>(self.len() as f64);
        for z in &mut buf {
            *z *= scale;
        }
        Ok(buf)
    }
}

fn transpose_square<T: Copy>(buf: &mut [T], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

/// `m^alpha` with the exponents that must be bit-exact special-cased.
#[inline]
pub(crate) fn pow_alpha<T: Real>(m: T, alpha: T) -> T {
    if alpha == T::one() {
        m
    } else if alpha == real(2.0) {
        m * m
    } else if alpha == real(0.5) {
        m.sqrt()
    } else {
        m.powf(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_tiny_sizes() {
        assert!(Grid::<f64>::new(7).is_err());
        assert!(Grid::<f64>::new(2).is_err());
        assert!(Grid::<f64>::new(8).is_ok());
    }

    #[test]
    fn wavenumber_layout_round_trips() {
        let g = Grid::<f64>::new(8).unwrap();
        for k1 in -4..4 {
            for k2 in -4..4 {
                let idx = g.index_of(k1, k2).unwrap();
                assert_eq!(g.wavenumber(idx), (k1, k2));
            }
        }
        assert!(g.index_of(4, 0).is_none());
        assert!(g.index_of(0, -5).is_none());
    }

    #[test]
    fn dealias_mask_symmetric_under_negation() {
        let g = Grid::<f64>::new(32).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.dealias_mask()[idx], g.dealias_mask()[g.conjugate_index(idx)]);
        }
        // 2/3 rule: |k_i| <= n/3 in both components.
        assert!(g.in_mask(g.index_of(10, -10).unwrap()));
        assert!(!g.in_mask(g.index_of(11, 0).unwrap()));
    }

    #[test]
    fn nyquist_derivative_wavenumber_is_zeroed() {
        let g = Grid::<f64>::new(8).unwrap();
        let idx = g.index_of(-4, 1).unwrap();
        assert_eq!(g.k_deriv(idx), [0.0, 1.0]);
        assert_eq!(g.k_sq_true(idx), 17.0);
    }
}
