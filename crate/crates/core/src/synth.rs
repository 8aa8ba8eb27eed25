//! Seeded synthesis of random smooth fields, used by diagnostics corpora and
//! tests. Fields live inside the dealias mask, carry a power-law spectrum
//! `|q̂(k)| ~ |k|^{-decay}`, and are normalized to unit L².

use num_complex::Complex;

use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::Grid;
use crate::norms::{l2_sq, l2_sq_vec};
use crate::ops::perp_gradient;
use crate::rng::{counter_key, standard_normal, uniform_closed_open01};
use crate::scalar::{real, Real};

/// Random mean-zero scalar with unit L² norm, band-limited to
/// `|k_i| <= kmax`. Mode enumeration is grid-independent, so the same
/// `(seed, kmax)` describes the same function at every resolution that can
/// represent the band.
pub fn random_scalar_band<T: Real>(
    grid: &Grid<T>,
    seed: u64,
    decay: f64,
    kmax: i32,
) -> SpectralScalar<T> {
    let mut field = SpectralScalar::zeros(grid.n());
    let mut slot = 0u64;
    for k1 in 0..=kmax {
        for k2 in -kmax..=kmax {
            if k1 == 0 && k2 <= 0 {
                continue; // fill one half-space, mirror the other
            }
            let re = standard_normal(seed, 0, slot, 0);
            let im = standard_normal(seed, 0, slot, 1);
            slot += 1;
            let idx = match grid.index_of(k1, k2) {
                Some(i) if grid.in_mask(i) => i,
                _ => continue,
            };
            let ksq = (k1 * k1 + k2 * k2) as f64;
            let amp = ksq.powf(-decay / 2.0);
            let c = Complex::new(real::<T>(amp * re), real::<T>(amp * im));
            field.coeffs_mut()[idx] = c;
            field.coeffs_mut()[grid.conjugate_index(idx)] = c.conj();
        }
    }
    field.pin_mean_zero();
    let norm = l2_sq(&field).sqrt();
    if norm > T::zero() {
        field.scale(T::one() / norm);
    }
    field
}

/// Random mean-zero scalar with unit L² norm, filling the grid's own
/// dealias band.
pub fn random_scalar<T: Real>(grid: &Grid<T>, seed: u64, decay: f64) -> SpectralScalar<T> {
    random_scalar_band(grid, seed, decay, (grid.n() / 3) as i32)
}

/// Random divergence-free vector (perp-gradient of a random streamfunction)
/// with unit L² norm, band-limited like [`random_scalar_band`].
pub fn random_div_free_band<T: Real>(
    grid: &Grid<T>,
    seed: u64,
    decay: f64,
    kmax: i32,
) -> SpectralVector<T> {
    let psi = random_scalar_band(grid, seed ^ 0x5851f42d4c957f2d, decay + 1.0, kmax);
    let mut u = perp_gradient(grid, &psi).expect("streamfunction gradient");
    let norm = l2_sq_vec(&u).sqrt();
    if norm > T::zero() {
        u.scale(T::one() / norm);
    }
    u
}

pub fn random_div_free<T: Real>(grid: &Grid<T>, seed: u64, decay: f64) -> SpectralVector<T> {
    random_div_free_band(grid, seed, decay, (grid.n() / 3) as i32)
}

/// Uniform draw in [lo, hi) from a counter, for corpus parameters.
pub fn seeded_uniform(seed: u64, slot: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_closed_open01(counter_key(seed, 1, slot, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesized_fields_satisfy_invariants() {
        let g: Grid<f64> = Grid::new(32).unwrap();
        for seed in 0..5 {
            let q = random_scalar(&g, seed, 2.0);
            assert!(q.mean_zero());
            assert!(q.hermitian_defect(&g) < 1e-14);
            assert!((l2_sq(&q) - 1.0).abs() < 1e-12);
            let u = random_div_free(&g, seed, 2.0);
            assert!(u.div_free());
            assert!(u.div_defect(&g) < 1e-13);
            assert!((l2_sq_vec(&u) - 1.0).abs() < 1e-12);
            // content strictly inside the mask
            for idx in 0..g.len() {
                if !g.in_mask(idx) {
                    assert_eq!(q.coeffs()[idx].norm_sqr(), 0.0);
                }
            }
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_fields() {
        let g: Grid<f64> = Grid::new(16).unwrap();
        let a = random_scalar(&g, 1, 2.0);
        let b = random_scalar(&g, 2, 2.0);
        assert!(a != b);
    }
}
