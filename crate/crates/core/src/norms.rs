//! Norm evaluators and inner products.
//!
//! Sobolev (semi)norms are spectral sums `(2π)² Σ |k|^{2s} |q̂(k)|²` over the
//! true integer wavenumbers; `L⁴` is physical-space quadrature on the n×n
//! grid. `script_h_sq` is the coercive energy `‖Λ^{-1/2}q‖² + ‖u‖²` of the
//! coupled system, `script_v_sq` the stronger `‖q‖²_{L⁴} + ‖u‖²_{H¹}`.

use crate::error::Result;
use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::Grid;
use crate::scalar::{real, Real};

/// Squared norms of a state; L⁴ is reported to the 4th power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport<T> {
    pub q_l2_sq: T,
    pub q_l4_pow4: T,
    pub q_h_half_sq: T,
    pub q_h_neg_half_sq: T,
    pub q_h_three_half_sq: T,
    pub u_l2_sq: T,
    pub u_h1_sq: T,
    pub u_h2_sq: T,
    pub script_h_sq: T,
    pub script_v_sq: T,
}

impl<T: Real> NormReport<T> {
    pub fn zero() -> Self {
        let z = T::zero();
        Self {
            q_l2_sq: z,
            q_l4_pow4: z,
            q_h_half_sq: z,
            q_h_neg_half_sq: z,
            q_h_three_half_sq: z,
            u_l2_sq: z,
            u_h1_sq: z,
            u_h2_sq: z,
            script_h_sq: z,
            script_v_sq: z,
        }
    }
}

#[inline]
fn parseval_factor<T: Real>() -> T {
    let two_pi = real::<T>(2.0) * T::PI();
    two_pi * two_pi
}

/// Spectral L² inner product `(a, b)_{L²(T²)}`.
pub fn l2_inner<T: Real>(a: &SpectralScalar<T>, b: &SpectralScalar<T>) -> T {
    debug_assert_eq!(a.n(), b.n());
    let mut acc = T::zero();
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc * parseval_factor()
}

pub fn l2_inner_vec<T: Real>(a: &SpectralVector<T>, b: &SpectralVector<T>) -> T {
    l2_inner(a.comp1(), b.comp1()) + l2_inner(a.comp2(), b.comp2())
}

/// Homogeneous H¹ pairing `(∇a, ∇b)` via derivative wavenumbers.
pub fn h1_inner_vec<T: Real>(grid: &Grid<T>, a: &SpectralVector<T>, b: &SpectralVector<T>) -> T {
    let mut acc = T::zero();
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        let w = m * m;
        let x1 = a.comp1().coeffs()[idx];
        let y1 = b.comp1().coeffs()[idx];
        let x2 = a.comp2().coeffs()[idx];
        let y2 = b.comp2().coeffs()[idx];
        acc += w * (x1.re * y1.re + x1.im * y1.im + x2.re * y2.re + x2.im * y2.im);
    }
    acc * parseval_factor()
}

/// `(Δa, Δb)` pairing, weight `|k|⁴` on derivative wavenumbers.
pub fn h2_inner_vec<T: Real>(grid: &Grid<T>, a: &SpectralVector<T>, b: &SpectralVector<T>) -> T {
    let mut acc = T::zero();
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        let w = m * m * m * m;
        let x1 = a.comp1().coeffs()[idx];
        let y1 = b.comp1().coeffs()[idx];
        let x2 = a.comp2().coeffs()[idx];
        let y2 = b.comp2().coeffs()[idx];
        acc += w * (x1.re * y1.re + x1.im * y1.im + x2.re * y2.re + x2.im * y2.im);
    }
    acc * parseval_factor()
}

/// Squared Sobolev seminorm `‖Λ^s q‖²` over true wavenumbers (DC skipped).
pub fn sobolev_sq<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>, s: T) -> T {
    let mut acc = T::zero();
    for (idx, c) in q.coeffs().iter().enumerate() {
        let ksq = grid.k_sq_true(idx);
        if ksq == T::zero() {
            continue;
        }
        acc += ksq.powf(s) * c.norm_sqr();
    }
    acc * parseval_factor()
}

pub fn sobolev_sq_vec<T: Real>(grid: &Grid<T>, v: &SpectralVector<T>, s: T) -> T {
    sobolev_sq(grid, v.comp1(), s) + sobolev_sq(grid, v.comp2(), s)
}

/// Spectral `‖q‖²_{L²}` (DC included).
pub fn l2_sq<T: Real>(q: &SpectralScalar<T>) -> T {
    l2_inner(q, q)
}

pub fn l2_sq_vec<T: Real>(v: &SpectralVector<T>) -> T {
    l2_sq(v.comp1()) + l2_sq(v.comp2())
}

/// Quadrature L² norm of physical values (Parseval cross-check).
pub fn quadrature_l2_sq<T: Real>(grid: &Grid<T>, values: &[T]) -> T {
    let sum: T = values.iter().map(|&v| v * v).sum();
    sum * grid.quad_weight()
}

/// `‖q‖⁴_{L⁴}` by physical-space quadrature.
pub fn l4_pow4<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<T> {
    let vals = q.to_physical(grid)?;
    let sum: T = vals.iter().map(|&v| v * v * v * v).sum();
    Ok(sum * grid.quad_weight())
}

/// Physical-space inner product with the grid quadrature weight.
pub fn quad_inner<T: Real>(grid: &Grid<T>, a: &[T], b: &[T]) -> T {
    let sum: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    sum * grid.quad_weight()
}

/// Full norm report for a state `(q, u)`.
pub fn norms<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>, u: &SpectralVector<T>) -> Result<NormReport<T>> {
    q.check_grid(grid)?;
    u.comp1().check_grid(grid)?;
    let half = real::<T>(0.5);
    let q_l2_sq = l2_sq(q);
    let q_l4_pow4 = l4_pow4(grid, q)?;
    let q_h_half_sq = sobolev_sq(grid, q, half);
    let q_h_neg_half_sq = sobolev_sq(grid, q, -half);
    let q_h_three_half_sq = sobolev_sq(grid, q, real(1.5));
    let u_l2_sq = l2_sq_vec(u);
    let u_h1_sq = sobolev_sq_vec(grid, u, T::one());
    let u_h2_sq = sobolev_sq_vec(grid, u, real(2.0));
    let script_h_sq = q_h_neg_half_sq + u_l2_sq;
    let script_v_sq = q_l4_pow4.sqrt() + u_l2_sq + u_h1_sq;
    Ok(NormReport {
        q_l2_sq,
        q_l4_pow4,
        q_h_half_sq,
        q_h_neg_half_sq,
        q_h_three_half_sq,
        u_l2_sq,
        u_h1_sq,
        u_h2_sq,
        script_h_sq,
        script_v_sq,
    })
}

/// `‖Λ^{-1/2}(q₁-q₂)‖² + ‖u₁-u₂‖²`, the coercive distance between states.
pub fn script_h_distance_sq<T: Real>(
    grid: &Grid<T>,
    q1: &SpectralScalar<T>,
    u1: &SpectralVector<T>,
    q2: &SpectralScalar<T>,
    u2: &SpectralVector<T>,
) -> T {
    let dq = q1.minus(q2);
    let du = u1.minus(u2);
    sobolev_sq(grid, &dq, -real::<T>(0.5)) + l2_sq_vec(&du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TrigMode;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(n).unwrap()
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

    #[test]
    fn closed_form_norms_of_cos_x1() {
        let g = grid(32);
        let q = cosm(&g, 1, 0, 1.0);
        let u = SpectralVector::zeros(32);
        let r = norms(&g, &q, &u).unwrap();
        let pi = std::f64::consts::PI;
        // ∫ cos² = 2π², ∫ cos⁴ = 3π²/2
        assert!((r.q_l2_sq - 2.0 * pi * pi).abs() < 1e-12 * r.q_l2_sq);
        assert!((r.q_h_half_sq - 2.0 * pi * pi).abs() < 1e-12 * r.q_h_half_sq);
        assert!((r.q_l4_pow4 - 1.5 * pi * pi).abs() < 1e-12 * r.q_l4_pow4);
        assert_eq!(r.u_l2_sq, 0.0);
        assert!((r.script_h_sq - r.q_h_neg_half_sq).abs() == 0.0);
    }

    #[test]
    fn zero_fields_report_zero() {
        let g = grid(16);
        let r = norms(&g, &SpectralScalar::zeros(16), &SpectralVector::zeros(16)).unwrap();
        assert_eq!(r.q_l2_sq, 0.0);
        assert_eq!(r.q_l4_pow4, 0.0);
        assert_eq!(r.script_v_sq, 0.0);
    }

    #[test]
    fn script_h_consistent_with_summands() {
        let g = grid(16);
        let q = cosm(&g, 2, 1, 0.7);
        let u = crate::ops::perp_gradient(&g, &cosm(&g, 1, 1, 0.3)).unwrap();
        let r = norms(&g, &q, &u).unwrap();
        let direct = r.q_h_neg_half_sq + r.u_l2_sq;
        assert!((r.script_h_sq - direct).abs() <= 1e-12 * direct.abs());
    }
}
