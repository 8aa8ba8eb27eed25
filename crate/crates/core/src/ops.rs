//! Linear operators as Fourier multipliers, plus the dealiased quadratic
//! products.
//!
//! All multipliers act on the derivative wavenumbers of the grid, so the
//! algebraic identities between them (`div ∘ riesz = -Λ`, `leray ∘ grad = 0`,
//! `Λ⁻¹ ∘ Λ = id` away from annihilated modes) hold to roundoff for every
//! representable field, and real fields stay real.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::{SpectralScalar, SpectralVector};
use crate::grid::{pow_alpha, Grid};
use crate::scalar::Real;

fn require_mean_zero<T: Real>(q: &SpectralScalar<T>, op: &str) -> Result<()> {
    if !q.mean_zero() {
        return Err(Error::InvariantViolation(format!(
            "{op} requires a mean-zero input field"
        )));
    }
    Ok(())
}

fn require_div_free<T: Real>(u: &SpectralVector<T>, op: &str) -> Result<()> {
    if !u.div_free() {
        return Err(Error::InvariantViolation(format!(
            "{op} requires a divergence-free velocity field"
        )));
    }
    Ok(())
}

/// `Λ^alpha q`: multiplies each coefficient by `|k|^alpha`; the output mean
/// is pinned to zero.
pub fn fractional_laplacian<T: Real>(
    grid: &Grid<T>,
    q: &SpectralScalar<T>,
    alpha: T,
) -> Result<SpectralScalar<T>> {
    if alpha < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "fractional Laplacian order must be nonnegative, got {:?}",
            alpha
        )));
    }
    q.check_grid(grid)?;
    let mut out = q.clone();
    for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = grid.k_mod(idx);
        *c *= pow_alpha(m, alpha);
    }
    out.pin_mean_zero();
    Ok(out)
}

/// `Λ^s q` for arbitrary real `s`; modes annihilated by derivatives
/// (DC and pure-Nyquist) are mapped to zero for every `s`.
pub fn lambda_pow<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>, s: T) -> Result<SpectralScalar<T>> {
    q.check_grid(grid)?;
    let mut out = q.clone();
    for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = grid.k_mod(idx);
        if m == T::zero() {
            *c = Complex::new(T::zero(), T::zero());
        } else {
            *c *= pow_alpha(m, s);
        }
    }
    out.pin_mean_zero();
    Ok(out)
}

/// `Λ⁻¹ q` for mean-zero `q`.
pub fn inv_lambda<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<SpectralScalar<T>> {
    require_mean_zero(q, "inv_lambda")?;
    lambda_pow(grid, q, -T::one())
}

/// Periodic Riesz transform `R = ∇Λ⁻¹`, multiplier `i k_j / |k|`.
///
/// The result is a gradient field (curl-free), hence not flagged div_free.
pub fn riesz<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<SpectralVector<T>> {
    require_mean_zero(q, "riesz")?;
    q.check_grid(grid)?;
    let mut c1 = SpectralScalar::zeros(grid.n());
    let mut c2 = SpectralScalar::zeros(grid.n());
    for idx in 0..grid.len() {
        let m = grid.k_mod(idx);
        if m == T::zero() {
            continue;
        }
        let [d1, d2] = grid.k_deriv(idx);
        let v = q.coeffs()[idx];
        let iv = Complex::new(-v.im, v.re); // i·v
        c1.coeffs_mut()[idx] = iv * (d1 / m);
        c2.coeffs_mut()[idx] = iv * (d2 / m);
    }
    c1.pin_mean_zero();
    c2.pin_mean_zero();
    SpectralVector::from_components(grid, c1, c2, false)
}

/// Leray projection `I - kkᵀ/|k|²` onto divergence-free fields; the k = 0
/// mode passes through.
pub fn leray_project<T: Real>(grid: &Grid<T>, v: &SpectralVector<T>) -> Result<SpectralVector<T>> {
    v.comp1().check_grid(grid)?;
    let mut out = v.clone();
    for idx in 0..grid.len() {
        let [d1, d2] = grid.k_deriv(idx);
        let msq = d1 * d1 + d2 * d2;
        if msq == T::zero() {
            continue;
        }
        let a = out.comp1.coeffs()[idx];
        let b = out.comp2.coeffs()[idx];
        let dot = (a * d1 + b * d2) / msq;
        out.comp1.coeffs_mut()[idx] = a - dot * d1;
        out.comp2.coeffs_mut()[idx] = b - dot * d2;
    }
    out.set_div_free_flag(true);
    Ok(out)
}

/// Spectral gradient `(i k₁ q, i k₂ q)`.
pub fn gradient<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<SpectralVector<T>> {
    q.check_grid(grid)?;
    let mut c1 = SpectralScalar::zeros(grid.n());
    let mut c2 = SpectralScalar::zeros(grid.n());
    for idx in 0..grid.len() {
        let [d1, d2] = grid.k_deriv(idx);
        let v = q.coeffs()[idx];
        let iv = Complex::new(-v.im, v.re);
        c1.coeffs_mut()[idx] = iv * d1;
        c2.coeffs_mut()[idx] = iv * d2;
    }
    c1.pin_mean_zero();
    c2.pin_mean_zero();
    SpectralVector::from_components(grid, c1, c2, false)
}

/// Spectral divergence `i k · v`; mean-zero by construction.
pub fn divergence<T: Real>(grid: &Grid<T>, v: &SpectralVector<T>) -> Result<SpectralScalar<T>> {
    v.comp1().check_grid(grid)?;
    let mut out = SpectralScalar::zeros(grid.n());
    for idx in 0..grid.len() {
        let [d1, d2] = grid.k_deriv(idx);
        let dot = v.comp1().coeffs()[idx] * d1 + v.comp2().coeffs()[idx] * d2;
        out.coeffs_mut()[idx] = Complex::new(-dot.im, dot.re);
    }
    out.pin_mean_zero();
    Ok(out)
}

/// Scalar Laplacian, multiplier `-|k|²`.
pub fn laplacian_scalar<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<SpectralScalar<T>> {
    q.check_grid(grid)?;
    let mut out = q.clone();
    for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
        let m = grid.k_mod(idx);
        *c *= -(m * m);
    }
    Ok(out)
}

/// Componentwise vector Laplacian.
pub fn laplacian_vector<T: Real>(grid: &Grid<T>, v: &SpectralVector<T>) -> Result<SpectralVector<T>> {
    let c1 = laplacian_scalar(grid, v.comp1())?;
    let c2 = laplacian_scalar(grid, v.comp2())?;
    SpectralVector::from_components(grid, c1, c2, false).map(|mut out| {
        out.set_div_free_flag(v.div_free());
        out
    })
}

/// Masked physical values of a scalar (2/3-rule dealiasing applied first).
pub(crate) fn masked_physical<T: Real>(grid: &Grid<T>, q: &SpectralScalar<T>) -> Result<Vec<T>> {
    q.masked(grid).to_physical(grid)
}

pub(crate) fn masked_physical_vec<T: Real>(
    grid: &Grid<T>,
    v: &SpectralVector<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    v.masked(grid).to_physical(grid)
}

/// Transforms physical values back to a masked, exactly mean-zero scalar.
fn product_to_spectral<T: Real>(grid: &Grid<T>, values: &[T], pin_mean: bool) -> Result<SpectralScalar<T>> {
    let mut out = SpectralScalar::from_physical(grid, values)?;
    let mut masked = out.masked(grid);
    if pin_mean {
        masked.pin_mean_zero();
    } else {
        masked.set_mean_zero_flag(out.mean_zero());
    }
    out = masked;
    Ok(out)
}

/// `u · ∇q` computed as a dealiased physical-space product.
///
/// The output mean is pinned to zero: the DC mode of `u·∇q` is the discrete
/// integral of `div(u q)`, which vanishes.
pub fn advect_scalar<T: Real>(
    grid: &Grid<T>,
    u: &SpectralVector<T>,
    q: &SpectralScalar<T>,
) -> Result<SpectralScalar<T>> {
    require_div_free(u, "advect_scalar")?;
    require_mean_zero(q, "advect_scalar")?;
    let (u1, u2) = masked_physical_vec(grid, u)?;
    advect_scalar_with(grid, &u1, &u2, q)
}

pub(crate) fn advect_scalar_with<T: Real>(
    grid: &Grid<T>,
    u1: &[T],
    u2: &[T],
    q: &SpectralScalar<T>,
) -> Result<SpectralScalar<T>> {
    let grad = gradient(grid, q)?;
    let (g1, g2) = masked_physical_vec(grid, &grad)?;
    let prod: Vec<T> = (0..grid.len())
        .map(|i| u1[i] * g1[i] + u2[i] * g2[i])
        .collect();
    product_to_spectral(grid, &prod, true)
}

/// `u · ∇u` componentwise, dealiased. Not divergence-free before projection.
pub fn advect_vector<T: Real>(grid: &Grid<T>, u: &SpectralVector<T>) -> Result<SpectralVector<T>> {
    require_div_free(u, "advect_vector")?;
    let (u1, u2) = masked_physical_vec(grid, u)?;
    advect_vector_with(grid, &u1, &u2, u)
}

pub(crate) fn advect_vector_with<T: Real>(
    grid: &Grid<T>,
    u1: &[T],
    u2: &[T],
    u: &SpectralVector<T>,
) -> Result<SpectralVector<T>> {
    let g1 = gradient(grid, u.comp1())?;
    let g2 = gradient(grid, u.comp2())?;
    let (g11, g12) = masked_physical_vec(grid, &g1)?;
    let (g21, g22) = masked_physical_vec(grid, &g2)?;
    let p1: Vec<T> = (0..grid.len())
        .map(|i| u1[i] * g11[i] + u2[i] * g12[i])
        .collect();
    let p2: Vec<T> = (0..grid.len())
        .map(|i| u1[i] * g21[i] + u2[i] * g22[i])
        .collect();
    let c1 = product_to_spectral(grid, &p1, false)?;
    let c2 = product_to_spectral(grid, &p2, false)?;
    SpectralVector::from_components(grid, c1, c2, false)
}

/// Dealiased pointwise product `q · v` of a scalar with a vector field.
pub fn scalar_times_vector<T: Real>(
    grid: &Grid<T>,
    q: &SpectralScalar<T>,
    v: &SpectralVector<T>,
) -> Result<SpectralVector<T>> {
    let qp = masked_physical(grid, q)?;
    scalar_times_vector_with(grid, &qp, v)
}

pub(crate) fn scalar_times_vector_with<T: Real>(
    grid: &Grid<T>,
    q_phys: &[T],
    v: &SpectralVector<T>,
) -> Result<SpectralVector<T>> {
    let (v1, v2) = masked_physical_vec(grid, v)?;
    let p1: Vec<T> = (0..grid.len()).map(|i| q_phys[i] * v1[i]).collect();
    let p2: Vec<T> = (0..grid.len()).map(|i| q_phys[i] * v2[i]).collect();
    let c1 = product_to_spectral(grid, &p1, false)?;
    let c2 = product_to_spectral(grid, &p2, false)?;
    SpectralVector::from_components(grid, c1, c2, false)
}

/// Heat-kernel mollifier `J_eps`: multiplies coefficients by
/// `exp(-eps |k|²)` (true wavenumbers). `eps = 0` is the identity.
pub fn mollify_scalar<T: Real>(
    grid: &Grid<T>,
    q: &SpectralScalar<T>,
    eps: T,
) -> Result<SpectralScalar<T>> {
    if eps < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "mollifier width must be nonnegative, got {:?}",
            eps
        )));
    }
    q.check_grid(grid)?;
    if eps == T::zero() {
        return Ok(q.clone());
    }
    let mut out = q.clone();
    for (idx, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= (-eps * grid.k_sq_true(idx)).exp();
    }
    Ok(out)
}

/// Componentwise mollifier for vector fields; preserves the div_free flag.
pub fn mollify_vector<T: Real>(
    grid: &Grid<T>,
    v: &SpectralVector<T>,
    eps: T,
) -> Result<SpectralVector<T>> {
    let c1 = mollify_scalar(grid, v.comp1(), eps)?;
    let c2 = mollify_scalar(grid, v.comp2(), eps)?;
    let mut out = SpectralVector::from_components(grid, c1, c2, false)?;
    out.set_div_free_flag(v.div_free());
    Ok(out)
}

/// Convenience: `∇⊥ψ = (-∂₂ψ, ∂₁ψ)`, exactly divergence-free.
pub fn perp_gradient<T: Real>(grid: &Grid<T>, psi: &SpectralScalar<T>) -> Result<SpectralVector<T>> {
    let g = gradient(grid, psi)?;
    let mut c1 = g.comp2().clone();
    c1.scale(-T::one());
    let c2 = g.comp1().clone();
    let mut out = SpectralVector::from_components(grid, c1, c2, false)?;
    out.set_div_free_flag(true);
    Ok(out)
}
