//! Binary state snapshots.
//!
//! Layout (all little-endian):
//!   magic  4 bytes  "ECNV"
//!   version u16     1
//!   n_modes u32
//!   alpha   f64
//!   t       f64
//!   path_id u64
//!   body: q, then u component 1, then u component 2, each as n² (re, im)
//!   f64 pairs in row-major mode order.
//!
//! Total size is 34 + 3·n²·16 bytes; loading reproduces every coefficient
//! bit for bit.

use std::path::Path;

use num_complex::Complex;

use ecnv_core::{Grid64, SimState64, SpectralScalar64, SpectralVector64};

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub const MAGIC: &[u8; 4] = b"ECNV";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMeta {
    pub n_modes: u32,
    pub alpha: f64,
    pub t: f64,
    pub path_id: u64,
}

pub fn header_len() -> usize {
    4 + 2 + 4 + 8 + 8 + 8
}

pub fn file_len(n: usize) -> usize {
    header_len() + 3 * n * n * 16
}

fn push_coeffs(out: &mut Vec<u8>, coeffs: &[Complex<f64>]) {
    for c in coeffs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
}

pub fn encode(meta: &SnapshotMeta, q: &SpectralScalar64, u: &SpectralVector64) -> Vec<u8> {
    let n = meta.n_modes as usize;
    let mut out = Vec::with_capacity(file_len(n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&meta.n_modes.to_le_bytes());
    out.extend_from_slice(&meta.alpha.to_le_bytes());
    out.extend_from_slice(&meta.t.to_le_bytes());
    out.extend_from_slice(&meta.path_id.to_le_bytes());
    push_coeffs(&mut out, q.coeffs());
    push_coeffs(&mut out, u.comp1().coeffs());
    push_coeffs(&mut out, u.comp2().coeffs());
    out
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> Result<[u8; N]> {
    let end = *at + N;
    let slice = bytes
        .get(*at..end)
        .ok_or_else(|| CliError::Other("snapshot truncated".into()))?;
    *at = end;
    Ok(slice.try_into().expect("sized slice"))
}

fn read_field(grid: &Grid64, bytes: &[u8], at: &mut usize) -> Result<SpectralScalar64> {
    let mut field = SpectralScalar64::zeros(grid.n());
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(take::<8>(bytes, at)?);
        let im = f64::from_le_bytes(take::<8>(bytes, at)?);
        values.push(Complex::new(re, im));
    }
    for (k, v) in values.into_iter().enumerate() {
        let (k1, k2) = grid.wavenumber(k);
        field.set_coeff(grid, k1, k2, v)?;
    }
    Ok(field)
}

pub fn decode(bytes: &[u8]) -> Result<(SnapshotMeta, SimState64)> {
    let mut at = 0usize;
    let magic = take::<4>(bytes, &mut at)?;
    if &magic != MAGIC {
        return Err(CliError::Other("snapshot: bad magic".into()));
    }
    let version = u16::from_le_bytes(take::<2>(bytes, &mut at)?);
    if version != VERSION {
        return Err(CliError::Other(format!("snapshot: unsupported version {version}")));
    }
    let n_modes = u32::from_le_bytes(take::<4>(bytes, &mut at)?);
    let alpha = f64::from_le_bytes(take::<8>(bytes, &mut at)?);
    let t = f64::from_le_bytes(take::<8>(bytes, &mut at)?);
    let path_id = u64::from_le_bytes(take::<8>(bytes, &mut at)?);
    let n = n_modes as usize;
    if bytes.len() != file_len(n) {
        return Err(CliError::Other(format!(
            "snapshot: expected {} bytes for n = {n}, got {}",
            file_len(n),
            bytes.len()
        )));
    }
    let grid = Grid64::new(n)?;
    let q = read_field(&grid, bytes, &mut at)?;
    let c1 = read_field(&grid, bytes, &mut at)?;
    let c2 = read_field(&grid, bytes, &mut at)?;
    let scale = 1e-12
        * c1.coeffs()
            .iter()
            .chain(c2.coeffs())
            .map(|z| z.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
    let provisional = SpectralVector64::from_components(&grid, c1, c2, false)?;
    let div_free = provisional.div_defect(&grid) <= scale;
    let mut u = provisional;
    if div_free {
        u = SpectralVector64::from_components(
            &grid,
            u.comp1().clone(),
            u.comp2().clone(),
            true,
        )?;
    }
    let meta = SnapshotMeta {
        n_modes,
        alpha,
        t,
        path_id,
    };
    Ok((meta, SimState64 { q, u, t }))
}

pub fn write_file(
    path: &Path,
    meta: &SnapshotMeta,
    q: &SpectralScalar64,
    u: &SpectralVector64,
) -> Result<()> {
    std::fs::write(path, encode(meta, q, u))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<(SnapshotMeta, SimState64)> {
    let bytes = std::fs::read(path)?;
    decode(&bytes)
}
