//! CSV emission. Floats are printed as shortest round-trip decimals (Rust's
//! `Display`), so identical runs produce identical bytes.

use std::fmt::Write as _;

use ecnv_core::NormReport64;

/// Shortest round-trip decimal.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Column schema of the diagnostics CSV: fixed norm columns, then one
/// residual column per enabled budget.
pub fn diagnostics_header(l2_q: bool, l4_q: bool, h1_u: bool) -> String {
    let mut h = String::from("t,l2q,l4q4,hhalfq,l2u,h1u,h2u,h32q,script_h");
    if l2_q {
        h.push_str(",res_l2q");
    }
    if l4_q {
        h.push_str(",res_l4q");
    }
    if h1_u {
        h.push_str(",res_h1u");
    }
    h.push('\n');
    h
}

pub fn diagnostics_row(
    t: f64,
    norms: &NormReport64,
    res_l2q: Option<f64>,
    res_l4q: Option<f64>,
    res_h1u: Option<f64>,
) -> String {
    let mut row = String::new();
    let _ = write!(
        row,
        "{},{},{},{},{},{},{},{},{}",
        fmt_f64(t),
        fmt_f64(norms.q_l2_sq),
        fmt_f64(norms.q_l4_pow4),
        fmt_f64(norms.q_h_half_sq),
        fmt_f64(norms.u_l2_sq),
        fmt_f64(norms.u_h1_sq),
        fmt_f64(norms.u_h2_sq),
        fmt_f64(norms.q_h_three_half_sq),
        fmt_f64(norms.script_h_sq),
    );
    for r in [res_l2q, res_l4q, res_h1u].into_iter().flatten() {
        let _ = write!(row, ",{}", fmt_f64(r));
    }
    row.push('\n');
    row
}

/// Histogram rows `(bin_left, bin_right, mass)` over an inclusive range.
pub fn histogram_csv(values: &[f64], bins: usize) -> String {
    let mut out = String::from("bin_left,bin_right,mass\n");
    if values.is_empty() || bins == 0 {
        return out;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let mut b = ((v - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let n = values.len() as f64;
    for (i, c) in counts.iter().enumerate() {
        let left = lo + width * i as f64;
        let right = lo + width * (i + 1) as f64;
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(left),
            fmt_f64(right),
            fmt_f64(*c as f64 / n)
        );
    }
    out
}
