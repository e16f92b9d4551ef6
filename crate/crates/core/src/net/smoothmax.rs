//! Boltzmann-weighted mean `Σ v e^{αv} / Σ e^{αv}`, evaluated with a max shift.

use super::NetError;

pub fn smoothmax(values: &[f64], alpha: f64) -> Result<f64, NetError> {
    if values.is_empty() {
        return Err(NetError::EmptyInput);
    }
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &v in values {
        let e = (alpha * (v - m)).exp();
        num += v * e;
        den += e;
    }
    Ok(num / den)
}

/// Coordinate-wise smoothmax of the rows listed in `rows`, each `d` wide, read
/// from `src`. Writes the result into `out`; zero if `rows` is empty.
pub(crate) fn smoothmax_rows(src: &[f64], rows: &[usize], d: usize, alpha: f64, out: &mut [f64]) {
    if rows.is_empty() {
        out.fill(0.0);
        return;
    }
    for c in 0..d {
        let mut m = f64::NEG_INFINITY;
        for &r in rows {
            m = m.max(src[r * d + c]);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &r in rows {
            let v = src[r * d + c];
            let e = (alpha * (v - m)).exp();
            num += v * e;
            den += e;
        }
        out[c] = num / den;
    }
}

/// Backward of [`smoothmax_rows`]: `∂S/∂v_j = p_j (1 + α (v_j − S))`.
/// Accumulates into `dsrc`.
pub(crate) fn smoothmax_rows_backward(
    src: &[f64],
    rows: &[usize],
    d: usize,
    alpha: f64,
    s: &[f64],
    ds: &[f64],
    dsrc: &mut [f64],
) {
    if rows.is_empty() {
        return;
    }
    for c in 0..d {
        if ds[c] == 0.0 {
            continue;
        }
        let mut m = f64::NEG_INFINITY;
        for &r in rows {
            m = m.max(src[r * d + c]);
        }
        let mut den = 0.0;
        for &r in rows {
            den += (alpha * (src[r * d + c] - m)).exp();
        }
        for &r in rows {
            let v = src[r * d + c];
            let p = (alpha * (v - m)).exp() / den;
            dsrc[r * d + c] += ds[c] * p * (1.0 + alpha * (v - s[c]));
        }
    }
}
