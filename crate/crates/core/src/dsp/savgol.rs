//! Savitzky–Golay least-squares polynomial smoothing.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Window length in samples for a window given in seconds, forced odd upward.
pub fn odd_window(window_s: f64, fs: f64) -> usize {
    let n = (window_s * fs).round().max(1.0) as usize;
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Weights `h` such that `Σ h[i]·x[i]` evaluates, at scaled position `t`, the
/// degree-`order` least-squares polynomial through `len` equally spaced
/// samples at scaled positions `(i - m) / m`, `m = (len - 1) / 2`.
pub fn savgol_weights(len: usize, order: usize, t: f64) -> Vec<f64> {
    let m = ((len - 1) as f64 / 2.0).max(1.0);
    let p = order + 1;
    let pos: Vec<f64> = (0..len).map(|i| (i as f64 - (len - 1) as f64 / 2.0) / m).collect();
    // normal equations (VᵀV) c = v(t)
    let mut gram = vec![vec![0.0; p]; p];
    for &u in &pos {
        let mut pw = vec![1.0; 2 * p - 1];
        for k in 1..pw.len() {
            pw[k] = pw[k - 1] * u;
        }
        for (r, row) in gram.iter_mut().enumerate() {
            for (c, g) in row.iter_mut().enumerate() {
                *g += pw[r + c];
            }
        }
    }
    let mut rhs: Vec<f64> = (0..p).map(|k| t.powi(k as i32)).collect();
    solve_in_place(&mut gram, &mut rhs);
    pos.iter()
        .map(|&u| {
            let mut acc = 0.0;
            let mut pw = 1.0;
            for c in &rhs {
                acc += c * pw;
                pw *= u;
            }
            acc
        })
        .collect()
}

/// Gaussian elimination with partial pivoting; the solution replaces `b`.
fn solve_in_place(a: &mut [Vec<f64>], b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * y;
            }
            b[row] -= f * b[col];
        }
    }
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * b[k]).sum();
        b[row] = (b[row] - s) / a[row][row];
    }
}

/// Smooths `x` with a centred window of `window_s` seconds. The first and
/// last half-windows are evaluated on the polynomial fitted to the first and
/// last full window.
pub fn savgol<T: Real>(x: &[T], window_s: f64, poly_order: usize, fs: f64) -> Result<Vec<T>> {
    let len = odd_window(window_s, fs);
    savgol_samples(x, len, poly_order)
}

pub fn savgol_samples<T: Real>(x: &[T], len: usize, poly_order: usize) -> Result<Vec<T>> {
    if len.is_multiple_of(2) {
        return Err(Error::param("Savitzky-Golay window must be odd"));
    }
    if len <= poly_order {
        return Err(Error::param(format!(
            "Savitzky-Golay window {len} must exceed polynomial order {poly_order}"
        )));
    }
    let n = x.len();
    if n < len {
        return Err(Error::TooShort {
            required: len,
            actual: n,
        });
    }
    let m = (len - 1) / 2;
    let xf: Vec<f64> = x.iter().map(|v| v.f64()).collect();
    let centre = savgol_weights(len, poly_order, 0.0);
    let mut y = vec![0.0; n];
    for j in m..n - m {
        y[j] = centre.iter().zip(&xf[j - m..j + m + 1]).map(|(h, v)| h * v).sum();
    }
    let scale = m.max(1) as f64;
    for j in 0..m {
        let h = savgol_weights(len, poly_order, (j as f64 - m as f64) / scale);
        y[j] = h.iter().zip(&xf[..len]).map(|(h, v)| h * v).sum();
        let h = savgol_weights(len, poly_order, (m - j) as f64 / scale);
        y[n - 1 - j] = h.iter().zip(&xf[n - len..]).map(|(h, v)| h * v).sum();
    }
    Ok(y.into_iter().map(T::of).collect())
}
