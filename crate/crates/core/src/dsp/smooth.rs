//! Time-domain smoothers: median, centred moving average, causal EMA.

use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_odd(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::param(format!("kernel length must be odd and positive, got {k}")));
    }
    Ok(())
}

/// Centred running median; windows are truncated at the ends. Even-sized
/// truncated windows take the mean of the two middle values.
pub fn median_filter<T: Real>(x: &[T], k: usize) -> Result<Vec<T>> {
    check_odd(k)?;
    let n = x.len();
    let h = k / 2;
    let mut buf: Vec<f64> = Vec::with_capacity(k);
    Ok((0..n)
        .map(|i| {
            buf.clear();
            buf.extend(x[i.saturating_sub(h)..(i + h + 1).min(n)].iter().map(|v| v.f64()));
            T::of(median_of(&mut buf))
        })
        .collect())
}

pub(crate) fn median_of(buf: &mut [f64]) -> f64 {
    let len = buf.len();
    let mid = len / 2;
    let (lo, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if len % 2 == 1 {
        upper
    } else {
        let lower = lo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Centred boxcar mean over `k` samples; windows are truncated at the ends.
pub fn moving_average<T: Real>(x: &[T], k: usize) -> Result<Vec<T>> {
    check_odd(k)?;
    let n = x.len();
    let h = k / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v.f64();
        prefix.push(acc);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(n);
            T::of((prefix[hi] - prefix[lo]) / (hi - lo) as f64)
        })
        .collect())
}

/// Causal exponential moving average seeded with the first sample.
pub fn ema<T: Real>(x: &[T], alpha: f64) -> Result<Vec<T>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let mut out = Vec::with_capacity(x.len());
    let mut s = match x.first() {
        Some(v) => v.f64(),
        None => return Ok(out),
    };
    for v in x {
        s = alpha * v.f64() + (1.0 - alpha) * s;
        out.push(T::of(s));
    }
    Ok(out)
}

/// EMA smoothing factor for a span of `n` samples: 2 / (n + 1).
pub fn span_alpha(n: usize) -> f64 {
    2.0 / (n as f64 + 1.0)
}
