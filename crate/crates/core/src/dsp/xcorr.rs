//! Normalized cross-correlation over a bounded lag range.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation {
    pub max_lag: usize,
    /// `r[j]` is the coefficient at lag `j - max_lag`.
    pub r: Vec<f64>,
    pub tau_star: i64,
    pub r_max: f64,
}

impl CrossCorrelation {
    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        let m = self.max_lag as i64;
        (-m..=m).take(self.r.len())
    }

    pub fn at(&self, lag: i64) -> Option<f64> {
        let j = lag + self.max_lag as i64;
        usize::try_from(j).ok().and_then(|j| self.r.get(j).copied())
    }

    /// Signed coefficient at the optimal lag.
    pub fn r_signed(&self) -> f64 {
        self.at(self.tau_star).unwrap_or(f64::NAN)
    }
}

fn standardize<T: Real>(x: &[T], what: &'static str) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().map(|v| v.f64()).sum::<f64>() / n;
    let var = x.iter().map(|v| (v.f64() - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::ZeroVariance(what));
    }
    let sd = var.sqrt();
    Ok(x.iter().map(|v| (v.f64() - mean) / sd).collect())
}

/// `R(τ) = Σ ẽ[i+τ]·r̃[i]` over the overlapping samples, divided by the norms
/// of both overlapping parts. A positive optimal lag means `e` trails `r`.
pub fn xcorr_normalized<T: Real>(e: &[T], r: &[T], max_lag: usize) -> Result<CrossCorrelation> {
    if e.len() != r.len() {
        return Err(Error::LengthMismatch {
            what: "cross-correlation inputs",
            left: e.len(),
            right: r.len(),
        });
    }
    let n = e.len();
    if n < (2 * max_lag).max(2) {
        return Err(Error::TooShort {
            required: (2 * max_lag).max(2),
            actual: n,
        });
    }
    let es = standardize(e, "estimate")?;
    let rs = standardize(r, "reference")?;
    let m = max_lag as i64;
    let mut out = Vec::with_capacity(2 * max_lag + 1);
    for tau in -m..=m {
        let lo = 0.max(-tau) as usize;
        let hi = (n as i64).min(n as i64 - tau) as usize;
        let (mut num, mut ee, mut rr) = (0.0, 0.0, 0.0);
        for i in lo..hi {
            let a = es[(i as i64 + tau) as usize];
            let b = rs[i];
            num += a * b;
            ee += a * a;
            rr += b * b;
        }
        let den = (ee * rr).sqrt();
        out.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let mut best = 0usize;
    for (j, v) in out.iter().enumerate() {
        let cur = out[best].abs();
        let lag_j = (j as i64 - m).abs();
        let lag_b = (best as i64 - m).abs();
        if v.abs() > cur || (v.abs() == cur && lag_j < lag_b) {
            best = j;
        }
    }
    Ok(CrossCorrelation {
        max_lag,
        tau_star: best as i64 - m,
        r_max: out[best].abs(),
        r: out,
    })
}
