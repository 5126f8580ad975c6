//! Resampling of irregularly-valid series onto a uniform timeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Invalid runs up to this duration are bridged by interpolation.
pub const MAX_BRIDGE_S: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    /// Natural cubic spline through the valid samples.
    #[default]
    CubicSpline,
    Linear,
    /// Zero-order hold of the previous valid sample.
    Hold,
}

impl ResampleMethod {
    pub fn min_samples(self) -> usize {
        match self {
            ResampleMethod::CubicSpline => 4,
            ResampleMethod::Linear => 2,
            ResampleMethod::Hold => 1,
        }
    }
}

/// A uniformly sampled series with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled<T = f64> {
    pub values: Vec<T>,
    pub valid: Vec<bool>,
    pub rate: f64,
}

/// Natural cubic spline on strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::LengthMismatch {
                what: "spline knots",
                left: n,
                right: y.len(),
            });
        }
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior second-derivative system.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let j = self.x.partition_point(|&v| v <= t).clamp(1, n - 1);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        a * self.y[j - 1]
            + b * self.y[j]
            + ((a * a * a - a) * self.m[j - 1] + (b * b * b - b) * self.m[j]) * h * h / 6.0
    }
}

/// Resamples `values` (at `rate` Hz, sample 0 at t = 0) onto a uniform grid at
/// `target_rate` covering the same span.
///
/// Only valid samples act as knots. Output samples inside an invalid run of at
/// most [`MAX_BRIDGE_S`] are interpolated and marked valid; those inside longer
/// runs, or outside the first/last valid sample, are marked invalid.
pub fn resample_to_timeline<T: Real>(
    values: &[T],
    valid: &[bool],
    rate: f64,
    target_rate: f64,
    method: ResampleMethod,
) -> Result<Sampled<T>> {
    if values.len() != valid.len() {
        return Err(Error::LengthMismatch {
            what: "values vs valid mask",
            left: values.len(),
            right: valid.len(),
        });
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::param(format!("source rate must be positive, got {rate}")));
    }
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(Error::param(format!(
            "target rate must be positive, got {target_rate}"
        )));
    }
    if let Some(index) = values
        .iter()
        .zip(valid)
        .position(|(v, &ok)| ok && !v.is_finite())
    {
        return Err(Error::NonFinite { index });
    }
    let knots: Vec<usize> = (0..values.len()).filter(|&i| valid[i]).collect();
    let needed = method.min_samples();
    if knots.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: knots.len(),
        });
    }

    let n = values.len();
    let ratio = rate / target_rate;
    let m = ((n - 1) as f64 / ratio + 1e-9).floor() as usize + 1;
    let max_gap = (MAX_BRIDGE_S * rate + 1e-9).floor() as usize;

    let spline = match method {
        ResampleMethod::CubicSpline => Some(CubicSpline::natural(
            knots.iter().map(|&i| i as f64).collect(),
            knots.iter().map(|&i| values[i].f64()).collect(),
        )?),
        _ => None,
    };

    let mut out = Vec::with_capacity(m);
    let mut out_valid = Vec::with_capacity(m);
    for j in 0..m {
        // position in source-sample units
        let t = j as f64 * ratio;
        let after = knots.partition_point(|&k| (k as f64) < t - 1e-9);
        let hit = after < knots.len() && ((knots[after] as f64) - t).abs() <= 1e-9;
        let (lo, hi) = if hit {
            (Some(knots[after]), Some(knots[after]))
        } else {
            (
                after.checked_sub(1).map(|i| knots[i]),
                knots.get(after).copied(),
            )
        };
        let ok = match (lo, hi) {
            (Some(a), Some(b)) => b - a <= 1 || b - a - 1 <= max_gap,
            _ => false,
        };
        let v = match method {
            ResampleMethod::CubicSpline => {
                let first = knots[0] as f64;
                let last = knots[knots.len() - 1] as f64;
                spline.as_ref().unwrap().eval(t.clamp(first, last))
            }
            ResampleMethod::Linear => match (lo, hi) {
                (Some(a), Some(b)) if a != b => {
                    let w = (t - a as f64) / (b - a) as f64;
                    values[a].f64() * (1.0 - w) + values[b].f64() * w
                }
                (Some(a), _) => values[a].f64(),
                (None, Some(b)) => values[b].f64(),
                (None, None) => unreachable!(),
            },
            ResampleMethod::Hold => match (lo, hi) {
                (Some(a), _) => values[a].f64(),
                (None, Some(b)) => values[b].f64(),
                (None, None) => unreachable!(),
            },
        };
        out.push(T::of(v));
        out_valid.push(ok);
    }
    Ok(Sampled {
        values: out,
        valid: out_valid,
        rate: target_rate,
    })
}

/// Decimation by an integer factor, keeping samples 0, factor, 2·factor, ...
pub fn decimate<T: Copy>(x: &[T], factor: usize) -> Vec<T> {
    x.iter().step_by(factor.max(1)).copied().collect()
}
