//! Analytic-signal envelope via the FFT.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_HILBERT_LEN: usize = 64;

/// Magnitude of the analytic signal of `x`.
///
/// The spectrum is zeroed at negative frequencies and doubled at positive
/// ones (DC and Nyquist kept single) before the inverse transform.
pub fn hilbert_envelope<T: Real>(x: &[T]) -> Result<Vec<T>> {
    let n = x.len();
    if n < MIN_HILBERT_LEN {
        return Err(Error::TooShort {
            required: MIN_HILBERT_LEN,
            actual: n,
        });
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v.f64(), 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    for (k, c) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n.is_multiple_of(2) && k == half) {
            1.0
        } else if k < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.iter().map(|c| T::of(c.norm() * scale)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn pure_tone_envelope() {
        let fs = 30.0;
        let x: Vec<f64> = (0..1800).map(|i| 2.0 * (TAU * i as f64 / fs).sin()).collect();
        let env = hilbert_envelope(&x).unwrap();
        for v in &env[30..1770] {
            assert!((v - 2.0).abs() < 0.04, "{v}");
        }
    }

    #[test]
    fn am_envelope() {
        let fs = 30.0;
        let n = 6000;
        let m = |t: f64| 1.0 + 0.5 * (TAU * 0.05 * t).sin();
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                m(t) * (TAU * t).sin()
            })
            .collect();
        let env = hilbert_envelope(&x).unwrap();
        for (i, e) in env.iter().enumerate().take(n - 600).skip(600) {
            let want = m(i as f64 / fs);
            assert!(((e - want) / want).abs() < 0.05);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        assert!(hilbert_envelope(&[0.0f32; 100]).unwrap().iter().all(|&v| v == 0.0));
        assert!(hilbert_envelope(&[0.0; 63]).is_err());
    }
}
