//! Daubechies-4 (8-tap) discrete wavelet transform with symmetric extension.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// db4 reconstruction low-pass filter.
pub const DB4_REC_LO: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn dec_lo() -> [f64; 8] {
    let mut f = DB4_REC_LO;
    f.reverse();
    f
}

fn rec_hi() -> [f64; 8] {
    let lo = dec_lo();
    std::array::from_fn(|k| if k % 2 == 0 { lo[k] } else { -lo[k] })
}

fn dec_hi() -> [f64; 8] {
    let mut f = rec_hi();
    f.reverse();
    f
}

/// Half-sample symmetric extension index, e.g. `x[-1] = x[0]`.
fn sym_index(k: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut k = k.rem_euclid(period);
    if k >= n {
        k = period - 1 - k;
    }
    k as usize
}

fn analysis(x: &[f64], filt: &[f64; 8]) -> Vec<f64> {
    let n = x.len();
    let f = filt.len();
    let out_len = (n + f - 1) / 2;
    (0..out_len)
        .map(|o| {
            let i = (2 * o + 1) as isize;
            filt.iter()
                .enumerate()
                .map(|(j, h)| h * x[sym_index(i - j as isize, n)])
                .sum()
        })
        .collect()
}

fn synthesis(c: &[f64], filt: &[f64; 8], out: &mut [f64]) {
    let f = filt.len();
    for (nn, y) in out.iter_mut().enumerate() {
        // y[n] = Σ_k c[k] filt[n + F - 2 - 2k]
        let base = nn + f - 2;
        let k_lo = base.saturating_sub(f - 1).div_ceil(2);
        let k_hi = (base / 2).min(c.len().saturating_sub(1));
        let mut acc = 0.0;
        for k in k_lo..=k_hi {
            if k < c.len() {
                acc += c[k] * filt[base - 2 * k];
            }
        }
        *y += acc;
    }
}

/// One analysis level: `(approximation, detail)`.
pub fn dwt(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (analysis(x, &dec_lo()), analysis(x, &dec_hi()))
}

/// One synthesis level; the output has `2·len − 6` samples.
pub fn idwt(approx: &[f64], detail: &[f64]) -> Vec<f64> {
    let len = (2 * approx.len()).saturating_sub(6);
    let mut out = vec![0.0; len];
    synthesis(approx, &DB4_REC_LO, &mut out);
    synthesis(detail, &rec_hi(), &mut out);
    out
}

/// Smallest level whose approximation band `fs / 2^(L+1)` is at or below `band_hz`.
pub fn approx_level(fs: f64, band_hz: f64) -> Result<usize> {
    if !(fs > 0.0 && band_hz > 0.0) {
        return Err(Error::param("sampling rate and band must be positive"));
    }
    let mut level = 1;
    while fs / 2f64.powi(level as i32 + 1) > band_hz {
        level += 1;
    }
    Ok(level)
}

/// Keeps only the level-`level` approximation: all details up to that level
/// are zeroed and the signal is reconstructed at the input length.
pub fn wavelet_approx<T: Real>(x: &[T], level: usize) -> Result<Vec<T>> {
    let required = 1usize << level;
    if x.len() < required {
        return Err(Error::TooShort {
            required,
            actual: x.len(),
        });
    }
    let mut lens = Vec::with_capacity(level);
    let mut a: Vec<f64> = x.iter().map(|v| v.f64()).collect();
    let lo = dec_lo();
    for _ in 0..level {
        lens.push(a.len());
        a = analysis(&a, &lo);
    }
    for &target in lens.iter().rev() {
        let mut out = vec![0.0; (2 * a.len()).saturating_sub(6)];
        synthesis(&a, &DB4_REC_LO, &mut out);
        out.truncate(target);
        a = out;
    }
    Ok(a.into_iter().map(T::of).collect())
}

/// Wavelet approximation at the level matched to `band_hz`.
pub fn dwt_approx<T: Real>(x: &[T], fs: f64, band_hz: f64) -> Result<Vec<T>> {
    wavelet_approx(x, approx_level(fs, band_hz)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn filter_bank_identities() {
        let s: f64 = DB4_REC_LO.iter().sum();
        assert!((s - std::f64::consts::SQRT_2).abs() < 1e-12);
        let e: f64 = DB4_REC_LO.iter().map(|v| v * v).sum();
        assert!((e - 1.0).abs() < 1e-12);
        assert!(rec_hi().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn perfect_reconstruction() {
        for n in [16usize, 17, 63, 200, 201] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin() + i as f64 * 0.01).collect();
            let (a, d) = dwt(&x);
            assert_eq!(a.len(), (n + 7) / 2);
            let mut y = idwt(&a, &d);
            assert!(y.len() == n || y.len() == n + 1);
            y.truncate(n);
            for (p, q) in y.iter().zip(&x) {
                assert!((p - q).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn level_for_thirty_hertz() {
        assert_eq!(approx_level(30.0, 0.05).unwrap(), 9);
        assert_eq!(approx_level(1.0, 0.05).unwrap(), 4);
    }

    #[test]
    fn constants_and_ramps() {
        let c = wavelet_approx(&vec![7.5f64; 1000], 9).unwrap();
        assert_eq!(c.len(), 1000);
        assert!(c.iter().all(|v| (v - 7.5).abs() < 1e-9));
        let r: Vec<f64> = (0..20000).map(|i| 100.0 + 0.01 * i as f64).collect();
        let y = wavelet_approx(&r, 9).unwrap();
        for i in 3000..17000 {
            assert!(((y[i] - r[i]) / r[i]).abs() < 1e-6, "{i}");
        }
    }

    #[test]
    fn separates_slow_and_fast() {
        let fs = 30.0;
        let n = 30 * 600;
        let slow: Vec<f64> = (0..n).map(|i| (TAU * 0.01 * i as f64 / fs).sin()).collect();
        let fast: Vec<f64> = (0..n).map(|i| (TAU * i as f64 / fs).sin()).collect();
        let x: Vec<f64> = slow.iter().zip(&fast).map(|(a, b)| a + b).collect();
        let y = dwt_approx(&x, fs, 0.05).unwrap();
        let yf = dwt_approx(&fast, fs, 0.05).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        assert!(rms(&yf) < 0.05 * rms(&fast));
        let (my, ms) = (
            y.iter().sum::<f64>() / n as f64,
            slow.iter().sum::<f64>() / n as f64,
        );
        let cov: f64 = y.iter().zip(&slow).map(|(a, b)| (a - my) * (b - ms)).sum();
        let vy: f64 = y.iter().map(|a| (a - my).powi(2)).sum();
        let vs: f64 = slow.iter().map(|b| (b - ms).powi(2)).sum();
        assert!(cov / (vy * vs).sqrt() > 0.99);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            wavelet_approx(&[1.0; 500], 9),
            Err(Error::TooShort { required: 512, actual: 500 })
        ));
    }
}
