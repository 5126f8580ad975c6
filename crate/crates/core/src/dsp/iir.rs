//! Butterworth and Bessel IIR design (analog prototype, pre-warped bilinear
//! transform) and forward-backward zero-phase filtering.
//!
//! Filters are realised as cascaded second-order sections for filtering; the
//! expanded transfer function `b`/`a` is kept alongside for inspection.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{narrow, widen, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFamily {
    Butterworth,
    /// Bessel–Thomson, cutoff normalised to the −3 dB point.
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterBand {
    Lowpass(f64),
    Bandpass(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub family: FilterFamily,
    pub order: usize,
    pub band: FilterBand,
    pub fs: f64,
}

/// One biquad `[b0, b1, b2] / [1, a1, a2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z1: Complex64) -> Complex64 {
        // z1 = z^-1
        let num = self.b[0] + z1 * (self.b[1] + z1 * self.b[2]);
        let den = self.a[0] + z1 * (self.a[1] + z1 * self.a[2]);
        num / den
    }

    /// Steady-state direct-form-II-transposed state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let y = self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>();
        let z2 = self.b[2] - self.a[2] * y;
        let z1 = self.b[1] - self.a[1] * y + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    /// Feed-forward coefficients in ascending powers of z^-1.
    pub b: Vec<f64>,
    /// Feedback coefficients, `a[0] == 1`.
    pub a: Vec<f64>,
    pub sections: Vec<Biquad>,
    pub poles: Vec<Complex64>,
    pub design: FilterDesign,
}

impl IirFilter {
    pub fn max_pole_modulus(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Complex response at `f` Hz evaluated on the cascaded sections.
    pub fn response(&self, f: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / self.design.fs);
        self.sections.iter().map(|s| s.response(z1)).product()
    }

    /// Complex response at `f` Hz evaluated on the expanded `b`/`a` polynomials.
    pub fn response_ba(&self, f: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f / self.design.fs);
        let horner = |c: &[f64]| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z1 + v);
        horner(&self.b) / horner(&self.a)
    }

    pub fn magnitude(&self, f: f64) -> f64 {
        self.response(f).norm()
    }

    /// Reflection padding length used by [`filtfilt`].
    pub fn padlen(&self) -> usize {
        3 * (self.a.len().max(self.b.len()) - 1)
    }

    /// Causal single pass with zero initial state.
    pub fn apply<T: Real>(&self, x: &[T]) -> Vec<T> {
        let mut y = widen(x);
        for s in &self.sections {
            biquad_run(s, &mut y, [0.0, 0.0]);
        }
        narrow(y)
    }
}

pub fn butterworth_prototype(order: usize) -> Vec<Complex64> {
    let n = order as f64;
    (0..order)
        .map(|k| Complex64::from_polar(1.0, PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n)))
        .collect()
}

/// Poles of the Bessel prototype scaled so that |H(j·1)| = 1/√2.
pub fn bessel_prototype(order: usize) -> Vec<Complex64> {
    // reverse Bessel polynomial, ascending coefficients
    let n = order;
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, v| acc * v as f64);
    let coeffs: Vec<f64> = (0..=n)
        .map(|k| fact(2 * n - k) / (2f64.powi((n - k) as i32) * fact(k) * fact(n - k)))
        .collect();
    let roots = poly_roots(&coeffs);
    let theta0 = coeffs[0];
    let mag2 = |w: f64| {
        let s = Complex64::new(0.0, w);
        let v = coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c);
        theta0 * theta0 / v.norm_sqr()
    };
    // |H| decreases monotonically in w
    let (mut lo, mut hi) = (1e-3f64, 1e3f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mag2(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w3 = (lo * hi).sqrt();
    roots.into_iter().map(|r| r / w3).collect()
}

/// Roots of a real polynomial with ascending coefficients (Aberth–Ehrlich).
fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let c: Vec<f64> = coeffs.iter().map(|v| v / lead).collect();
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &v in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + v;
        }
        (p, dp)
    };
    let radius = 1.0 + c[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            let ratio = p / dp;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            z[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    (2.0 * fs + s) / (2.0 * fs - s)
}

fn prewarp(f: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * f / fs).tan()
}

/// Designs a low-pass or band-pass filter of the given family and prototype
/// order. Band-pass designs have twice the prototype order.
pub fn design_iir(family: FilterFamily, order: usize, band: FilterBand, fs: f64) -> Result<IirFilter> {
    if order < 1 {
        return Err(Error::param("filter order must be >= 1"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::param(format!("fs must be positive, got {fs}")));
    }
    let nyq = fs / 2.0;
    let check = |f: f64| {
        if f > 0.0 && f < nyq {
            Ok(())
        } else {
            Err(Error::param(format!("cutoff {f} Hz outside (0, {nyq}) Hz")))
        }
    };
    let proto = match family {
        FilterFamily::Butterworth => butterworth_prototype(order),
        FilterFamily::Bessel => bessel_prototype(order),
    };

    let (digital_poles, zeros_at_one, zeros_at_minus_one, ref_z1) = match band {
        FilterBand::Lowpass(fc) => {
            check(fc)?;
            let wc = prewarp(fc, fs);
            let poles: Vec<Complex64> = proto.iter().map(|&p| bilinear(p * wc, fs)).collect();
            (poles, 0, order, Complex64::new(1.0, 0.0))
        }
        FilterBand::Bandpass(lo, hi) => {
            check(lo)?;
            check(hi)?;
            if lo >= hi {
                return Err(Error::param(format!("band-pass edges must satisfy {lo} < {hi}")));
            }
            let (w1, w2) = (prewarp(lo, fs), prewarp(hi, fs));
            let bw = w2 - w1;
            let w0 = (w1 * w2).sqrt();
            let mut poles = Vec::with_capacity(2 * order);
            for &p in &proto {
                let half = p * bw / 2.0;
                let disc = (half * half - w0 * w0).sqrt();
                poles.push(bilinear(half + disc, fs));
                poles.push(bilinear(half - disc, fs));
            }
            let omega0 = 2.0 * (w0 / (2.0 * fs)).atan();
            (poles, order, order, Complex64::from_polar(1.0, -omega0))
        }
    };

    let sections = build_sections(&digital_poles, zeros_at_one, zeros_at_minus_one, ref_z1);
    let mut b = vec![1.0];
    let mut a = vec![1.0];
    for s in &sections {
        let len = if s.a[2] == 0.0 && s.b[2] == 0.0 { 2 } else { 3 };
        b = poly_mul(&b, &s.b[..len]);
        a = poly_mul(&a, &s.a[..len]);
    }
    let filter = IirFilter {
        b,
        a,
        sections,
        poles: digital_poles,
        design: FilterDesign {
            family,
            order,
            band,
            fs,
        },
    };
    let m = filter.max_pole_modulus();
    if !(m < 1.0 - 1e-9) {
        return Err(Error::Unstable(m));
    }
    Ok(filter)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Groups conjugate pole pairs (and leftover real poles) into biquads, each
/// normalised to unit magnitude at the reference point `ref_z1` (z^-1).
fn build_sections(
    poles: &[Complex64],
    mut zeros_at_one: usize,
    mut zeros_at_minus_one: usize,
    ref_z1: Complex64,
) -> Vec<Biquad> {
    const REAL_TOL: f64 = 1e-10;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > REAL_TOL).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= REAL_TOL)
        .map(|p| p.re)
        .collect();
    complex.sort_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.im.total_cmp(&y.im)));
    real.sort_by(f64::total_cmp);

    let mut denoms: Vec<[f64; 3]> = complex
        .iter()
        .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    for pair in real.chunks(2) {
        match pair {
            [p1, p2] => denoms.push([1.0, -(p1 + p2), p1 * p2]),
            [p] => denoms.push([1.0, -p, 0.0]),
            _ => unreachable!(),
        }
    }

    // band-pass sections each get one zero at z = -1 and one at z = 1
    let mut take_zero = || {
        if zeros_at_minus_one > 0 && zeros_at_minus_one >= zeros_at_one {
            zeros_at_minus_one -= 1;
            Some(-1.0)
        } else if zeros_at_one > 0 {
            zeros_at_one -= 1;
            Some(1.0)
        } else {
            None
        }
    };
    denoms
        .into_iter()
        .map(|a| {
            let second_order = a[2] != 0.0;
            let mut b = [1.0, 0.0, 0.0];
            let z1 = take_zero();
            let z2 = if second_order { take_zero() } else { None };
            for z in [z1, z2].into_iter().flatten() {
                // multiply by (1 - z * q) where q = z^-1
                b = [b[0], b[1] - z * b[0], b[2] - z * b[1]];
            }
            let mut s = Biquad { b, a };
            let g = s.response(ref_z1).norm();
            for v in s.b.iter_mut() {
                *v /= g;
            }
            s
        })
        .collect()
}

fn biquad_run(s: &Biquad, x: &mut [f64], mut z: [f64; 2]) {
    let [b0, b1, b2] = s.b;
    let [_, a1, a2] = s.a;
    for v in x.iter_mut() {
        let xin = *v;
        let y = b0 * xin + z[0];
        z[0] = b1 * xin - a1 * y + z[1];
        z[1] = b2 * xin - a2 * y;
        *v = y;
    }
}

fn sos_pass(sections: &[Biquad], x: &mut [f64]) {
    let x0 = x[0];
    let mut gain = 1.0;
    for s in sections {
        let zi = s.step_state();
        biquad_run(s, x, [zi[0] * gain * x0, zi[1] * gain * x0]);
        gain *= s.dc_gain();
    }
}

/// Zero-phase forward-backward filtering with odd reflection padding of
/// [`IirFilter::padlen`] samples at each end and steady-state initial
/// conditions. The effective magnitude response is |H|².
pub fn filtfilt<T: Real>(filter: &IirFilter, x: &[T]) -> Result<Vec<T>> {
    Ok(narrow(filtfilt_f64(filter, &widen(x))?))
}

pub(crate) fn filtfilt_f64(filter: &IirFilter, x: &[f64]) -> Result<Vec<f64>> {
    let pad = filter.padlen();
    let n = x.len();
    if n <= pad {
        return Err(Error::TooShort {
            required: pad + 1,
            actual: n,
        });
    }
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    sos_pass(&filter.sections, &mut ext);
    ext.reverse();
    sos_pass(&filter.sections, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}
