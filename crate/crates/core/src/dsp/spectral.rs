//! Welch power spectral density and parabolic peak refinement.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Grid spacing in Hz.
    pub resolution: f64,
}

impl Spectrum {
    /// Spectrum on the grid `k · resolution`, `k = 0..power.len()`.
    pub fn on_grid(power: Vec<f64>, resolution: f64) -> Self {
        let freqs = (0..power.len()).map(|k| k as f64 * resolution).collect();
        Self {
            freqs,
            power,
            resolution,
        }
    }

    /// Integral of the density over all bins.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution
    }

    /// Bin indices whose frequency lies within `[lo, hi]`.
    pub fn band_bins(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.freqs.partition_point(|&f| f < lo);
        let end = self.freqs.partition_point(|&f| f <= hi);
        start..end.max(start)
    }
}

/// A Welch estimator with a fixed segmentation, reusable across windows.
#[derive(Clone)]
pub struct Welch {
    fs: f64,
    seg_len: usize,
    step: usize,
    nfft: usize,
    window: Vec<f64>,
    scale: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Welch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Welch")
            .field("fs", &self.fs)
            .field("seg_len", &self.seg_len)
            .field("step", &self.step)
            .field("nfft", &self.nfft)
            .finish()
    }
}

impl Welch {
    pub fn new(fs: f64, seg_len: usize, overlap: f64, nfft: usize) -> Result<Self> {
        if !(fs > 0.0) {
            return Err(Error::param(format!("sampling rate must be positive, got {fs}")));
        }
        if seg_len < 2 {
            return Err(Error::param("Welch segments need at least 2 samples"));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::param(format!("overlap must be in [0, 1), got {overlap}")));
        }
        if nfft < seg_len {
            return Err(Error::param(format!("nfft {nfft} is shorter than the segment {seg_len}")));
        }
        let noverlap = ((seg_len as f64) * overlap).floor() as usize;
        let step = (seg_len - noverlap).max(1);
        // periodic Hann
        let window: Vec<f64> = (0..seg_len)
            .map(|i| 0.5 - 0.5 * (TAU * i as f64 / seg_len as f64).cos())
            .collect();
        let scale = 1.0 / (fs * window.iter().map(|w| w * w).sum::<f64>());
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(Self {
            fs,
            seg_len,
            step,
            nfft,
            window,
            scale,
            fft,
        })
    }

    /// Segment layout used inside sliding analysis windows: half-window
    /// segments, 50% overlap, nfft four times the next power of two.
    pub fn for_window(fs: f64, window_len: usize) -> Result<Self> {
        let seg = (window_len / 2).max(2);
        Self::new(fs, seg, 0.5, 4 * seg.next_power_of_two())
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn seg_len(&self) -> usize {
        self.seg_len
    }

    pub fn resolution(&self) -> f64 {
        self.fs / self.nfft as f64
    }

    pub fn estimate<T: Real>(&self, x: &[T]) -> Result<Spectrum> {
        if x.len() < self.seg_len {
            return Err(Error::TooShort {
                required: self.seg_len,
                actual: x.len(),
            });
        }
        let bins = self.nfft / 2 + 1;
        let mut acc = vec![0.0; bins];
        let mut buf = vec![Complex::new(0.0, 0.0); self.nfft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut segments = 0usize;
        let mut start = 0;
        while start + self.seg_len <= x.len() {
            let seg = &x[start..start + self.seg_len];
            let mean = seg.iter().map(|v| v.f64()).sum::<f64>() / self.seg_len as f64;
            for (b, (v, w)) in buf.iter_mut().zip(seg.iter().zip(&self.window)) {
                *b = Complex::new((v.f64() - mean) * w, 0.0);
            }
            for b in buf[self.seg_len..].iter_mut() {
                *b = Complex::new(0.0, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, c) in acc.iter_mut().zip(&buf) {
                *a += c.norm_sqr();
            }
            segments += 1;
            start += self.step;
        }
        let norm = self.scale / segments as f64;
        let nyquist = self.nfft.is_multiple_of(2);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || (nyquist && k == bins - 1) { 1.0 } else { 2.0 };
            *a *= norm * one_sided;
        }
        Ok(Spectrum::on_grid(acc, self.resolution()))
    }
}

/// Hann-windowed, constant-detrended, averaged periodogram with density scaling.
pub fn welch_psd<T: Real>(
    x: &[T],
    fs: f64,
    seg_len: usize,
    overlap: f64,
    nfft: usize,
) -> Result<Spectrum> {
    if seg_len > x.len() {
        return Err(Error::TooShort {
            required: seg_len,
            actual: x.len(),
        });
    }
    Welch::new(fs, seg_len, overlap, nfft)?.estimate(x)
}

/// Location of the dominant spectral peak within a band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq: f64,
    pub bin: usize,
    /// Sub-bin offset in `[-0.5, 0.5]`.
    pub delta: f64,
    /// False when the peak sits on a band edge or the parabola is degenerate.
    pub refined: bool,
    /// The argmax is the first or last bin of the band.
    pub at_edge: bool,
    pub power: f64,
    /// Peak power over the median power inside the band.
    pub prominence: f64,
}

const DEGENERATE: f64 = 1e-12;

/// Argmax bin within `[lo, hi]`, refined by the vertex of the parabola
/// through the log-power of its two neighbours.
pub fn parabolic_peak(spec: &Spectrum, lo: f64, hi: f64) -> Result<Peak> {
    if !(lo < hi) {
        return Err(Error::param(format!("empty band [{lo}, {hi}]")));
    }
    let last = spec.freqs.last().copied().unwrap_or(0.0);
    if lo < 0.0 || hi > last + 0.5 * spec.resolution {
        return Err(Error::param(format!(
            "band [{lo}, {hi}] Hz outside the spectrum range [0, {last}]"
        )));
    }
    let bins = spec.band_bins(lo, hi);
    if bins.len() < 3 {
        return Err(Error::param(format!(
            "band [{lo}, {hi}] Hz holds {} bins, need at least 3",
            bins.len()
        )));
    }
    let band = &spec.power[bins.clone()];
    let mut k = 0;
    for (i, &p) in band.iter().enumerate() {
        if p > band[k] {
            k = i;
        }
    }
    let mut sorted = band.to_vec();
    let median = super::smooth::median_of(&mut sorted);
    let power = band[k];
    let prominence = if median > 0.0 { power / median } else { f64::INFINITY };
    let bin = bins.start + k;
    let unrefined = Peak {
        freq: spec.freqs[bin],
        bin,
        delta: 0.0,
        refined: false,
        at_edge: k == 0 || k + 1 == band.len(),
        power,
        prominence,
    };
    if unrefined.at_edge {
        return Ok(unrefined);
    }
    let ln = |p: f64| p.max(f64::MIN_POSITIVE).ln();
    let (a, b, g) = (ln(band[k - 1]), ln(band[k]), ln(band[k + 1]));
    let denom = a - 2.0 * b + g;
    if denom.abs() < DEGENERATE {
        return Ok(unrefined);
    }
    let delta = (0.5 * (a - g) / denom).clamp(-0.5, 0.5);
    Ok(Peak {
        freq: (bin as f64 + delta) * spec.resolution,
        delta,
        refined: true,
        ..unrefined
    })
}
