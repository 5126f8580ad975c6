//! Slow sudomotor (EDA-like) trend extraction from a ROI temperature trace.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::{
    design_iir, dwt_approx, ema, filtfilt, hilbert_envelope, median_filter, moving_average,
    odd_window, savgol, FilterBand, FilterFamily,
};
use crate::error::{Error, Result};
use crate::model::{BiosignalEstimate, BiosignalKind, RoiTrace};
use crate::resample::MAX_BRIDGE_S;
use crate::scalar::Real;

/// Minimum amount of valid data, in seconds, for a trend.
pub const MIN_TREND_S: f64 = 60.0;
/// Rate of every emitted trend.
pub const TREND_RATE_HZ: f64 = 1.0;

/// One of the eight trend extractors with its fixed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum EdaMethod {
    ButterworthLp { cutoff_hz: f64, order: usize },
    BesselLp { cutoff_hz: f64, order: usize },
    SavGol { window_s: f64, order: usize },
    MovingAvg { window_s: f64 },
    /// Causal recurrence with `alpha = 2 / (N + 1)`, `N` the window in samples.
    ExpMovingAvg { window_s: f64 },
    MedianSavGol { median_s: f64, window_s: f64, order: usize },
    /// Band-pass, analytic envelope, then zero-phase low-pass.
    HilbertEnv {
        band_lo_hz: f64,
        band_hi_hz: f64,
        band_order: usize,
        cutoff_hz: f64,
        order: usize,
    },
    /// Daubechies-4 approximation at the level whose band reaches `band_hz`.
    WaveletApprox { band_hz: f64 },
}

impl EdaMethod {
    pub const BUTTERWORTH: Self = Self::ButterworthLp { cutoff_hz: 0.05, order: 3 };
    pub const BESSEL: Self = Self::BesselLp { cutoff_hz: 0.05, order: 3 };
    pub const SAVGOL: Self = Self::SavGol { window_s: 30.0, order: 3 };
    pub const MOVING_AVG: Self = Self::MovingAvg { window_s: 30.0 };
    pub const EXP_MOVING_AVG: Self = Self::ExpMovingAvg { window_s: 30.0 };
    pub const MEDIAN_SAVGOL: Self = Self::MedianSavGol { median_s: 5.0, window_s: 30.0, order: 3 };
    pub const HILBERT: Self = Self::HilbertEnv {
        band_lo_hz: 0.05,
        band_hi_hz: 3.0,
        band_order: 4,
        cutoff_hz: 0.05,
        order: 3,
    };
    pub const WAVELET: Self = Self::WaveletApprox { band_hz: 0.05 };

    /// Short identifier used in file names, CSV columns and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Self::ButterworthLp { .. } => "butterworth",
            Self::BesselLp { .. } => "bessel",
            Self::SavGol { .. } => "savgol",
            Self::MovingAvg { .. } => "mavg",
            Self::ExpMovingAvg { .. } => "ema",
            Self::MedianSavGol { .. } => "median_savgol",
            Self::HilbertEnv { .. } => "hilbert",
            Self::WaveletApprox { .. } => "wavelet",
        }
    }

    /// Whether the method is a linear operator on the trace.
    pub fn is_linear(&self) -> bool {
        !matches!(self, Self::HilbertEnv { .. } | Self::MedianSavGol { .. })
    }

    /// Smooths a gap-free trace at `fs` without decimating.
    pub fn smooth<T: Real>(&self, x: &[T], fs: f64) -> Result<Vec<T>> {
        match *self {
            Self::ButterworthLp { cutoff_hz, order } => lowpass(FilterFamily::Butterworth, x, fs, cutoff_hz, order),
            Self::BesselLp { cutoff_hz, order } => lowpass(FilterFamily::Bessel, x, fs, cutoff_hz, order),
            Self::SavGol { window_s, order } => savgol(x, window_s, order, fs),
            Self::MovingAvg { window_s } => moving_average(x, odd_window(window_s, fs)),
            Self::ExpMovingAvg { window_s } => {
                let n = (window_s * fs).round().max(1.0);
                ema(x, 2.0 / (n + 1.0))
            }
            Self::MedianSavGol { median_s, window_s, order } => {
                let m = median_filter(x, odd_window(median_s, fs))?;
                savgol(&m, window_s, order, fs)
            }
            Self::HilbertEnv { band_lo_hz, band_hi_hz, band_order, cutoff_hz, order } => {
                let bp = design_iir(
                    FilterFamily::Butterworth,
                    band_order,
                    FilterBand::Bandpass(band_lo_hz, band_hi_hz),
                    fs,
                )?;
                let env = hilbert_envelope(&filtfilt(&bp, x)?)?;
                lowpass(FilterFamily::Butterworth, &env, fs, cutoff_hz, order)
            }
            Self::WaveletApprox { band_hz } => dwt_approx(x, fs, band_hz),
        }
    }
}

fn lowpass<T: Real>(family: FilterFamily, x: &[T], fs: f64, fc: f64, order: usize) -> Result<Vec<T>> {
    filtfilt(&design_iir(family, order, FilterBand::Lowpass(fc), fs)?, x)
}

impl fmt::Display for EdaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        enumerate_methods()
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param(format!("unknown EDA method {s:?}")))
    }
}

/// The eight methods in their canonical order.
pub fn enumerate_methods() -> Vec<EdaMethod> {
    vec![
        EdaMethod::BUTTERWORTH,
        EdaMethod::BESSEL,
        EdaMethod::SAVGOL,
        EdaMethod::MOVING_AVG,
        EdaMethod::EXP_MOVING_AVG,
        EdaMethod::MEDIAN_SAVGOL,
        EdaMethod::HILBERT,
        EdaMethod::WAVELET,
    ]
}

/// Fills every invalid run by linear interpolation (holding the nearest
/// valid value at the ends). Returns the filled values and a mask in which
/// runs no longer than `max_gap` samples count as valid again.
pub(crate) fn bridge_gaps<T: Real>(values: &[T], valid: &[bool], max_gap: usize) -> (Vec<T>, Vec<bool>) {
    let n = values.len();
    let mut out: Vec<T> = values.to_vec();
    let mut mask = valid.to_vec();
    let mut i = 0;
    while i < n {
        if valid[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && !valid[i] {
            i += 1;
        }
        let prev = start.checked_sub(1);
        let next = (i < n).then_some(i);
        for (j, slot) in out.iter_mut().enumerate().take(i).skip(start) {
            *slot = match (prev, next) {
                (Some(p), Some(q)) => {
                    let w = (j - p) as f64 / (q - p) as f64;
                    T::of(values[p].f64() * (1.0 - w) + values[q].f64() * w)
                }
                (Some(p), None) => values[p],
                (None, Some(q)) => values[q],
                (None, None) => T::zero(),
            };
        }
        if prev.is_some() && next.is_some() && i - start <= max_gap {
            mask[start..i].iter_mut().for_each(|m| *m = true);
        }
    }
    (out, mask)
}

/// Extracts a 1 Hz trend from a ROI trace.
///
/// Gaps of at most two seconds are bridged by linear interpolation; longer
/// gaps are interpolated for the smoothers but stay invalid in the output.
pub fn extract_eda_trend<T: Real>(trace: &RoiTrace<T>, method: &EdaMethod) -> Result<BiosignalEstimate<T>> {
    let fs = trace.fps;
    let valid = trace.valid_count();
    if valid == 0 {
        return Err(Error::Empty("trace has no valid samples"));
    }
    let needed = (MIN_TREND_S * fs).ceil() as usize;
    if valid < needed {
        return Err(Error::TooShort {
            required: needed,
            actual: valid,
        });
    }
    if let Some(i) = trace
        .values
        .iter()
        .zip(&trace.valid)
        .position(|(v, &ok)| ok && !v.is_finite())
    {
        return Err(Error::NonFinite { index: i });
    }
    let max_gap = (MAX_BRIDGE_S * fs).floor() as usize;
    let (filled, mask) = bridge_gaps(&trace.values, &trace.valid, max_gap);
    let smooth = method.smooth(&filled, fs)?;
    let factor = ((fs / TREND_RATE_HZ).round() as usize).max(1);
    let values: Vec<T> = smooth.iter().step_by(factor).copied().collect();
    let valid: Vec<bool> = mask.iter().step_by(factor).copied().collect();
    Ok(BiosignalEstimate {
        kind: BiosignalKind::EdaTrend,
        rate_hz: fs / factor as f64,
        values,
        valid,
        t0: 0.0,
    })
}
