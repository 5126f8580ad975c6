//! Heart-rate and breathing-rate tracking: multi-ROI fusion, sliding-window
//! spectral peak tracking and rate post-processing.

use serde::{Deserialize, Serialize};

use crate::dsp::smooth::median_of;
use crate::dsp::{design_iir, filtfilt, parabolic_peak, FilterBand, FilterFamily, Welch};
use crate::eda::bridge_gaps;
use crate::error::{Error, Result};
use crate::model::{BiosignalEstimate, BiosignalKind, RoiKind, RoiTrace};
use crate::resample::MAX_BRIDGE_S;
use crate::scalar::Real;

/// Parameters of one rate chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimatorConfig {
    pub kind: BiosignalKind,
    /// Spectral search band, Hz.
    pub band: (f64, f64),
    pub window_s: f64,
    pub step_s: f64,
    /// Physiological range, bpm; estimates outside are invalidated.
    pub valid_bpm: (f64, f64),
    /// Longest invalid run (samples) that is bridged by interpolation.
    pub gap_max: usize,
    /// Running-median length applied over valid spans.
    pub median_len: Option<usize>,
    /// Zero-phase Butterworth band-pass applied to every input channel.
    pub prefilter: (f64, f64),
    pub filter_order: usize,
    /// Band-pass applied to the fused signal before tracking.
    pub pulse_band: Option<(f64, f64)>,
    /// Windows whose peak-to-median band power is below this are invalid.
    pub min_peak_ratio: f64,
    /// Windows with a smaller fraction of valid input samples are invalid.
    pub min_valid_fraction: f64,
}

impl RateEstimatorConfig {
    pub fn cardiac() -> Self {
        Self {
            kind: BiosignalKind::HeartRate,
            band: (1.0, 3.5),
            window_s: 15.0,
            step_s: 1.0,
            valid_bpm: (60.0, 180.0),
            gap_max: 10,
            median_len: Some(7),
            prefilter: (0.3, 4.0),
            filter_order: 4,
            pulse_band: Some((1.0, 3.5)),
            min_peak_ratio: 8.0,
            min_valid_fraction: 0.5,
        }
    }

    pub fn respiratory() -> Self {
        Self {
            kind: BiosignalKind::BreathingRate,
            band: (0.12, 0.55),
            window_s: 25.0,
            step_s: 1.0,
            valid_bpm: (7.0, 45.0),
            gap_max: 10,
            median_len: None,
            prefilter: (0.12, 2.0),
            filter_order: 4,
            pulse_band: None,
            min_peak_ratio: 0.0,
            min_valid_fraction: 0.5,
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        let nyq = fs / 2.0;
        let (lo, hi) = self.band;
        if !(lo > 0.0 && lo < hi && hi < nyq) {
            return Err(Error::param(format!("search band [{lo}, {hi}] Hz must lie in (0, {nyq})")));
        }
        if !(self.window_s > 2.0 / lo) {
            return Err(Error::param(format!(
                "window {} s must exceed two periods of the lowest band frequency ({} s)",
                self.window_s,
                2.0 / lo
            )));
        }
        if !(self.step_s > 0.0) {
            return Err(Error::param("step must be positive"));
        }
        if !(self.valid_bpm.0 < self.valid_bpm.1) {
            return Err(Error::param("valid bpm range is empty"));
        }
        if matches!(self.median_len, Some(k) if k % 2 == 0) {
            return Err(Error::param("median length must be odd"));
        }
        Ok(())
    }
}

/// Fused pulse signal and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct OmitOutput {
    pub signal: Vec<f64>,
    /// Index (in input order) of the channel whose residual was kept.
    pub selected: usize,
    /// The channel matrix was rank-deficient; `signal` is a raw channel.
    pub fallback: bool,
    /// Band peak-to-median ratio of each candidate, `None` when excluded.
    pub ratios: Vec<Option<f64>>,
}

const RANK_TOL: f64 = 1e-8;

fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return None;
    }
    let sd = var.sqrt();
    Some(x.iter().map(|v| (v - mean) / sd).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn band_ratio(x: &[f64], fs: f64, band: (f64, f64)) -> Result<f64> {
    let seg_window = ((15.0 * fs).round() as usize).min(x.len());
    let welch = Welch::for_window(fs, seg_window)?;
    let spec = welch.estimate(x)?;
    Ok(parabolic_peak(&spec, band.0, band.1)?.prominence)
}

/// Removes the dominant shared component from a set of channels and keeps
/// the residual with the strongest spectral peak in `band`.
///
/// Rows are standardized, so every channel has unit variance and the
/// variance ordering reduces to the caller's channel order: the first
/// channel's time-course spans the dominant component. The rest of the QR
/// factorization only serves to detect rank deficiency.
pub fn omit_fuse(channels: &[Vec<f64>], fs: f64, band: (f64, f64)) -> Result<OmitOutput> {
    if channels.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: channels.len(),
        });
    }
    let n = channels[0].len();
    if let Some(c) = channels.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            what: "fusion channels",
            left: n,
            right: c.len(),
        });
    }
    let rows: Vec<Option<Vec<f64>>> = channels.iter().map(|c| standardize(c)).collect();
    let full_rank = rows.iter().all(Option::is_some) && {
        // modified Gram-Schmidt on the standardized time-courses
        let mut basis: Vec<Vec<f64>> = Vec::new();
        rows.iter().flatten().all(|r| {
            let mut v = r.clone();
            for q in &basis {
                let p = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
            }
            let norm = dot(&v, &v).sqrt();
            let ok = norm > RANK_TOL * (n as f64).sqrt();
            if ok {
                v.iter_mut().for_each(|a| *a /= norm);
                basis.push(v);
            }
            ok
        })
    };
    if !full_rank {
        let mut ratios = Vec::with_capacity(channels.len());
        for r in &rows {
            ratios.push(match r {
                Some(r) => Some(band_ratio(r, fs, band)?),
                None => None,
            });
        }
        let selected = best(&ratios).unwrap_or(0);
        let signal = rows[selected].clone().unwrap_or_else(|| vec![0.0; n]);
        return Ok(OmitOutput {
            signal,
            selected,
            fallback: true,
            ratios,
        });
    }
    let rows: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    let n_sqrt = (n as f64).sqrt();
    let q: Vec<f64> = rows[0].iter().map(|v| v / n_sqrt).collect();
    let mut residuals = Vec::with_capacity(rows.len());
    let mut ratios = Vec::with_capacity(rows.len());
    for r in &rows {
        let p = dot(&q, r);
        let res: Vec<f64> = r.iter().zip(&q).map(|(a, b)| a - p * b).collect();
        let norm = dot(&res, &res).sqrt();
        ratios.push(if norm > RANK_TOL * n_sqrt {
            Some(band_ratio(&res, fs, band)?)
        } else {
            None
        });
        residuals.push(res);
    }
    let selected = best(&ratios).ok_or(Error::Empty("no usable fusion residual"))?;
    Ok(OmitOutput {
        signal: residuals.swap_remove(selected),
        selected,
        fallback: false,
        ratios,
    })
}

fn best(ratios: &[Option<f64>]) -> Option<usize> {
    let mut out: Option<usize> = None;
    for (i, r) in ratios.iter().enumerate() {
        if let Some(r) = r {
            if out.is_none_or(|b| *r > ratios[b].unwrap_or(f64::NEG_INFINITY)) {
                out = Some(i);
            }
        }
    }
    out
}

/// Sliding-window Welch peak tracking; one estimate per step in bpm,
/// timestamped at window centres. Nothing is range-filtered here.
pub fn estimate_rate_track<T: Real>(
    x: &[T],
    valid: &[bool],
    fs: f64,
    cfg: &RateEstimatorConfig,
) -> Result<BiosignalEstimate<T>> {
    cfg.validate(fs)?;
    if x.len() != valid.len() {
        return Err(Error::LengthMismatch {
            what: "signal vs valid mask",
            left: x.len(),
            right: valid.len(),
        });
    }
    let win = (cfg.window_s * fs).round() as usize;
    let step = ((cfg.step_s * fs).round() as usize).max(1);
    if x.len() < win {
        return Err(Error::TooShort {
            required: win,
            actual: x.len(),
        });
    }
    let welch = Welch::for_window(fs, win)?;
    let n_out = (x.len() - win) / step + 1;
    let mut values = Vec::with_capacity(n_out);
    let mut mask = Vec::with_capacity(n_out);
    let mut seg = Vec::with_capacity(win);
    for k in 0..n_out {
        let s = k * step;
        let ok = valid[s..s + win].iter().filter(|&&v| v).count();
        if (ok as f64) < cfg.min_valid_fraction * win as f64 {
            values.push(T::nan());
            mask.push(false);
            continue;
        }
        seg.clear();
        seg.extend(x[s..s + win].iter().map(|v| v.f64()));
        let spec = welch.estimate(&seg)?;
        let peak = parabolic_peak(&spec, cfg.band.0, cfg.band.1)?;
        values.push(T::of(60.0 * peak.freq));
        mask.push(!peak.at_edge && peak.prominence >= cfg.min_peak_ratio);
    }
    Ok(BiosignalEstimate {
        kind: cfg.kind,
        rate_hz: fs / step as f64,
        values,
        valid: mask,
        t0: (win as f64 / 2.0) / fs,
    })
}

/// Range filtering, short-gap interpolation and an optional running median
/// over each valid span.
pub fn postprocess_rates<T: Real>(raw: &BiosignalEstimate<T>, cfg: &RateEstimatorConfig) -> BiosignalEstimate<T> {
    let (lo, hi) = cfg.valid_bpm;
    let n = raw.len();
    let mut values: Vec<f64> = raw.values.iter().map(|v| v.f64()).collect();
    let mut valid: Vec<bool> = raw
        .valid
        .iter()
        .zip(&values)
        .map(|(&ok, &v)| ok && v.is_finite() && (lo..=hi).contains(&v))
        .collect();
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
        if start > 0 && i < n && i - start <= cfg.gap_max {
            let (a, b) = (values[start - 1], values[i]);
            let span = (i - start + 1) as f64;
            for j in start..i {
                let w = (j - start + 1) as f64 / span;
                values[j] = a + (b - a) * w;
                valid[j] = true;
            }
        }
    }
    if let Some(k) = cfg.median_len.filter(|&k| k > 1) {
        let h = k / 2;
        let src = values.clone();
        let mut buf = Vec::with_capacity(k);
        let mut s = 0;
        while s < n {
            if !valid[s] {
                s += 1;
                continue;
            }
            let mut e = s;
            while e < n && valid[e] {
                e += 1;
            }
            for j in s..e {
                buf.clear();
                buf.extend_from_slice(&src[j.saturating_sub(h).max(s)..(j + h + 1).min(e)]);
                values[j] = median_of(&mut buf);
            }
            s = e;
        }
    }
    for (v, &ok) in values.iter_mut().zip(&valid) {
        if !ok {
            *v = f64::NAN;
        }
    }
    BiosignalEstimate {
        kind: raw.kind,
        rate_hz: raw.rate_hz,
        values: values.into_iter().map(T::of).collect(),
        valid,
        t0: raw.t0,
    }
}

/// A rate estimate with the chain's diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RateOutput<T = f64> {
    pub estimate: BiosignalEstimate<T>,
    /// Channels that were expected but absent.
    pub missing: Vec<RoiKind>,
    /// ROI whose signal drove the estimate (cardiac fusion only).
    pub selected: Option<RoiKind>,
    pub fusion_fallback: bool,
}

struct Prepared {
    rois: Vec<RoiKind>,
    signals: Vec<Vec<f64>>,
    valid: Vec<bool>,
    fs: f64,
}

fn prepare<T: Real>(traces: &[RoiTrace<T>], wanted: &[RoiKind], cfg: &RateEstimatorConfig) -> Result<Prepared> {
    let found: Vec<&RoiTrace<T>> = wanted
        .iter()
        .filter_map(|k| traces.iter().find(|t| t.roi == *k))
        .collect();
    let Some(first) = found.first() else {
        return Err(Error::Empty("no usable ROI traces"));
    };
    let (fs, n) = (first.fps, first.len());
    let mut valid = vec![true; n];
    let mut signals = Vec::with_capacity(found.len());
    let filter = design_iir(
        FilterFamily::Butterworth,
        cfg.filter_order,
        FilterBand::Bandpass(cfg.prefilter.0, cfg.prefilter.1),
        fs,
    )?;
    for t in &found {
        if t.len() != n {
            return Err(Error::LengthMismatch {
                what: "ROI traces",
                left: n,
                right: t.len(),
            });
        }
        if (t.fps - fs).abs() > 1e-9 * fs {
            return Err(Error::param("ROI traces have different rates"));
        }
        if t.valid_count() == 0 {
            return Err(Error::Empty("ROI trace has no valid samples"));
        }
        let (filled, mask) = bridge_gaps(&t.values, &t.valid, (MAX_BRIDGE_S * fs).floor() as usize);
        let filled: Vec<f64> = filled.iter().map(|v| v.f64()).collect();
        if let Some(index) = filled.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        valid.iter_mut().zip(&mask).for_each(|(a, &b)| *a &= b);
        signals.push(filtfilt(&filter, &filled)?);
    }
    Ok(Prepared {
        rois: found.iter().map(|t| t.roi).collect(),
        signals,
        valid,
        fs,
    })
}

pub const HR_ROIS: [RoiKind; 4] = [RoiKind::Forehead, RoiKind::Nose, RoiKind::CheekL, RoiKind::CheekR];
pub const BR_ROIS: [RoiKind; 3] = [RoiKind::Nose, RoiKind::CheekL, RoiKind::CheekR];

/// Heart rate from the forehead, nose and cheek traces.
pub fn estimate_hr<T: Real>(traces: &[RoiTrace<T>], cfg: &RateEstimatorConfig) -> Result<RateOutput<T>> {
    let p = prepare(traces, &HR_ROIS, cfg)?;
    let missing: Vec<RoiKind> = HR_ROIS.iter().copied().filter(|k| !p.rois.contains(k)).collect();
    if p.rois.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: p.rois.len(),
        });
    }
    let min_valid = (30.0 * p.fs).ceil() as usize;
    let n_valid = p.valid.iter().filter(|&&v| v).count();
    if n_valid < min_valid {
        return Err(Error::TooShort {
            required: min_valid,
            actual: n_valid,
        });
    }
    let fused = omit_fuse(&p.signals, p.fs, cfg.band)?;
    let pulse = match cfg.pulse_band {
        Some((lo, hi)) => {
            let f = design_iir(FilterFamily::Butterworth, cfg.filter_order, FilterBand::Bandpass(lo, hi), p.fs)?;
            filtfilt(&f, &fused.signal)?
        }
        None => fused.signal,
    };
    let pulse: Vec<T> = pulse.into_iter().map(T::of).collect();
    let raw = estimate_rate_track(&pulse, &p.valid, p.fs, cfg)?;
    Ok(RateOutput {
        estimate: postprocess_rates(&raw, cfg),
        missing,
        selected: Some(p.rois[fused.selected]),
        fusion_fallback: fused.fallback,
    })
}

/// Breathing rate from the average of the nose and available cheek traces.
pub fn estimate_br<T: Real>(traces: &[RoiTrace<T>], cfg: &RateEstimatorConfig) -> Result<RateOutput<T>> {
    if !traces.iter().any(|t| t.roi == RoiKind::Nose) {
        return Err(Error::param("breathing rate needs a nose trace"));
    }
    let p = prepare(traces, &BR_ROIS, cfg)?;
    let missing: Vec<RoiKind> = BR_ROIS.iter().copied().filter(|k| !p.rois.contains(k)).collect();
    let n = p.valid.len();
    let k = p.signals.len() as f64;
    let avg: Vec<T> = (0..n)
        .map(|i| T::of(p.signals.iter().map(|s| s[i]).sum::<f64>() / k))
        .collect();
    let raw = estimate_rate_track(&avg, &p.valid, p.fs, cfg)?;
    Ok(RateOutput {
        estimate: postprocess_rates(&raw, cfg),
        missing,
        selected: None,
        fusion_fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    const FS: f64 = 30.0;

    fn tone(f: f64, secs: f64, amp: f64) -> Vec<f64> {
        (0..(secs * FS) as usize).map(|i| amp * (TAU * f * i as f64 / FS).sin()).collect()
    }

    fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn est(values: Vec<f64>, valid: Vec<bool>) -> BiosignalEstimate {
        BiosignalEstimate {
            kind: BiosignalKind::HeartRate,
            rate_hz: 1.0,
            values,
            valid,
            t0: 7.5,
        }
    }

    #[test]
    fn defaults_are_consistent() {
        RateEstimatorConfig::cardiac().validate(FS).unwrap();
        RateEstimatorConfig::respiratory().validate(FS).unwrap();
        let mut bad = RateEstimatorConfig::respiratory();
        bad.window_s = 10.0;
        assert!(bad.validate(FS).is_err());
    }

    #[test]
    fn tone_tracks() {
        let mut cfg = RateEstimatorConfig::cardiac();
        let x = tone(1.5, 120.0, 1.0);
        let r = estimate_rate_track(&x, &vec![true; x.len()], FS, &cfg).unwrap();
        assert_eq!(r.len(), 106);
        assert_eq!(r.t0, 7.5);
        assert!(r.valid.iter().all(|&v| v));
        assert!(r.values.iter().all(|v| (v - 90.0).abs() < 1.0));
        cfg = RateEstimatorConfig::respiratory();
        let x = tone(0.25, 120.0, 1.0);
        let r = estimate_rate_track(&x, &vec![true; x.len()], FS, &cfg).unwrap();
        assert!(r.values.iter().all(|v| (v - 15.0).abs() < 0.5));
    }

    #[test]
    fn white_noise_does_not_crash() {
        let cfg = RateEstimatorConfig::cardiac();
        let x = noise(3600, 1.0, 5);
        let r = estimate_rate_track(&x, &vec![true; 3600], FS, &cfg).unwrap();
        assert_eq!(r.len(), 106);
    }

    #[test]
    fn postprocess_interpolates_short_gaps() {
        let cfg = RateEstimatorConfig::cardiac();
        let out = postprocess_rates(&est(vec![72.0, 71.0, 250.0, 73.0], vec![true; 4]), &cfg);
        assert!(out.valid.iter().all(|&v| v));
        assert_eq!(out.values[2], 72.0);
    }

    #[test]
    fn postprocess_keeps_long_gaps() {
        let cfg = RateEstimatorConfig::cardiac();
        let mut v = vec![70.0; 30];
        v[5..17].iter_mut().for_each(|x| *x = 300.0);
        let out = postprocess_rates(&est(v, vec![true; 30]), &cfg);
        assert!(out.valid[5..17].iter().all(|&b| !b));
        assert!(out.valid[..5].iter().all(|&b| b) && out.valid[17..].iter().all(|&b| b));
        let out = postprocess_rates(&est(vec![70.0; 30], vec![true; 30]), &cfg);
        assert!(out.values.iter().all(|&x| x == 70.0));
    }

    #[test]
    fn omit_separates_shared_artifact() {
        let m = tone(0.5, 60.0, 1.0);
        let c = tone(1.2, 60.0, 1.0);
        let ch1: Vec<f64> = m.iter().zip(&c).map(|(a, b)| a + 0.1 * b).collect();
        let out = omit_fuse(&[m.clone(), ch1], FS, (0.3, 3.5)).unwrap();
        assert!(!out.fallback);
        assert_eq!(out.selected, 1);
        assert!(out.ratios[0].is_none());
        let w = Welch::for_window(FS, 450).unwrap();
        let s = w.estimate(&out.signal).unwrap();
        let at = |f: f64| s.power[(f / s.resolution).round() as usize];
        assert!(at(1.2) > 10.0 * at(0.5));
    }

    #[test]
    fn omit_identical_channels_fall_back() {
        let x = tone(1.1, 60.0, 1.0);
        let out = omit_fuse(&[x.clone(), x.clone(), x], FS, (1.0, 3.5)).unwrap();
        assert!(out.fallback);
        assert!(omit_fuse(&[tone(1.0, 60.0, 1.0)], FS, (1.0, 3.5)).is_err());
    }

    #[test]
    fn omit_finds_tone_among_noise() {
        let n = 1800;
        let t = tone(1.5, 60.0, 1.0);
        let a = noise(n, 1.0, 1);
        let b = noise(n, 1.0, 2);
        let pure: Vec<f64> = t.iter().zip(noise(n, 0.05, 3)).map(|(x, e)| x + e).collect();
        let out = omit_fuse(&[a, b, pure], FS, (1.0, 3.5)).unwrap();
        let w = Welch::for_window(FS, 450).unwrap();
        let s = w.estimate(&out.signal).unwrap();
        let p = parabolic_peak(&s, 1.0, 3.5).unwrap();
        assert!((p.freq - 1.5).abs() <= s.resolution);
    }

    #[test]
    fn br_needs_nose() {
        use crate::aggregate::AggregationKind;
        let t = RoiTrace::from_values(RoiKind::CheekL, AggregationKind::Mean, FS, tone(0.25, 120.0, 1.0));
        assert!(estimate_br(&[t], &RateEstimatorConfig::respiratory()).is_err());
    }
}
