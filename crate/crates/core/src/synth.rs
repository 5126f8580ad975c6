//! Synthetic sessions with known embedded physiology.
//!
//! All randomness comes from a ChaCha8 stream seeded with `SyntheticSpec::seed`;
//! draws happen in a fixed order (EDA source, per-ROI noise, per-ROI drift,
//! landmark jitter), so a seed fully determines the output.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationKind;
use crate::dsp::{design_iir, filtfilt, FilterBand, FilterFamily};
use crate::error::{Error, Result};
use crate::model::{
    AgeGroup, Condition, LandmarkTrack, Point, ReferenceSignal, RoiKind, RoiTrace, SessionMeta, Sex,
    ThermalFrameSequence,
};
use crate::roi::{canonical_frontal, derive_rois_with, RoiGeometry};

/// Rate (bpm) as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateProfile {
    Constant(f64),
    /// `(time_s, bpm)` knots, linear in between and held beyond the ends.
    Piecewise(Vec<(f64, f64)>),
    /// `mean + depth · sin(2π t / period_s)`.
    Modulated { mean: f64, depth: f64, period_s: f64 },
}

impl RateProfile {
    pub fn bpm_at(&self, t: f64) -> f64 {
        match self {
            RateProfile::Constant(b) => *b,
            RateProfile::Piecewise(knots) => match knots.as_slice() {
                [] => 0.0,
                [(_, b)] => *b,
                _ => {
                    let k = knots.partition_point(|&(kt, _)| kt <= t);
                    if k == 0 {
                        knots[0].1
                    } else if k == knots.len() {
                        knots[k - 1].1
                    } else {
                        let ((t0, b0), (t1, b1)) = (knots[k - 1], knots[k]);
                        b0 + (b1 - b0) * (t - t0) / (t1 - t0)
                    }
                }
            },
            RateProfile::Modulated { mean, depth, period_s } => mean + depth * (TAU * t / period_s).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RateProfile::Constant(b) if !(*b >= 0.0) => Err(Error::param("rate must be non-negative")),
            RateProfile::Piecewise(k) if k.is_empty() || k.windows(2).any(|w| !(w[1].0 > w[0].0)) => {
                Err(Error::param("piecewise rate knots must be non-empty with increasing times"))
            }
            RateProfile::Modulated { period_s, .. } if !(*period_s > 0.0) => {
                Err(Error::param("modulation period must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdaSpec {
    pub band_limit_hz: f64,
    pub amplitude: f64,
    /// +1 or −1: sign of the thermal expression relative to the reference.
    pub polarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmSpec {
    pub bpm: RateProfile,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub white_sigma: f64,
    /// Per-sample step of an independent random walk in every ROI.
    pub drift_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSpec {
    /// Amplitude of the sinusoidal artifact shared by every ROI.
    pub amplitude: f64,
    pub freq_hz: f64,
    pub landmark_jitter_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub duration_s: f64,
    pub fps: f64,
    pub seed: u64,
    /// Mean radiometric level of the face, counts.
    pub baseline: f64,
    pub eda: EdaSpec,
    pub cardiac: RhythmSpec,
    pub resp: RhythmSpec,
    pub noise: NoiseSpec,
    pub motion: MotionSpec,
    pub frame_width: usize,
    pub frame_height: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            duration_s: 300.0,
            fps: 7.5,
            seed: 0,
            baseline: 30000.0,
            eda: EdaSpec {
                band_limit_hz: 0.05,
                amplitude: 20.0,
                polarity: 1.0,
            },
            cardiac: RhythmSpec {
                bpm: RateProfile::Constant(72.0),
                amplitude: 0.5,
            },
            resp: RhythmSpec {
                bpm: RateProfile::Constant(15.0),
                amplitude: 5.0,
            },
            noise: NoiseSpec {
                white_sigma: 0.25,
                drift_sigma: 0.0,
            },
            motion: MotionSpec {
                amplitude: 5.0,
                freq_hz: 0.5,
                landmark_jitter_px: 0.0,
            },
            frame_width: 160,
            frame_height: 128,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s >= 60.0) {
            return Err(Error::param(format!("duration must be at least 60 s, got {}", self.duration_s)));
        }
        if !(self.fps > 0.0) {
            return Err(Error::param("fps must be positive"));
        }
        let amps = [
            self.eda.amplitude,
            self.cardiac.amplitude,
            self.resp.amplitude,
            self.noise.white_sigma,
            self.noise.drift_sigma,
            self.motion.amplitude,
            self.motion.landmark_jitter_px,
        ];
        if amps.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::param("amplitudes must be non-negative"));
        }
        if self.eda.polarity != 1.0 && self.eda.polarity != -1.0 {
            return Err(Error::param("EDA polarity must be +1 or -1"));
        }
        if !(self.eda.band_limit_hz > 0.0 && self.eda.band_limit_hz < self.fps / 2.0) {
            return Err(Error::param("EDA band limit must lie below Nyquist"));
        }
        self.cardiac.bpm.validate()?;
        self.resp.bpm.validate()
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }
}

/// Per-ROI weights of each embedded component, in `RoiKind::GEOMETRIC` order
/// (nose, eye_l, eye_r, cheek_l, cheek_r, forehead).
pub const EDA_GAIN: [f64; 6] = [1.0, 0.5, 0.5, 0.8, 0.8, 0.6];
pub const CARDIAC_GAIN: [f64; 6] = [0.3, 0.0, 0.0, 0.7, 0.55, 1.0];
pub const RESP_GAIN: [f64; 6] = [3.0, 0.0, 0.0, 1.0, 1.0, 0.0];
/// Static temperature offsets from the baseline, counts.
pub const ROI_OFFSET: [f64; 6] = [-150.0, 120.0, 110.0, 30.0, 20.0, 80.0];

/// Clean components before per-ROI weighting, one value per native sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    /// EDA trend with positive polarity (identical to the EDA reference).
    pub eda: Vec<f64>,
    pub cardiac: Vec<f64>,
    pub resp: Vec<f64>,
    pub motion: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub meta: SessionMeta,
    /// Six geometric ROI traces at the native rate.
    pub traces: Vec<RoiTrace<f64>>,
    /// `PEDA` (EDA trend at the native rate), `HR` and `BR` (1 Hz).
    pub references: Vec<ReferenceSignal>,
    pub landmarks: LandmarkTrack,
    pub components: Components,
}

fn phase_track(profile: &RateProfile, n: usize, fs: f64) -> Vec<f64> {
    let mut phase = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut prev = profile.bpm_at(0.0);
    for i in 0..n {
        if i > 0 {
            let cur = profile.bpm_at(i as f64 / fs);
            acc += TAU * 0.5 * (prev + cur) / 60.0 / fs;
            prev = cur;
        }
        phase.push(acc);
    }
    phase
}

fn rate_reference(name: &str, profile: &RateProfile, duration_s: f64) -> Result<ReferenceSignal> {
    let n = duration_s.floor() as usize + 1;
    let values = (0..n).map(|t| profile.bpm_at(t as f64)).collect();
    ReferenceSignal::uniform(name, "bpm", 1.0, 0.0, values)
}

/// Band-limited, standardized EDA source drawn from `rng`.
fn eda_source(rng: &mut ChaCha8Rng, n: usize, fs: f64, band_limit_hz: f64) -> Result<Vec<f64>> {
    let white: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let lp = design_iir(FilterFamily::Butterworth, 4, FilterBand::Lowpass(0.6 * band_limit_hz), fs)?;
    let slow = filtfilt(&lp, &white)?;
    let mean = slow.iter().sum::<f64>() / n as f64;
    let sd = (slow.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    Ok(slow.iter().map(|v| (v - mean) / sd).collect())
}

pub fn gen_session(spec: &SyntheticSpec) -> Result<SyntheticSession> {
    spec.validate()?;
    let n = spec.n_samples();
    let fs = spec.fps;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let eda: Vec<f64> = eda_source(&mut rng, n, fs, spec.eda.band_limit_hz)?
        .into_iter()
        .map(|v| spec.eda.amplitude * v)
        .collect();
    let cardiac: Vec<f64> = phase_track(&spec.cardiac.bpm, n, fs)
        .iter()
        .map(|p| spec.cardiac.amplitude * (p.sin() + 0.3 * (2.0 * p).sin()))
        .collect();
    let resp: Vec<f64> = phase_track(&spec.resp.bpm, n, fs)
        .iter()
        .map(|p| spec.resp.amplitude * p.sin())
        .collect();
    let motion: Vec<f64> = (0..n)
        .map(|i| spec.motion.amplitude * (TAU * spec.motion.freq_hz * i as f64 / fs).sin())
        .collect();

    let mut white = Vec::with_capacity(6);
    for _ in 0..6 {
        let z: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                spec.noise.white_sigma * v
            })
            .collect();
        white.push(z);
    }
    let mut drift = Vec::with_capacity(6);
    for _ in 0..6 {
        let mut acc = 0.0;
        let d: Vec<f64> = (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                acc += spec.noise.drift_sigma * v;
                acc
            })
            .collect();
        drift.push(d);
    }

    let traces = RoiKind::GEOMETRIC
        .iter()
        .enumerate()
        .map(|(r, &roi)| {
            let values = (0..n)
                .map(|i| {
                    spec.baseline
                        + ROI_OFFSET[r]
                        + spec.eda.polarity * EDA_GAIN[r] * eda[i]
                        + CARDIAC_GAIN[r] * cardiac[i]
                        + RESP_GAIN[r] * resp[i]
                        + motion[i]
                        + white[r][i]
                        + drift[r][i]
                })
                .collect();
            RoiTrace::from_values(roi, AggregationKind::Mean, fs, values)
        })
        .collect();

    let landmarks = jittered_track(
        n,
        (spec.frame_width, spec.frame_height),
        spec.motion.landmark_jitter_px,
        &mut rng,
    )?;
    let references = vec![
        ReferenceSignal::uniform("PEDA", "a.u.", fs, 0.0, eda.clone())?,
        rate_reference("HR", &spec.cardiac.bpm, spec.duration_s)?,
        rate_reference("BR", &spec.resp.bpm, spec.duration_s)?,
    ];
    Ok(SyntheticSession {
        meta: SessionMeta {
            session_id: format!("synth_{}", spec.seed),
            subject_id: format!("S{}", spec.seed),
            condition: Condition::Other("SYN".into()),
            sex: Sex::Unknown,
            age_group: AgeGroup::Unknown,
        },
        traces,
        references,
        landmarks,
        components: Components {
            eda,
            cardiac,
            resp,
            motion,
        },
    })
}

fn jittered_track(n: usize, dims: (usize, usize), sigma: f64, rng: &mut ChaCha8Rng) -> Result<LandmarkTrack> {
    let jitter = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::param(e.to_string()))?;
    let frames = (0..n)
        .map(|f| {
            let mut lf = canonical_frontal(dims.0, dims.1, f);
            if sigma > 0.0 {
                for p in lf.points.iter_mut() {
                    *p = Point::new(p.x + jitter.sample(rng), p.y + jitter.sample(rng));
                }
            }
            lf
        })
        .collect();
    LandmarkTrack::new(frames)
}

/// Frame rendering options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub width: usize,
    pub height: usize,
    /// Level outside the regions; defaults to the mean of all traces.
    pub background: Option<f64>,
    pub pixel_noise: f64,
    /// Gaussian jitter applied to the returned landmark coordinates only.
    pub landmark_jitter_px: f64,
    pub seed: u64,
    pub geometry: RoiGeometry,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            width: 160,
            height: 128,
            background: None,
            pixel_noise: 0.0,
            landmark_jitter_px: 0.0,
            seed: 0,
            geometry: RoiGeometry::default(),
        }
    }
}

const MIN_RECT_PX: usize = 3;

/// Paints each geometric trace into its region of the canonical frontal
/// layout over a constant background.
pub fn render_frames(traces: &[RoiTrace<f64>], spec: &RenderSpec) -> Result<(ThermalFrameSequence, LandmarkTrack)> {
    let first = traces.first().ok_or(Error::Empty("no traces to render"))?;
    let (n, fps) = (first.len(), first.fps);
    for t in traces {
        if t.len() != n {
            return Err(Error::LengthMismatch {
                what: "rendered traces",
                left: n,
                right: t.len(),
            });
        }
        if t.roi.is_derived() {
            return Err(Error::param(format!("cannot render derived region {}", t.roi)));
        }
    }
    let (w, h) = (spec.width, spec.height);
    let layout = derive_rois_with(&canonical_frontal(w, h, 0), (w, h), &spec.geometry)?;
    let mut rects = Vec::with_capacity(traces.len());
    for t in traces {
        let gi = t.roi.geometric_index().expect("geometric roi");
        match layout[gi] {
            Some(r) if r.w >= MIN_RECT_PX && r.h >= MIN_RECT_PX => rects.push(r),
            _ => {
                return Err(Error::param(format!(
                    "frame {w}x{h} is too small for the {} region of the face layout",
                    t.roi
                )))
            }
        }
    }
    for (i, a) in rects.iter().enumerate() {
        if rects[i + 1..].iter().any(|b| a.overlaps(b)) {
            return Err(Error::param(format!("frame {w}x{h} is too small: regions overlap")));
        }
    }
    let background = spec.background.unwrap_or_else(|| {
        let (sum, cnt) = traces
            .iter()
            .flat_map(|t| t.values.iter().zip(&t.valid).filter(|(_, &ok)| ok))
            .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
        if cnt == 0 {
            0.0
        } else {
            sum / cnt as f64
        }
    });
    let to_u16 = |v: f64, frame: usize, what: &str| -> Result<u16> {
        let r = v.round();
        if !(0.0..=65535.0).contains(&r) {
            return Err(Error::param(format!(
                "value {v} in {what} at frame {frame} is outside the 16-bit range"
            )));
        }
        Ok(r as u16)
    };
    let bg = to_u16(background, 0, "background")?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.pixel_noise.max(0.0)).map_err(|e| Error::param(e.to_string()))?;
    let mut frames = Vec::with_capacity(n);
    for f in 0..n {
        let mut frame = vec![bg; w * h];
        for (t, r) in traces.iter().zip(&rects) {
            if !t.valid[f] {
                continue;
            }
            let v = t.values[f];
            for y in r.y..r.y + r.h {
                for x in r.x..r.x + r.w {
                    let px = if spec.pixel_noise > 0.0 { v + noise.sample(&mut rng) } else { v };
                    frame[y * w + x] = to_u16(px, f, t.roi.as_str())?;
                }
            }
        }
        frames.push(frame);
    }
    let seq = ThermalFrameSequence::new(w, h, frames, fps, None)?;
    let track = jittered_track(n, (w, h), spec.landmark_jitter_px, &mut rng)?;
    Ok((seq, track))
}
